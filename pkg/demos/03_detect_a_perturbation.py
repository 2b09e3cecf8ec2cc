#!/usr/bin/env python3
"""One detection trial, end to end.

Actuator noise switches on at episode 51 of 52. The monitor calibrates
per-channel baselines on the windows that end before onset, then flags the
first post-onset window where any channel leaves its +/-3 sigma band. The
reward channel runs under the identical protocol for comparison but never
joins the union.
"""

from idt import (
    Channel,
    Perturbation,
    PerturbationKind,
    Side,
    WindowSpec,
    calibrate,
    default_linear_config,
    detect,
    discretize_stream,
    fit_discretizer,
    perturbation_onset_step,
    run_linear_loop,
    stream_metrics,
    suite_grouping,
)

config = default_linear_config(seed=0)
perturbation = Perturbation(
    kind=PerturbationKind.ACTION_NOISE, magnitude=0.03, onset_episode=51, side=Side.AGENT
)
run = run_linear_loop(config, perturbation, episodes=52)
onset_step = perturbation_onset_step(perturbation, config.episode_length)
print(f"{len(run.transitions)} steps; {perturbation.kind.value} x{perturbation.magnitude} "
      f"from step {onset_step}")

params = fit_discretizer(run.transitions[:onset_step])
symbols = discretize_stream(run.transitions, params, suite_grouping())
series = stream_metrics(symbols, WindowSpec(length=300, stride=50))

baseline_windows = [w for w in series if w.t_end < onset_step]
onset_window = next(i for i, w in enumerate(series) if w.t_end >= onset_step)
model = calibrate(baseline_windows, threshold=3.0)
print(f"calibrated on {len(baseline_windows)} windows; onset is window {onset_window}")
for ch in (Channel.P, Channel.HF, Channel.HB, Channel.DH, Channel.REWARD):
    st = model.stats(ch)
    print(f"  {ch.value:<7} baseline {st.mu:+.4f} +/- {st.sigma:.5f}")

outcome = detect(series, model, onset_window=onset_window)
print("\nper-channel outcome:")
for ch, oc in outcome.channels.items():
    if oc.detected:
        ev = oc.event
        print(f"  {ch.value:<7} detected at latency {oc.latency_windows:>3} windows "
              f"(z = {ev.z:+.1f}, {ev.direction.value})")
    else:
        print(f"  {ch.value:<7} no detection")
print(f"\nunion: detected={outcome.union.detected} "
      f"latency={outcome.union.latency_windows} windows")
print("The information channels see the coupling change while the windowed")
print("reward barely moves: the silent-degradation regime this monitor targets.")
