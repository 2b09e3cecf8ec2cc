#!/usr/bin/env python3
"""From a continuous transition stream to a windowed metric series.

Pipeline: run the synthetic linear loop, freeze z-score statistics on a
calibration prefix, map every variable into three equal-width bins over
[-3, 3] sigma, combine each variable group positionally into one composite
symbol, then slide a 300-step window (stride 50) and print the metric
trajectory.
"""

import numpy as np

from idt import (
    Perturbation,
    WindowSpec,
    default_linear_config,
    discretize_stream,
    fit_discretizer,
    run_linear_loop,
    stream_metrics,
    suite_grouping,
)

config = default_linear_config(seed=3)
run = run_linear_loop(config, Perturbation.none(onset_episode=1), episodes=10)
print(f"generated {len(run.transitions)} transitions "
      f"({config.state_dim} state dims, {config.action_dim} action dims)")

calibration = run.transitions[:2000]
params = fit_discretizer(calibration, bins=3, clip=3.0)
print(f"frozen z-score parameters on {len(calibration)} steps; "
      f"sigma range [{params.sigma.min():.4f}, {params.sigma.max():.4f}]")

grouping = suite_grouping()
print(f"grouping: state groups {grouping.state_groups}, action groups {grouping.action_groups}")

symbols = discretize_stream(run.transitions, params, grouping)
print(f"example composite symbols at t=0: s={symbols[0].s_sym} a={symbols[0].a_sym}")

spec = WindowSpec(length=300, stride=50)
series = stream_metrics(symbols, spec)
print(f"\n{len(series)} windows of {spec.length} steps, stride {spec.stride}:")
print(f"{'win':>4} {'steps':>13} {'P':>7} {'Hf':>7} {'Hb':>7} {'dH':>8} {'reward':>8}")
for wm in series[::10]:
    print(f"{wm.window_index:>4} {wm.t_start:>6}-{wm.t_end:<6} "
          f"{wm.P:>7.4f} {wm.Hf:>7.3f} {wm.Hb:>7.3f} {wm.dH:>8.3f} {wm.reward_mean:>8.4f}")

P = np.array([w.P for w in series])
print(f"\nP is stable on the nominal loop: mean {P.mean():.4f}, "
      f"coefficient of variation {P.std() / P.mean():.3f}")
dH = np.array([w.dH for w in series])
print(f"dH mean {dH.mean():+.3f}: backward inference is harder than forward "
      f"prediction in this loop (committed actions constrain the past less than")
print("dynamics constrain the future here; the sign is loop-specific).")
