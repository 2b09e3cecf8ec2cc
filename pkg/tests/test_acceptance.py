"""Acceptance gate: every primary criterion, at its stated tolerance.

Each test prints one [ACCEPTANCE n] PASS/FAIL line (run with `pytest -s` to
see them on success). Criteria with runtime bounds time themselves and fail
if they exceed the budget.
"""

import itertools
import json
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

import idt
from idt import (
    BaselineModel,
    Channel,
    ChannelStats,
    JointMode,
    Perturbation,
    SymbolizedTransition,
    WindowMetrics,
    WindowSpec,
    default_suite,
    all_none_suite,
    detect,
    exact_metrics,
    random_discrete_config,
    run_benchmark,
    run_discrete_loop,
    stationary_joint,
    stream_metrics,
    summarize,
    window_metrics,
)
from idt.detector import UNION_CHANNELS
from conftest import assert_window_identities, copy_stream, iid_stream, symbol_stream


@contextmanager
def criterion(num, description):
    try:
        yield
    except Exception:
        print(f"\n[ACCEPTANCE {num}] FAIL - {description}", flush=True)
        raise
    print(f"\n[ACCEPTANCE {num}] PASS - {description}", flush=True)


# ---------------------------------------------------------------------------
# shared fuzz battery: randomized + adversarial streams (used by 1 and 3)


def _fuzz_stream(rng, n):
    pattern = rng.integers(0, 6)
    n_state_groups = int(rng.integers(1, 3))
    n_action_groups = int(rng.integers(1, 3))

    def columns(k_groups, alphabet):
        return [rng.integers(0, alphabet, size=n) for _ in range(k_groups)]

    alphabet = int(rng.integers(2, 7))
    if pattern == 0:  # independent uniform
        s = columns(n_state_groups, alphabet)
        a = columns(n_action_groups, alphabet)
        nxt = columns(n_state_groups, alphabet)
    elif pattern == 1:  # copy loop
        s = columns(n_state_groups, alphabet)
        a = [np.zeros(n, dtype=int) for _ in range(n_action_groups)]
        nxt = [c.copy() for c in s]
    elif pattern == 2:  # constant everything
        s = [np.zeros(n, dtype=int) for _ in range(n_state_groups)]
        a = [np.zeros(n, dtype=int) for _ in range(n_action_groups)]
        nxt = [np.zeros(n, dtype=int) for _ in range(n_state_groups)]
    elif pattern == 3:  # deterministic map s' = f(s, a)
        s = columns(n_state_groups, alphabet)
        a = columns(n_action_groups, alphabet)
        nxt = [(s[g] * 3 + a[g % n_action_groups]) % alphabet for g in range(n_state_groups)]
    elif pattern == 4:  # near-constant with rare excursions
        s = [np.where(rng.random(n) < 0.02, 1, 0) for _ in range(n_state_groups)]
        a = [np.where(rng.random(n) < 0.02, 1, 0) for _ in range(n_action_groups)]
        nxt = [np.where(rng.random(n) < 0.02, 1, 0) for _ in range(n_state_groups)]
    else:  # high-cardinality: nearly every symbol unique
        s = [np.arange(n) + rng.integers(0, 3, size=n) for _ in range(n_state_groups)]
        a = columns(n_action_groups, alphabet)
        nxt = [np.arange(n) * 2 + rng.integers(0, 3, size=n) for _ in range(n_state_groups)]

    stream = [
        SymbolizedTransition(
            t=i,
            s_sym=tuple(int(c[i]) for c in s),
            a_sym=tuple(int(c[i]) for c in a),
            s_next_sym=tuple(int(c[i]) for c in nxt),
        )
        for i in range(n)
    ]
    mode = JointMode.PER_GROUP_MEAN if rng.integers(0, 2) else JointMode.FULL_JOINT
    return stream, WindowSpec(length=64, stride=2, joint_mode=mode)


@pytest.fixture(scope="module")
def fuzz_windows():
    rng = np.random.default_rng(2026)
    t0 = time.time()
    windows = []
    while len(windows) < 100_000:
        stream, spec = _fuzz_stream(rng, n=700)
        windows.extend(stream_metrics(stream, spec))
    return windows, time.time() - t0


def test_criterion_1_classical_bound(fuzz_windows):
    windows, elapsed = fuzz_windows
    with criterion(1, f"P in [0, 0.5+1e-12] on {len(windows)} fuzzed windows ({elapsed:.1f}s)"):
        assert len(windows) >= 100_000
        for wm in windows:
            assert 0.0 <= wm.P <= 0.5 + 1e-12
        assert elapsed < 60.0


def test_criterion_2_saturation_and_independence():
    t0 = time.time()
    with criterion(2, "copy loop saturates at 1/2; independent P decays with window size"):
        spec = WindowSpec(length=300, stride=50)
        for wm in stream_metrics(copy_stream(20_000, seed=1), spec):
            if "degenerate-denominator" not in wm.flags:
                assert abs(wm.P - 0.5) <= 1e-9
        stream = iid_stream(30_000, n_symbols=3, seed=2)
        p_small = float(np.mean([w.P for w in stream_metrics(stream, WindowSpec(100, 50))]))
        p_large = float(np.mean([w.P for w in stream_metrics(stream, WindowSpec(10_000, 5_000))]))
        assert p_large < 0.05
        assert p_large < p_small
        assert time.time() - t0 < 30.0


def test_criterion_3_chain_identities(fuzz_windows):
    windows, _ = fuzz_windows
    extra = []
    extra.extend(stream_metrics(copy_stream(5_000, seed=3), WindowSpec(300, 50)))
    extra.extend(stream_metrics(iid_stream(5_000, seed=4), WindowSpec(300, 50)))
    config = random_discrete_config(77)
    extra.extend(
        stream_metrics(run_discrete_loop(config, Perturbation.none(), 5_000), WindowSpec(300, 50))
    )
    with criterion(3, f"decomposition identities on {len(windows) + len(extra)} windows"):
        for wm in itertools.chain(windows, extra):
            assert_window_identities(wm)


def test_criterion_4_oracle_equivalence():
    quantities = ("H_S", "H_A", "H_Snext", "H_SA", "H_joint", "MI", "C", "P", "Hf", "Hb", "dH")
    t0 = time.time()
    worst = 0.0
    with criterion(4, "plug-in at 1e6 samples matches exact stationary metrics on 20 random loops"):
        for i in range(20):
            config = random_discrete_config(100 + i)
            exact = exact_metrics(stationary_joint(config))
            stream = run_discrete_loop(config, Perturbation.none(), 1_000_000)
            est = window_metrics(stream, WindowSpec(length=1_000_000, stride=1_000_000))
            for q in quantities:
                err = abs(getattr(est, q) - getattr(exact, q))
                worst = max(worst, err)
                assert err < 0.01, f"loop {i}: {q} off by {err}"
        elapsed = time.time() - t0
        assert elapsed < 300.0
    print(f"    (max |error| {worst:.5f} bits, {time.time() - t0:.0f}s)", flush=True)


def _carcass(i, p=0.0, hf=0.0, hb=0.0, dh=0.0, rw=None):
    # synthetic record for detector algebra only: the four monitored values
    # are driven independently, so dH is deliberately decoupled from Hf - Hb
    return WindowMetrics(
        window_index=i, t_start=i, t_end=i, H_S=1, H_A=1, H_Snext=1, H_SA=2, H_joint=2.5,
        MI=0.5, C=3.0, P=p, Hf=hf, Hb=hb, dH=dh, reward_mean=rw, sample_count=300,
    )


def test_criterion_5_detection_logic():
    with criterion(5, "union/channel algebra exhaustive; boundary strictness; two-sidedness"):
        model = BaselineModel(
            channels={c: ChannelStats(mu=0.0, sigma=1.0, n_windows=10) for c in Channel},
            threshold=3.0,
        )
        onset, n = 5, 12
        offsets = [None, 0, 1, 3]
        trials = []
        for combo in itertools.product(offsets, repeat=4):  # every latency pattern
            series = []
            for i in range(n):
                vals = [
                    8.0 if (lat is not None and i >= onset + lat) else 0.0 for lat in combo
                ]
                series.append(_carcass(i, p=vals[0], hf=vals[1], hb=vals[2], dh=vals[3]))
            out = detect(series, model, onset_window=onset)
            expected = [lat for lat in combo if lat is not None]
            assert out.union.detected == bool(expected)
            if expected:
                assert out.union.latency_windows == min(expected)
            for ch, lat in zip(UNION_CHANNELS, combo):
                assert out.channels[ch].detected == (lat is not None)
                assert out.channels[ch].latency_windows == lat
            trials.append(out)
        summary = summarize({"all": trials})
        union_rate = summary.row("union").detection_rate
        for name in ("P", "Hf", "Hb", "dH"):
            assert union_rate >= summary.row(name).detection_rate

        # exactly mu +/- 3 sigma never flags, one tick beyond does, both sides
        for sign in (+1.0, -1.0):
            at = [_carcass(i, p=sign * 3.0 if i >= onset else 0.0) for i in range(n)]
            out = detect(at, model, onset_window=onset)
            assert not out.channels[Channel.P].detected
            beyond = [_carcass(i, p=sign * 4.0 if i >= onset else 0.0) for i in range(n)]
            out = detect(beyond, model, onset_window=onset)
            assert out.channels[Channel.P].detected
            direction = out.channels[Channel.P].event.direction
            assert direction is (idt.Direction.ABOVE if sign > 0 else idt.Direction.BELOW)


def test_criterion_6_directional_benchmark():
    t0 = time.time()
    with criterion(6, "union >= reward in rate, <= in latency; per-channel false positives < 10%"):
        res = run_benchmark(default_suite(), seeds=range(5), threshold=3.0)
        union = res.summary.row("union")
        reward = res.summary.row("reward")
        assert union.detection_rate >= reward.detection_rate
        if reward.median_latency is not None:
            assert union.median_latency is not None
            assert union.median_latency <= reward.median_latency

        control = run_benchmark(all_none_suite(), seeds=range(5), threshold=3.0)
        for name in ("P", "Hf", "Hb", "dH", "reward"):
            fp = control.summary.row(name).detection_rate
            assert fp < 0.10, f"false-positive rate on {name} is {fp:.1%}"

        # severity monotonicity over the ordered action-noise magnitudes
        by_condition = {}
        for tr in res.trials:
            if tr.condition.startswith("action_noise"):
                by_condition.setdefault(tr.condition, []).append(tr.outcome.union.detected)
        ladder = [float(np.mean(by_condition[k])) for k in sorted(by_condition)]
        assert ladder == sorted(ladder), f"action-noise ladder not monotone: {ladder}"

        elapsed = time.time() - t0
        assert elapsed < 600.0
    print(
        f"    (union {union.detection_rate:.1%} @ {union.median_latency} vs "
        f"reward {reward.detection_rate:.1%} @ {reward.median_latency}; {time.time() - t0:.0f}s)",
        flush=True,
    )


def test_criterion_7_determinism(tmp_path):
    from idt.cli import main
    from idt.core import discretize_stream
    from idt.streamio import load_bundle, metrics_to_line, read_stream, transition_to_line
    from idt.synthloop import PerturbationKind, Side, default_linear_config, run_linear_loop

    with criterion(7, "bench is byte-identical across runs; monitor equals in-process metrics"):
        suite_path = tmp_path / "suite.json"
        suite_path.write_text(json.dumps({
            "episodes": 13, "episode_length": 200, "onset_episode": 11,
            "conditions": [
                {"label": "noise", "kind": "action_noise", "magnitude": 0.5},
                {"label": "calm", "kind": "none"},
            ],
        }))
        trees = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["bench", "--suite", str(suite_path), "--seeds", "2", "--out", str(out)]) == 0
            trees.append({
                str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
            })
        assert trees[0] == trees[1]

        stream_path = tmp_path / "stream.jsonl"
        cfg = default_linear_config(seed=11, episode_length=300)
        pert = Perturbation(kind=PerturbationKind.OBSERVATION_NOISE, magnitude=0.05,
                            onset_episode=9, side=Side.AGENT)
        run = run_linear_loop(cfg, pert, episodes=12)
        stream_path.write_text("".join(transition_to_line(tr) + "\n" for tr in run.transitions))
        baseline = tmp_path / "baseline.json"
        assert main(["calibrate", "--input", str(stream_path), "--calib-steps", "2400",
                     "--out", str(baseline)]) == 0
        metrics_path = tmp_path / "metrics.jsonl"
        assert main(["monitor", "--input", str(stream_path), "--baseline", str(baseline),
                     "--metrics-out", str(metrics_path)]) == 0
        bundle = load_bundle(baseline)
        symbols = discretize_stream(list(read_stream(stream_path)), bundle.params, bundle.grouping)
        expected = "".join(metrics_to_line(wm) + "\n" for wm in idt.stream_metrics(symbols, bundle.window))
        assert metrics_path.read_text() == expected


def test_criterion_8_window_arithmetic():
    with criterion(8, "N=50000, W=300, stride=50 yields exactly 995 windows"):
        stream = symbol_stream([0] * 50_000, [0] * 50_000, [0] * 50_000)
        series = stream_metrics(stream, WindowSpec(length=300, stride=50))
        assert len(series) == 995
        assert series[-1].t_start == 49_700
        assert series[-1].t_end == 49_999
        # boundary cases from the same arithmetic
        assert len(stream_metrics(stream[:300], WindowSpec(300, 50))) == 1
        with pytest.raises(idt.EstimationError):
            stream_metrics(stream[:299], WindowSpec(300, 50))
