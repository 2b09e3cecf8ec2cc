"""Command-line interface: calibrate, monitor, bench, oracle-check.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Setting the
environment variable IDT_LOG (e.g. IDT_LOG=debug) turns on diagnostic
logging to stderr; it is off by default.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from contextlib import ExitStack
from pathlib import Path

from .core import GroupingConfig, discretize, fit_discretizer
from .detector import StreamingDetector, calibrate
from .errors import CalibrationError, IdtError
from .infometrics import JointMode, StreamingWindowEstimator, WindowSpec, stream_metrics
from .streamio import (
    MonitorBundle,
    event_to_line,
    format_summary_text,
    load_bundle,
    load_suite_file,
    metrics_to_line,
    read_stream,
    save_bundle,
    summary_to_dict,
)

log = logging.getLogger("idt")

_JOINT_MODES = {"per-group-mean": JointMode.PER_GROUP_MEAN, "full-joint": JointMode.FULL_JOINT}


def _setup_logging() -> None:
    level_name = os.environ.get("IDT_LOG", "").strip()
    if not level_name:
        return
    level = getattr(logging, level_name.upper(), logging.DEBUG)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("idt %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(level)


def _window_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=300, help="window length in steps")
    parser.add_argument("--stride", type=int, default=50, help="window stride in steps")
    parser.add_argument(
        "--joint-mode",
        choices=sorted(_JOINT_MODES),
        default="per-group-mean",
        help="how variable groups combine into channels",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idt",
        description="Coupling monitor: windowed bi-predictability estimation "
        "and multi-channel 3-sigma deviation detection over transition streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="fit discretizer and channel baselines, write a bundle")
    cal.add_argument("--input", required=True, help="file path, '-' for stdin, or tcp://host:port")
    _window_args(cal)
    cal.add_argument("--bins", type=int, default=3)
    cal.add_argument("--clip", type=float, default=3.0)
    cal.add_argument("--groups", help="JSON grouping file; default is one group per variable class")
    cal.add_argument("--calib-steps", type=int, help="use only the first N steps (default: all)")
    cal.add_argument("--threshold", type=float, default=3.0)
    cal.add_argument("--out", required=True, help="output baseline bundle path")

    mon = sub.add_parser("monitor", help="stream metrics and detection events against a baseline")
    mon.add_argument("--input", required=True, help="file path, '-' for stdin, or tcp://host:port")
    mon.add_argument("--baseline", required=True, help="bundle written by calibrate")
    mon.add_argument("--threshold", type=float, help="override the bundle's threshold")
    mon.add_argument("--min-consecutive", type=int, default=1)
    mon.add_argument(
        "--onset-step",
        type=int,
        help="known perturbation onset; enables latency fields and post-onset-only events",
    )
    mon.add_argument("--metrics-out", default="-", help="metrics records sink (default stdout)")
    mon.add_argument("--events-out", help="detection events sink (default: not written)")

    ben = sub.add_parser("bench", help="run the synthetic benchmark suite")
    ben.add_argument("--suite", help="JSON suite file (default: the shipped 8-condition suite)")
    ben.add_argument("--seeds", type=int, default=5, help="number of seeds (0..K-1)")
    ben.add_argument("--out", required=True, help="output directory")
    _window_args(ben)
    ben.add_argument("--bins", type=int, default=3)
    ben.add_argument("--clip", type=float, default=3.0)
    ben.add_argument("--threshold", type=float, default=3.0)
    ben.add_argument("--min-consecutive", type=int, default=1)
    ben.add_argument("--control", action="store_true", help="run the all-NONE control suite instead")

    orc = sub.add_parser("oracle-check", help="estimator-vs-exact equivalence on random loops")
    orc.add_argument("--loops", type=int, default=5)
    orc.add_argument("--samples", type=int, default=200_000)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--tolerance", type=float, default=0.01, help="max |error| in bits")
    return parser


def _open_sink(stack: ExitStack, target: str):
    if target == "-":
        return sys.stdout
    return stack.enter_context(open(target, "w", encoding="utf-8"))


def cmd_calibrate(args) -> int:
    spec = WindowSpec(length=args.window, stride=args.stride, joint_mode=_JOINT_MODES[args.joint_mode])
    source = read_stream(args.input)
    if args.calib_steps is not None:
        source = itertools.islice(source, args.calib_steps)
    transitions = list(source)
    if not transitions:
        raise CalibrationError("no transitions read from input")
    params = fit_discretizer(transitions, bins=args.bins, clip=args.clip)
    if args.groups:
        grouping = GroupingConfig.from_file(args.groups)
    else:
        grouping = GroupingConfig.single(params.state_dim, params.action_dim)
    grouping.validate(params.state_dim, params.action_dim)
    symbols = [discretize(tr, params, grouping) for tr in transitions]
    series = stream_metrics(symbols, spec)
    model = calibrate(series, threshold=args.threshold)
    save_bundle(args.out, MonitorBundle(params=params, grouping=grouping, window=spec, baseline=model))
    print(
        f"calibrated {len(model.channels)} channels over {len(series)} windows "
        f"({len(transitions)} steps) -> {args.out}",
        file=sys.stderr,
    )
    return 0


def cmd_monitor(args) -> int:
    bundle = load_bundle(args.baseline)
    estimator = StreamingWindowEstimator(bundle.window)
    detector = StreamingDetector(
        bundle.baseline, threshold=args.threshold, min_consecutive=args.min_consecutive
    )
    onset_step = args.onset_step
    onset_window = None
    with ExitStack() as stack:
        metrics_sink = _open_sink(stack, args.metrics_out)
        events_sink = _open_sink(stack, args.events_out) if args.events_out else None
        for tr in read_stream(args.input):
            wm = estimator.push(discretize(tr, bundle.params, bundle.grouping))
            if wm is None:
                continue
            metrics_sink.write(metrics_to_line(wm) + "\n")
            metrics_sink.flush()
            if onset_step is not None:
                if wm.t_end < onset_step:
                    continue  # pre-onset windows never feed detection
                if onset_window is None:
                    onset_window = wm.window_index
            for ev in detector.push(wm):
                latency = None if onset_window is None else ev.window_index - onset_window
                if events_sink is not None:
                    events_sink.write(event_to_line(ev, latency_windows=latency) + "\n")
                    events_sink.flush()
                log.info("detection on %s at window %d", ev.channel.value, ev.window_index)
    return 0


def cmd_bench(args) -> int:
    from .synthloop import all_none_suite, default_suite, run_benchmark

    if args.suite:
        suite = load_suite_file(args.suite)
    elif args.control:
        suite = all_none_suite()
    else:
        suite = default_suite()
    spec = WindowSpec(length=args.window, stride=args.stride, joint_mode=_JOINT_MODES[args.joint_mode])
    result = run_benchmark(
        suite,
        seeds=range(args.seeds),
        spec=spec,
        threshold=args.threshold,
        min_consecutive=args.min_consecutive,
        bins=args.bins,
        clip=args.clip,
    )
    out = Path(args.out)
    (out / "metrics").mkdir(parents=True, exist_ok=True)

    summary_obj = {
        "suite": [c.label for c in suite],
        "seeds": args.seeds,
        "threshold": args.threshold,
        "window": {"length": spec.length, "stride": spec.stride, "joint_mode": spec.joint_mode.value},
        "summary": summary_to_dict(result.summary),
    }
    (out / "summary.json").write_text(json.dumps(summary_obj, indent=2) + "\n")
    text = format_summary_text(result.summary)
    (out / "summary.txt").write_text(text + "\n")

    with open(out / "trials.jsonl", "w", encoding="utf-8") as fh:
        for tr in result.trials:
            row = {
                "fingerprint": tr.fingerprint,
                "condition": tr.condition,
                "seed": tr.seed,
                "onset_step": tr.onset_step,
                "onset_window": tr.onset_window,
                "n_steps": tr.n_steps,
                "diverged": tr.diverged,
                "error": tr.error,
            }
            if tr.outcome is not None:
                row["union"] = {
                    "detected": tr.outcome.union.detected,
                    "latency_windows": tr.outcome.union.latency_windows,
                }
                row["channels"] = {
                    ch.value: {"detected": oc.detected, "latency_windows": oc.latency_windows}
                    for ch, oc in tr.outcome.channels.items()
                }
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")

    for tr in result.trials:
        series_path = out / "metrics" / f"{tr.condition}_seed{tr.seed}.jsonl"
        with open(series_path, "w", encoding="utf-8") as fh:
            for wm in tr.metrics:
                fh.write(metrics_to_line(wm) + "\n")

    print(text)
    return 0


def cmd_oracle_check(args) -> int:
    from .infometrics import window_metrics
    from .oracle import exact_metrics, stationary_joint
    from .synthloop import Perturbation, random_discrete_config, run_discrete_loop

    quantities = ("H_S", "H_A", "H_Snext", "H_SA", "H_joint", "MI", "C", "P", "Hf", "Hb", "dH")
    worst = 0.0
    for i in range(args.loops):
        config = random_discrete_config(args.seed + i)
        exact = exact_metrics(stationary_joint(config))
        stream = run_discrete_loop(config, Perturbation.none(), args.samples)
        spec = WindowSpec(length=args.samples, stride=args.samples)
        est = window_metrics(stream, spec)
        err = max(abs(getattr(est, q) - getattr(exact, q)) for q in quantities)
        worst = max(worst, err)
        print(f"loop {i}: max |error| = {err:.6f} bits")
    ok = worst < args.tolerance
    print(f"overall max |error| = {worst:.6f} bits ({'PASS' if ok else 'FAIL'} at {args.tolerance})")
    return 0 if ok else 1


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "calibrate": cmd_calibrate,
        "monitor": cmd_monitor,
        "bench": cmd_bench,
        "oracle-check": cmd_oracle_check,
    }
    try:
        return handlers[args.command](args)
    except IdtError as exc:
        print(f"idt: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
