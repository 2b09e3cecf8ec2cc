"""Stream ingestion, record serialization, and file formats.

Everything on disk or on the wire is newline-delimited JSON: one object per
line, lines independent, so a stream is resumable at any line boundary and
trivially produced from any RL stack.

Transition records require keys t, s, a, s_next; r and episode are optional.
Metrics records carry the windowed quantities with full round-trip float
precision (Python's shortest-repr serialization parses back bit-identically).

Sources accepted by read_stream:

* a file path;
* "-" for standard input;
* "tcp://host:port" — binds and listens on host:port, accepts a single
  connection, and reads records until the peer closes (the exporting side
  connects and pushes; multiplexing several agents on one socket is out of
  scope).
"""

from __future__ import annotations

import json
import logging
import socket
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Optional
from urllib.parse import urlsplit

from .core import DiscretizerParams, GroupingConfig, Transition
from .detector import (
    BaselineModel,
    Channel,
    ChannelStats,
    DetectionEvent,
    Summary,
)
from .errors import ConfigError, FormatError, IoError
from .infometrics import JointMode, WindowMetrics, WindowSpec

log = logging.getLogger("idt")

BASELINE_FORMAT = "idt-baseline-v1"


# ---------------------------------------------------------------------------
# transition records


def parse_transition_line(line: str, lineno: int) -> Transition:
    """Parse one TransitionRecord; errors name the offending line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {lineno}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"line {lineno}: expected an object, got {type(obj).__name__}")
    for key in ("t", "s", "a", "s_next"):
        if key not in obj:
            raise FormatError(f"line {lineno}: missing required key {key!r}")
    t = obj["t"]
    if not isinstance(t, int) or isinstance(t, bool):
        raise FormatError(f"line {lineno}: key 't' must be an integer, got {t!r}")
    for key in ("s", "a", "s_next"):
        v = obj[key]
        if not isinstance(v, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            raise FormatError(f"line {lineno}: key {key!r} must be an array of numbers")
    reward = obj.get("r")
    if reward is not None and (not isinstance(reward, (int, float)) or isinstance(reward, bool)):
        raise FormatError(f"line {lineno}: key 'r' must be a number")
    episode = obj.get("episode")
    if episode is not None and (not isinstance(episode, int) or isinstance(episode, bool)):
        raise FormatError(f"line {lineno}: key 'episode' must be an integer")
    try:
        return Transition(
            t=t,
            s=obj["s"],
            a=obj["a"],
            s_next=obj["s_next"],
            reward=float(reward) if reward is not None else None,
            episode=episode,
        )
    except FormatError as exc:
        raise FormatError(f"line {lineno}: {exc}") from exc


def transition_to_line(tr: Transition) -> str:
    obj = {
        "t": tr.t,
        "s": [float(x) for x in tr.s],
        "a": [float(x) for x in tr.a],
        "s_next": [float(x) for x in tr.s_next],
    }
    if tr.reward is not None:
        obj["r"] = float(tr.reward)
    if tr.episode is not None:
        obj["episode"] = tr.episode
    return json.dumps(obj, separators=(",", ":"))


def _iter_transitions(lines: Iterator[str], origin: str) -> Iterator[Transition]:
    dims: Optional[tuple[int, int]] = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        tr = parse_transition_line(line, lineno)
        if dims is None:
            dims = (tr.s.shape[0], tr.a.shape[0])
        elif (tr.s.shape[0], tr.a.shape[0]) != dims:
            raise FormatError(
                f"line {lineno}: dimensions drifted to "
                f"{tr.s.shape[0]}/{tr.a.shape[0]} (stream started with {dims[0]}/{dims[1]})"
            )
        yield tr
    log.debug("stream %s exhausted", origin)


def _read_socket(url: str) -> Iterator[Transition]:
    parts = urlsplit(url)
    host = parts.hostname or "127.0.0.1"
    port = parts.port
    if port is None:
        raise IoError(f"{url}: tcp source needs an explicit port")
    try:
        server = socket.create_server((host, port))
    except OSError as exc:
        raise IoError(f"cannot listen on {host}:{port}: {exc}") from exc
    with server:
        log.debug("listening on %s:%d", host, port)
        conn, peer = server.accept()
        log.debug("peer %s connected", peer)
        with conn, conn.makefile("r", encoding="utf-8") as fh:
            yield from _iter_transitions(fh, url)


def read_stream(source: str | Path) -> Iterator[Transition]:
    """Yield Transitions from a file, standard input, or a tcp:// socket."""
    source = str(source)
    log.debug("reading transitions from %s", source)
    if source == "-":
        yield from _iter_transitions(sys.stdin, "stdin")
    elif source.startswith("tcp://"):
        yield from _read_socket(source)
    else:
        path = Path(source)
        if not path.exists():
            raise IoError(f"input file does not exist: {source}")
        with open(path, "r", encoding="utf-8") as fh:
            yield from _iter_transitions(fh, source)


# ---------------------------------------------------------------------------
# metrics and event records


def metrics_to_line(wm: WindowMetrics) -> str:
    obj = {
        "window_index": wm.window_index,
        "t_start": wm.t_start,
        "t_end": wm.t_end,
        "P": wm.P,
        "Hf": wm.Hf,
        "Hb": wm.Hb,
        "dH": wm.dH,
        "H_S": wm.H_S,
        "H_A": wm.H_A,
        "H_Snext": wm.H_Snext,
        "MI": wm.MI,
        "C": wm.C,
    }
    if wm.reward_mean is not None:
        obj["reward_mean"] = wm.reward_mean
    obj["flags"] = list(wm.flags)
    return json.dumps(obj, separators=(",", ":"))


def parse_metrics_line(line: str) -> dict:
    obj = json.loads(line)
    if not isinstance(obj, dict) or "window_index" not in obj or "P" not in obj:
        raise FormatError("not a metrics record")
    return obj


def event_to_line(ev: DetectionEvent, latency_windows: Optional[int] = None) -> str:
    obj = {
        "channel": ev.channel.value,
        "window_index": ev.window_index,
        "z": ev.z,
        "direction": ev.direction.value,
    }
    if latency_windows is not None:
        obj["latency_windows"] = latency_windows
    return json.dumps(obj, separators=(",", ":"))


# ---------------------------------------------------------------------------
# baseline bundle: everything monitor needs, in one artifact


@dataclass(frozen=True)
class MonitorBundle:
    params: DiscretizerParams
    grouping: GroupingConfig
    window: WindowSpec
    baseline: BaselineModel


def save_bundle(path: str | Path, bundle: MonitorBundle) -> None:
    obj = {
        "format": BASELINE_FORMAT,
        "window": {
            "length": bundle.window.length,
            "stride": bundle.window.stride,
            "joint_mode": bundle.window.joint_mode.value,
        },
        "discretizer": {
            "bins": bundle.params.bins,
            "clip": bundle.params.clip,
            "state_dim": bundle.params.state_dim,
            "action_dim": bundle.params.action_dim,
            "mu": [float(x) for x in bundle.params.mu],
            "sigma": [float(x) for x in bundle.params.sigma],
        },
        "grouping": bundle.grouping.to_dict(),
        "baseline": {
            "threshold": bundle.baseline.threshold,
            "channels": {
                ch.value: {"mu": st.mu, "sigma": st.sigma, "n_windows": st.n_windows}
                for ch, st in bundle.baseline.channels.items()
            },
        },
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_bundle(path: str | Path) -> MonitorBundle:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read baseline file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"baseline file {path} is not valid JSON: {exc}") from exc
    if obj.get("format") != BASELINE_FORMAT:
        raise FormatError(f"baseline file {path} has format {obj.get('format')!r}, "
                          f"expected {BASELINE_FORMAT!r}")
    w = obj["window"]
    window = WindowSpec(length=w["length"], stride=w["stride"], joint_mode=JointMode(w["joint_mode"]))
    d = obj["discretizer"]
    params = DiscretizerParams(
        bins=d["bins"],
        clip=d["clip"],
        mu=d["mu"],
        sigma=d["sigma"],
        state_dim=d["state_dim"],
        action_dim=d["action_dim"],
    )
    grouping = GroupingConfig(
        state_groups=tuple(tuple(g) for g in obj["grouping"]["state_groups"]),
        action_groups=tuple(tuple(g) for g in obj["grouping"]["action_groups"]),
    )
    b = obj["baseline"]
    channels = {
        Channel(name): ChannelStats(mu=st["mu"], sigma=st["sigma"], n_windows=st["n_windows"])
        for name, st in b["channels"].items()
    }
    baseline = BaselineModel(channels=channels, threshold=b["threshold"])
    return MonitorBundle(params=params, grouping=grouping, window=window, baseline=baseline)


# ---------------------------------------------------------------------------
# summary rendering


def summary_to_dict(summary: Summary) -> dict:
    return {
        "n_seeds": summary.n_seeds,
        "rows": [
            {
                "channel": r.channel,
                "detection_rate_pct": r.detection_rate * 100.0,
                "median_latency_windows": r.median_latency,
                "n_detected": r.n_detected,
                "n_trials": r.n_trials,
            }
            for r in summary.rows
        ],
    }


def format_summary_text(summary: Summary) -> str:
    lines = [
        f"{'Channel':<10} {'Detection Rate (%)':>20} {'Median Latency (windows)':>28} {'Detected':>12}",
    ]
    for r in summary.rows:
        lat = f"{r.median_latency:.1f}" if r.median_latency is not None else "-"
        lines.append(
            f"{r.channel:<10} {r.detection_rate * 100.0:>20.1f} {lat:>28} "
            f"{f'{r.n_detected}/{r.n_trials}':>12}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# benchmark suite files


def load_suite_file(path: str | Path):
    """Build benchmark conditions from a JSON suite description.

    Schema: {"episodes": int, "episode_length": int, "onset_episode": int,
    "conditions": [{"label": str?, "kind": str, "magnitude": float,
    "side": "agent"|"environment"?}, ...]} — conditions run on the default
    linear loop.
    """
    from .synthloop import (
        BenchmarkCondition,
        Perturbation,
        PerturbationKind,
        Side,
        default_linear_config,
        suite_grouping,
    )

    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read suite file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"suite file {path} is not valid JSON: {exc}") from exc
    episodes = int(obj.get("episodes", 52))
    episode_length = int(obj.get("episode_length", 500))
    onset_episode = int(obj.get("onset_episode", 51))
    conds = obj.get("conditions")
    if not conds:
        raise ConfigError(f"suite file {path} has no conditions")
    base = default_linear_config(seed=0, episode_length=episode_length)
    out = []
    for i, c in enumerate(conds):
        try:
            kind = PerturbationKind(c["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"suite condition {i}: bad or missing kind: {exc}") from exc
        magnitude = float(c.get("magnitude", 0.0))
        side = Side(c["side"]) if "side" in c else (
            Side.AGENT
            if kind in (PerturbationKind.ACTION_NOISE, PerturbationKind.OBSERVATION_NOISE)
            else Side.ENVIRONMENT
        )
        label = c.get("label", f"{kind.value}_{magnitude:g}_{i}")
        out.append(
            BenchmarkCondition(
                label=label,
                config=base,
                perturbation=Perturbation(
                    kind=kind, magnitude=magnitude, onset_episode=onset_episode, side=side
                ),
                episodes=episodes,
                grouping=suite_grouping(),
            )
        )
    return out


def write_lines(target: IO[str], lines) -> None:
    for line in lines:
        target.write(line + "\n")
