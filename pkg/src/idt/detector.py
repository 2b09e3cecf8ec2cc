"""Baseline calibration and multi-channel deviation detection.

Protocol: during a stable pre-perturbation period, each monitored channel
(P, Hf, Hb, dH, and windowed reward for comparison) gets a baseline mean and
standard deviation. Afterwards a window flags a channel when its value lands
strictly outside mu +/- threshold*sigma — deviations in either direction are
suspicious, a drop signaling decoherence and a rise rigidity. The union of
the four information channels is the detection signal; reward is evaluated
under the identical protocol but reported separately and never joins the
union.

Latency counts windows from perturbation onset: latency zero means the first
post-onset window already flags.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .errors import CalibrationError, ReportError
from .infometrics import WindowMetrics

SIGMA_FLOOR = 1e-9


class Channel(Enum):
    P = "P"
    HF = "Hf"
    HB = "Hb"
    DH = "dH"
    REWARD = "reward"


UNION_CHANNELS = (Channel.P, Channel.HF, Channel.HB, Channel.DH)


class Direction(Enum):
    ABOVE = "above"
    BELOW = "below"


def channel_value(wm: WindowMetrics, channel: Channel) -> Optional[float]:
    if channel is Channel.P:
        return wm.P
    if channel is Channel.HF:
        return wm.Hf
    if channel is Channel.HB:
        return wm.Hb
    if channel is Channel.DH:
        return wm.dH
    return wm.reward_mean


@dataclass(frozen=True)
class ChannelStats:
    mu: float
    sigma: float  # floored at 1e-9: zero variance means any departure flags
    n_windows: int


@dataclass(frozen=True)
class BaselineModel:
    """Per-channel baseline statistics; uncalibrated channels are absent."""

    channels: Mapping[Channel, ChannelStats]
    threshold: float = 3.0

    def stats(self, channel: Channel) -> Optional[ChannelStats]:
        return self.channels.get(channel)


@dataclass(frozen=True)
class DetectionEvent:
    channel: Channel
    window_index: int
    z: float  # signed deviation in sigma units at the first crossing
    direction: Direction


@dataclass(frozen=True)
class ChannelOutcome:
    detected: bool
    latency_windows: Optional[int] = None
    event: Optional[DetectionEvent] = None
    uncalibrated: bool = False


@dataclass(frozen=True)
class TrialOutcome:
    """Detection result of one trial: per channel plus the union signal."""

    onset_window: int
    channels: Mapping[Channel, ChannelOutcome]
    union: ChannelOutcome


def calibrate(baseline_windows: Sequence[WindowMetrics], threshold: float = 3.0) -> BaselineModel:
    """Per-channel sample mean and standard deviation over baseline windows.

    Every window must lie entirely before perturbation onset (windows that
    straddle the boundary are excluded upstream). Channels with fewer than
    two values — e.g. reward on a reward-free stream — are left uncalibrated.
    """
    windows = list(baseline_windows)
    if len(windows) < 2:
        raise CalibrationError(
            f"baseline needs at least 2 windows, got {len(windows)}"
        )
    stats: dict[Channel, ChannelStats] = {}
    for ch in Channel:
        values = [v for wm in windows if (v := channel_value(wm, ch)) is not None]
        if len(values) < 2:
            continue
        mu = statistics.fmean(values)
        sigma = max(statistics.stdev(values), SIGMA_FLOOR)
        stats[ch] = ChannelStats(mu=mu, sigma=sigma, n_windows=len(values))
    return BaselineModel(channels=stats, threshold=threshold)


def _first_run_start(exceeds: Sequence[bool], min_consecutive: int) -> Optional[int]:
    run = 0
    for i, hit in enumerate(exceeds):
        run = run + 1 if hit else 0
        if run >= min_consecutive:
            return i - min_consecutive + 1
    return None


def detect(
    series: Sequence[WindowMetrics],
    model: BaselineModel,
    onset_window: int,
    threshold: Optional[float] = None,
    min_consecutive: int = 1,
) -> TrialOutcome:
    """Scan post-onset windows for the first sustained threshold crossing.

    Per channel, detection happens at the first index i >= onset_window
    where min_consecutive consecutive windows satisfy |x - mu| >
    threshold*sigma (strict: values exactly on the boundary never flag);
    latency is i - onset_window. An uncalibrated channel is reported as
    undetected with its flag set, never as an error.
    """
    series = list(series)
    if not 0 <= onset_window < len(series):
        raise ValueError(f"onset_window {onset_window} outside series of {len(series)} windows")
    if min_consecutive < 1:
        raise ValueError("min_consecutive must be >= 1")
    thr = model.threshold if threshold is None else threshold
    if not thr > 0:
        raise ValueError("threshold must be > 0")

    outcomes: dict[Channel, ChannelOutcome] = {}
    for ch in Channel:
        st = model.stats(ch)
        if st is None:
            outcomes[ch] = ChannelOutcome(detected=False, uncalibrated=True)
            continue
        sigma = max(st.sigma, SIGMA_FLOOR)
        post = series[onset_window:]
        values = [channel_value(wm, ch) for wm in post]
        exceeds = [v is not None and abs(v - st.mu) > thr * sigma for v in values]
        rel = _first_run_start(exceeds, min_consecutive)
        if rel is None:
            outcomes[ch] = ChannelOutcome(detected=False)
            continue
        v = values[rel]
        event = DetectionEvent(
            channel=ch,
            window_index=onset_window + rel,
            z=(v - st.mu) / sigma,
            direction=Direction.ABOVE if v > st.mu else Direction.BELOW,
        )
        outcomes[ch] = ChannelOutcome(detected=True, latency_windows=rel, event=event)

    detected_latencies = [
        outcomes[ch].latency_windows for ch in UNION_CHANNELS if outcomes[ch].detected
    ]
    if detected_latencies:
        union = ChannelOutcome(detected=True, latency_windows=min(detected_latencies))
    else:
        union = ChannelOutcome(detected=False)
    return TrialOutcome(onset_window=onset_window, channels=outcomes, union=union)


class StreamingDetector:
    """Online counterpart of detect(): feed windows, get first crossings.

    Emits at most one DetectionEvent per channel — the first window at which
    the channel completes a min_consecutive run beyond the threshold. When an
    onset window is supplied, windows before it are ignored, matching the
    batch detect() semantics.
    """

    def __init__(
        self,
        model: BaselineModel,
        threshold: Optional[float] = None,
        min_consecutive: int = 1,
        onset_window: Optional[int] = None,
    ):
        self.model = model
        self.threshold = model.threshold if threshold is None else threshold
        self.min_consecutive = min_consecutive
        self.onset_window = onset_window
        self._runs = {ch: 0 for ch in Channel}
        self._run_start: dict[Channel, tuple[int, float]] = {}
        self._fired: set[Channel] = set()

    def push(self, wm: WindowMetrics) -> list[DetectionEvent]:
        events = []
        for ch in Channel:
            if ch in self._fired:
                continue
            st = self.model.stats(ch)
            if st is None:
                continue
            if self.onset_window is not None and wm.window_index < self.onset_window:
                continue
            v = channel_value(wm, ch)
            sigma = max(st.sigma, SIGMA_FLOOR)
            if v is not None and abs(v - st.mu) > self.threshold * sigma:
                if self._runs[ch] == 0:
                    self._run_start[ch] = (wm.window_index, v)
                self._runs[ch] += 1
            else:
                self._runs[ch] = 0
                continue
            if self._runs[ch] >= self.min_consecutive:
                # the event records the first window of the qualifying run
                first_index, first_value = self._run_start[ch]
                events.append(
                    DetectionEvent(
                        channel=ch,
                        window_index=first_index,
                        z=(first_value - st.mu) / sigma,
                        direction=Direction.ABOVE if first_value > st.mu else Direction.BELOW,
                    )
                )
                self._fired.add(ch)
        return events


@dataclass(frozen=True)
class SummaryRow:
    channel: str
    detection_rate: float  # seed-averaged fraction of trials detected
    median_latency: Optional[float]  # pooled over detected trials
    n_detected: int
    n_trials: int


@dataclass(frozen=True)
class Summary:
    rows: tuple[SummaryRow, ...]
    n_seeds: int

    def row(self, channel: str) -> SummaryRow:
        for r in self.rows:
            if r.channel == channel:
                return r
        raise KeyError(channel)


SUMMARY_ORDER = ("union", "P", "Hf", "Hb", "dH", "reward")


def _outcome_for(trial: TrialOutcome, channel: str) -> ChannelOutcome:
    if channel == "union":
        return trial.union
    return trial.channels[Channel(channel)]


def summarize(trials_by_seed: Mapping[object, Sequence[TrialOutcome]]) -> Summary:
    """Seed-averaged detection rates and pooled latency medians.

    Rates are computed per seed as the detected fraction of that seed's
    trials and averaged across seeds; latency medians pool every detected
    trial across all seeds, excluding undetected trials.
    """
    groups = {seed: list(trials) for seed, trials in trials_by_seed.items() if len(list(trials))}
    if not groups:
        raise ReportError("summary requested over zero trials")
    rows = []
    for name in SUMMARY_ORDER:
        per_seed_rates = []
        latencies = []
        n_detected = 0
        n_trials = 0
        for trials in groups.values():
            hits = 0
            for trial in trials:
                oc = _outcome_for(trial, name)
                n_trials += 1
                if oc.detected:
                    hits += 1
                    n_detected += 1
                    latencies.append(oc.latency_windows)
            per_seed_rates.append(hits / len(trials))
        rows.append(
            SummaryRow(
                channel=name,
                detection_rate=statistics.fmean(per_seed_rates),
                median_latency=float(statistics.median(latencies)) if latencies else None,
                n_detected=n_detected,
                n_trials=n_trials,
            )
        )
    return Summary(rows=tuple(rows), n_seeds=len(groups))
