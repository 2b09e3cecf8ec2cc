"""Windowed plug-in estimation of entropies and coupling metrics.

All quantities are plug-in estimates from empirical symbol frequencies inside
a sliding window, in bits (base-2 logs), with no smoothing or bias
correction: corrections would silently change calibrated baselines and with
them detection behavior.

Per window the estimator reports

* the marginal entropies H_S, H_A, H_Snext and joints H_SA, H_joint;
* MI = H_SA + H_Snext - H_joint, the information shared between the
  observation-action pair and the outcome (one counting pass, and the
  decomposition identities hold by construction);
* the entropy budget C = H_S + H_A + H_Snext and the bi-predictability
  P = MI / C, which is 0 for a fully constant (degenerate) window and can
  never exceed 1/2: MI <= min(H_SA, H_Snext) <= C/2 pointwise;
* the forward residual Hf = H_joint - H_SA (outcome uncertainty left once
  observation and action are known), the backward residual
  Hb = H_joint - H_Snext (cause uncertainty left once the outcome is known),
  and their asymmetry dH = Hf - Hb.

Group handling: in FULL_JOINT mode the S/A/S' symbols are the tuples of all
group symbols; in PER_GROUP_MEAN mode (the default) metrics are computed
independently per aligned (state group, all action groups, state group)
channel and arithmetic-averaged, which keeps per-channel alphabets small
enough to populate at realistic window lengths.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import SymbolizedTransition
from .errors import EstimationError

NEG_CLAMP = 1e-12
DEGENERATE_FLAG = "degenerate-denominator"


class JointMode(Enum):
    PER_GROUP_MEAN = "per_group_mean"
    FULL_JOINT = "full_joint"


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: window length, stride, and group handling."""

    length: int = 300
    stride: int = 50
    joint_mode: JointMode = JointMode.PER_GROUP_MEAN

    def __post_init__(self):
        if not (1 <= self.stride <= self.length):
            raise EstimationError(
                f"stride must satisfy 1 <= stride <= length, got {self.stride}/{self.length}"
            )


@dataclass(frozen=True, slots=True)
class WindowMetrics:
    """All entropies and derived coupling metrics for one window.

    The oracle module reuses this record for exact distributions, in which
    case window_index/t_start/t_end/sample_count are None.
    """

    window_index: Optional[int]
    t_start: Optional[int]
    t_end: Optional[int]
    H_S: float
    H_A: float
    H_Snext: float
    H_SA: float
    H_joint: float
    MI: float
    C: float
    P: float
    Hf: float
    Hb: float
    dH: float
    reward_mean: Optional[float] = None
    sample_count: Optional[int] = None
    flags: tuple[str, ...] = field(default=())


def entropy(counts: Mapping) -> float:
    """Base-2 entropy of a count table: H = -sum p log2 p, p = count/total.

    Counts must be positive; an empty table has no distribution to speak of
    and raises EstimationError.
    """
    if not counts:
        raise EstimationError("entropy of an empty count table is undefined")
    values = np.asarray(sorted(counts.values()), dtype=np.float64)
    if np.any(values <= 0):
        raise EstimationError("entropy requires strictly positive counts")
    return _entropy_from_counts(values, float(values.sum()))


def _entropy_from_counts(counts: np.ndarray, total: float) -> float:
    # counts must arrive sorted so the summation order (and hence the float
    # result) depends only on the count multiset, not on symbol labels
    return float(math.log2(total) - counts @ np.log2(counts) / total)


def _sorted_window_counts(codes: np.ndarray, start: int, length: int) -> np.ndarray:
    _, counts = np.unique(codes[start : start + length], return_counts=True)
    counts.sort()
    return counts.astype(np.float64)


def _dense_codes(column) -> np.ndarray:
    """Relabel an arbitrary integer column as contiguous codes 0..K-1."""
    try:
        arr = np.asarray(column, dtype=np.int64)
    except OverflowError:
        # symbols beyond int64 (giant groups): dict-based factorization
        mapping: dict = {}
        out = np.empty(len(column), dtype=np.int64)
        for i, v in enumerate(column):
            out[i] = mapping.setdefault(v, len(mapping))
        return out
    _, inverse = np.unique(arr, return_inverse=True)
    return inverse.astype(np.int64)


def _combine(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """Dense code for the pair (c1, c2); inputs must already be dense."""
    paired = c1 * (int(c2.max()) + 1) + c2
    _, inverse = np.unique(paired, return_inverse=True)
    return inverse.astype(np.int64)


def _combine_many(columns: Sequence[np.ndarray]) -> np.ndarray:
    code = columns[0]
    for col in columns[1:]:
        code = _combine(code, col)
    return code


@dataclass(frozen=True)
class _ChannelCodes:
    s: np.ndarray
    a: np.ndarray
    sn: np.ndarray
    sa: np.ndarray
    joint: np.ndarray


def _encode_channels(stream: Sequence[SymbolizedTransition], mode: JointMode) -> list[_ChannelCodes]:
    n_state_groups = len(stream[0].s_sym)
    n_action_groups = len(stream[0].a_sym)
    s_cols = [_dense_codes([tr.s_sym[g] for tr in stream]) for g in range(n_state_groups)]
    a_cols = [_dense_codes([tr.a_sym[g] for tr in stream]) for g in range(n_action_groups)]
    sn_cols = [_dense_codes([tr.s_next_sym[g] for tr in stream]) for g in range(n_state_groups)]
    a_code = _combine_many(a_cols)
    channels = []
    if mode is JointMode.FULL_JOINT:
        pairs = [(_combine_many(s_cols), _combine_many(sn_cols))]
    else:
        pairs = list(zip(s_cols, sn_cols))
    for s_code, sn_code in pairs:
        sa = _combine(s_code, a_code)
        joint = _combine(sa, sn_code)
        channels.append(_ChannelCodes(s=s_code, a=a_code, sn=sn_code, sa=sa, joint=joint))
    return channels


def _clamp_nonnegative(x: float) -> float:
    return 0.0 if -NEG_CLAMP < x < 0.0 else x


def _window_components(channels: Sequence[_ChannelCodes], start: int, length: int):
    """Per-channel entropies averaged arithmetically across channels."""
    acc = np.zeros(9)  # H_S, H_A, H_Snext, H_SA, H_joint, MI, C, Hf, Hb
    degenerate = False
    p_sum = 0.0
    for ch in channels:
        h_s = _entropy_from_counts(_sorted_window_counts(ch.s, start, length), length)
        h_a = _entropy_from_counts(_sorted_window_counts(ch.a, start, length), length)
        h_sn = _entropy_from_counts(_sorted_window_counts(ch.sn, start, length), length)
        h_sa = _entropy_from_counts(_sorted_window_counts(ch.sa, start, length), length)
        h_j = _entropy_from_counts(_sorted_window_counts(ch.joint, start, length), length)
        mi = _clamp_nonnegative(h_sa + h_sn - h_j)
        hf = _clamp_nonnegative(h_j - h_sa)
        hb = _clamp_nonnegative(h_j - h_sn)
        c = h_s + h_a + h_sn
        if c > 0.0:
            p_sum += mi / c
        else:
            degenerate = True
        acc += (h_s, h_a, h_sn, h_sa, h_j, mi, c, hf, hb)
    k = len(channels)
    acc /= k
    return acc, p_sum / k, degenerate


def _metrics_at(
    channels: Sequence[_ChannelCodes],
    start: int,
    spec: WindowSpec,
    window_index: int,
    t_start: int,
    t_end: int,
    reward_mean: Optional[float],
) -> WindowMetrics:
    acc, p, degenerate = _window_components(channels, start, spec.length)
    h_s, h_a, h_sn, h_sa, h_j, mi, c, hf, hb = acc
    flags = (DEGENERATE_FLAG,) if degenerate else ()
    return WindowMetrics(
        window_index=window_index,
        t_start=t_start,
        t_end=t_end,
        H_S=h_s,
        H_A=h_a,
        H_Snext=h_sn,
        H_SA=h_sa,
        H_joint=h_j,
        MI=mi,
        C=c,
        P=p,
        Hf=hf,
        Hb=hb,
        dH=hf - hb,
        reward_mean=reward_mean,
        sample_count=spec.length,
        flags=flags,
    )


def _window_reward_mean(stream: Sequence[SymbolizedTransition], start: int, length: int) -> Optional[float]:
    rewards = [tr.reward for tr in stream[start : start + length] if tr.reward is not None]
    if not rewards:
        return None
    return float(np.mean(rewards))


def window_metrics(window: Sequence[SymbolizedTransition], spec: WindowSpec) -> WindowMetrics:
    """Metrics for one full window (len(window) must equal spec.length)."""
    window = list(window)
    if len(window) != spec.length:
        raise EstimationError(
            f"window has {len(window)} records, spec requires exactly {spec.length}"
        )
    channels = _encode_channels(window, spec.joint_mode)
    return _metrics_at(
        channels,
        start=0,
        spec=spec,
        window_index=0,
        t_start=window[0].t,
        t_end=window[-1].t,
        reward_mean=_window_reward_mean(window, 0, spec.length),
    )


def stream_metrics(
    stream: Sequence[SymbolizedTransition], spec: WindowSpec
) -> list[WindowMetrics]:
    """One WindowMetrics per window start 0, stride, 2*stride, ...

    Windows are contiguous over the stream; episode boundaries do not break
    them. Window count is floor((N - W) / stride) + 1.
    """
    stream = list(stream)
    n = len(stream)
    if n < spec.length:
        raise EstimationError(f"stream has {n} records, shorter than window length {spec.length}")
    channels = _encode_channels(stream, spec.joint_mode)
    any_reward = any(tr.reward is not None for tr in stream)
    out = []
    for k, start in enumerate(range(0, n - spec.length + 1, spec.stride)):
        out.append(
            _metrics_at(
                channels,
                start=start,
                spec=spec,
                window_index=k,
                t_start=stream[start].t,
                t_end=stream[start + spec.length - 1].t,
                reward_mean=_window_reward_mean(stream, start, spec.length) if any_reward else None,
            )
        )
    return out


class StreamingWindowEstimator:
    """Incremental windowing over a live symbol stream.

    Push records one at a time; a WindowMetrics is returned the moment a
    window completes (every ``stride`` records once ``length`` records have
    arrived), so output lags input by strictly less than one stride. Results
    are bit-identical to stream_metrics over the same records.
    """

    def __init__(self, spec: WindowSpec):
        self.spec = spec
        self._buf: deque[SymbolizedTransition] = deque(maxlen=spec.length)
        self._pushed = 0

    def push(self, record: SymbolizedTransition) -> Optional[WindowMetrics]:
        self._buf.append(record)
        self._pushed += 1
        past = self._pushed - self.spec.length
        if past < 0 or past % self.spec.stride != 0:
            return None
        wm = window_metrics(list(self._buf), self.spec)
        return replace(wm, window_index=past // self.spec.stride)


def iter_stream_metrics(
    stream: Iterable[SymbolizedTransition], spec: WindowSpec
) -> Iterable[WindowMetrics]:
    """Lazy variant of stream_metrics for one-pass sources."""
    est = StreamingWindowEstimator(spec)
    for record in stream:
        wm = est.push(record)
        if wm is not None:
            yield wm
