"""Domain types and the discretization stage.

A transition stream is a sequence of (s, a, s_next) records with continuous
values. Before any entropy can be estimated the stream is symbolized: each
variable is z-scored against statistics frozen on a calibration segment,
clipped, assigned one of ``bins`` equal-width intervals, and the per-variable
bin indices of each variable group are combined positionally into one
base-``bins`` composite symbol.

Conventions baked in here (and relied on by every downstream module):

* z-score parameters are fitted once on the calibration segment and never
  updated online — adaptive normalization would absorb exactly the
  distribution shifts the monitor exists to detect;
* bin support is the fixed range [-clip, clip] (default 3.0), not the
  observed min/max, so for the default bins=3 the edges sit at z = -1, +1;
* intervals are half-open [lo, hi) with the top interval closed, making the
  mapping total and deterministic;
* zero-variance variables get a sigma floor of 1e-9, so a constant channel
  lands in the middle bin instead of crashing the monitor;
* s and s_next share the same (state) statistics, so a value seen as an
  outcome today and an observation tomorrow maps to the same symbol;
* reward is carried through untouched — it is never discretized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CalibrationError, ConfigError, FormatError

SIGMA_FLOOR = 1e-9


@dataclass(slots=True)
class Transition:
    """One step of the interaction stream: observation, action, outcome."""

    t: int
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    reward: Optional[float] = None
    episode: Optional[int] = None

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.s_next = np.asarray(self.s_next, dtype=np.float64)
        if self.s.ndim != 1 or self.a.ndim != 1 or self.s_next.ndim != 1:
            raise FormatError("transition fields s, a, s_next must be 1-d vectors")
        if self.s.shape != self.s_next.shape:
            raise FormatError(
                f"s has dimension {self.s.shape[0]} but s_next has {self.s_next.shape[0]}"
            )


@dataclass(frozen=True)
class GroupingConfig:
    """Disjoint index groups over state and action variables.

    Groups must partition each index range: every index covered exactly once,
    no gaps, at least one group per variable class.
    """

    state_groups: tuple[tuple[int, ...], ...]
    action_groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "state_groups", tuple(tuple(int(i) for i in g) for g in self.state_groups)
        )
        object.__setattr__(
            self, "action_groups", tuple(tuple(int(i) for i in g) for g in self.action_groups)
        )

    @classmethod
    def single(cls, state_dim: int, action_dim: int) -> "GroupingConfig":
        """One group per variable class containing all indices."""
        return cls(
            state_groups=(tuple(range(state_dim)),),
            action_groups=(tuple(range(action_dim)),),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "GroupingConfig":
        """Load a grouping from a JSON file with keys state_groups, action_groups."""
        try:
            payload = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read grouping file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"grouping file {path} is not valid JSON: {exc}") from exc
        for key in ("state_groups", "action_groups"):
            if key not in payload:
                raise ConfigError(f"grouping file {path} missing key {key!r}")
        return cls(
            state_groups=tuple(tuple(g) for g in payload["state_groups"]),
            action_groups=tuple(tuple(g) for g in payload["action_groups"]),
        )

    def to_dict(self) -> dict:
        return {
            "state_groups": [list(g) for g in self.state_groups],
            "action_groups": [list(g) for g in self.action_groups],
        }

    def validate(self, state_dim: int, action_dim: int) -> None:
        _check_partition(self.state_groups, state_dim, "state")
        _check_partition(self.action_groups, action_dim, "action")


def _check_partition(groups: Sequence[Sequence[int]], dim: int, label: str) -> None:
    if len(groups) == 0:
        raise ConfigError(f"at least one {label} group is required")
    seen: list[int] = []
    for g in groups:
        if len(g) == 0:
            raise ConfigError(f"empty {label} group")
        seen.extend(g)
    if sorted(seen) != list(range(dim)):
        raise ConfigError(
            f"{label} groups must partition indices 0..{dim - 1} exactly once, got {sorted(seen)}"
        )


@dataclass(frozen=True)
class DiscretizerParams:
    """Frozen z-score + equal-width binning parameters.

    mu/sigma cover state variables first, then action variables
    (length state_dim + action_dim). Sigma entries are already floored.
    """

    bins: int
    clip: float
    mu: np.ndarray
    sigma: np.ndarray
    state_dim: int
    action_dim: int

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if not self.clip > 0:
            raise ConfigError(f"clip must be > 0, got {self.clip}")
        n = self.state_dim + self.action_dim
        if self.mu.shape != (n,) or self.sigma.shape != (n,):
            raise ConfigError(
                f"mu/sigma must have length state_dim + action_dim = {n}, "
                f"got {self.mu.shape} / {self.sigma.shape}"
            )
        if np.any(self.sigma < 0):
            raise ConfigError("sigma entries must be >= 0")
        object.__setattr__(self, "sigma", np.maximum(self.sigma, SIGMA_FLOOR))

    @property
    def state_mu(self) -> np.ndarray:
        return self.mu[: self.state_dim]

    @property
    def state_sigma(self) -> np.ndarray:
        return self.sigma[: self.state_dim]

    @property
    def action_mu(self) -> np.ndarray:
        return self.mu[self.state_dim :]

    @property
    def action_sigma(self) -> np.ndarray:
        return self.sigma[self.state_dim :]


@dataclass(frozen=True, slots=True)
class SymbolizedTransition:
    """Per-group composite symbols for one transition.

    Each entry of s_sym / a_sym / s_next_sym is the base-``bins`` encoding of
    one variable group's bin indices; s_sym and s_next_sym share the group
    structure. Reward passes through untouched.
    """

    t: int
    s_sym: tuple[int, ...]
    a_sym: tuple[int, ...]
    s_next_sym: tuple[int, ...]
    reward: Optional[float] = None
    episode: Optional[int] = None


def fit_discretizer(
    calibration: Iterable[Transition], bins: int = 3, clip: float = 3.0
) -> DiscretizerParams:
    """Fit per-variable mean/std on a calibration segment and freeze them.

    State statistics are estimated from the observation (s) values; they are
    shared with s_next so the mapping is time-consistent. Standard deviations
    use the n-1 denominator; with a single calibration record, or a constant
    variable, sigma falls to the 1e-9 floor.
    """
    cal = list(calibration)
    if not cal:
        raise CalibrationError("cannot fit a discretizer on an empty calibration segment")
    state_dim = cal[0].s.shape[0]
    action_dim = cal[0].a.shape[0]
    S = np.empty((len(cal), state_dim))
    A = np.empty((len(cal), action_dim))
    for i, tr in enumerate(cal):
        if tr.s.shape[0] != state_dim or tr.a.shape[0] != action_dim:
            raise FormatError(
                f"calibration record t={tr.t} changes dimensions "
                f"({tr.s.shape[0]}/{tr.a.shape[0]} vs {state_dim}/{action_dim})"
            )
        S[i] = tr.s
        A[i] = tr.a
    mu = np.concatenate([S.mean(axis=0), A.mean(axis=0)])
    if len(cal) >= 2:
        sigma = np.concatenate([S.std(axis=0, ddof=1), A.std(axis=0, ddof=1)])
    else:
        sigma = np.zeros(state_dim + action_dim)
    return DiscretizerParams(
        bins=bins, clip=clip, mu=mu, sigma=sigma, state_dim=state_dim, action_dim=action_dim
    )


def _bin_indices(values: np.ndarray, mu: np.ndarray, sigma: np.ndarray, bins: int, clip: float) -> np.ndarray:
    """Map values to bin indices over [-clip, clip]; top interval closed."""
    z = (values - mu) / sigma
    z = np.clip(z, -clip, clip)
    width = 2.0 * clip / bins
    idx = np.floor((z + clip) / width).astype(np.int64)
    return np.minimum(idx, bins - 1)


def _group_symbols(idx_row: np.ndarray, groups: Sequence[Sequence[int]], bins: int) -> tuple[int, ...]:
    syms = []
    for g in groups:
        sym = 0
        for j in g:
            sym = sym * bins + int(idx_row[j])
        syms.append(sym)
    return tuple(syms)


def discretize(
    x: Transition, params: DiscretizerParams, grouping: GroupingConfig
) -> SymbolizedTransition:
    """Symbolize one transition with frozen parameters.

    Within a group, per-variable bin indices combine positionally as one
    base-``bins`` integer, first listed variable most significant.
    """
    if x.s.shape[0] != params.state_dim or x.a.shape[0] != params.action_dim:
        raise FormatError(
            f"transition t={x.t} has dims {x.s.shape[0]}/{x.a.shape[0]}, "
            f"discretizer was fitted for {params.state_dim}/{params.action_dim}"
        )
    grouping.validate(params.state_dim, params.action_dim)
    b, c = params.bins, params.clip
    s_idx = _bin_indices(x.s, params.state_mu, params.state_sigma, b, c)
    a_idx = _bin_indices(x.a, params.action_mu, params.action_sigma, b, c)
    sn_idx = _bin_indices(x.s_next, params.state_mu, params.state_sigma, b, c)
    return SymbolizedTransition(
        t=x.t,
        s_sym=_group_symbols(s_idx, grouping.state_groups, b),
        a_sym=_group_symbols(a_idx, grouping.action_groups, b),
        s_next_sym=_group_symbols(sn_idx, grouping.state_groups, b),
        reward=x.reward,
        episode=x.episode,
    )


def discretize_stream(
    transitions: Sequence[Transition], params: DiscretizerParams, grouping: GroupingConfig
) -> list[SymbolizedTransition]:
    """Vectorized batch symbolization; identical mapping to discretize()."""
    if not transitions:
        return []
    grouping.validate(params.state_dim, params.action_dim)
    n = len(transitions)
    S = np.empty((n, params.state_dim))
    A = np.empty((n, params.action_dim))
    SN = np.empty((n, params.state_dim))
    for i, tr in enumerate(transitions):
        if tr.s.shape[0] != params.state_dim or tr.a.shape[0] != params.action_dim:
            raise FormatError(
                f"transition t={tr.t} has dims {tr.s.shape[0]}/{tr.a.shape[0]}, "
                f"discretizer was fitted for {params.state_dim}/{params.action_dim}"
            )
        S[i] = tr.s
        A[i] = tr.a
        SN[i] = tr.s_next
    b, c = params.bins, params.clip
    s_idx = _bin_indices(S, params.state_mu, params.state_sigma, b, c)
    a_idx = _bin_indices(A, params.action_mu, params.action_sigma, b, c)
    sn_idx = _bin_indices(SN, params.state_mu, params.state_sigma, b, c)

    def encode(idx: np.ndarray, groups) -> list[tuple[int, ...]]:
        cols = []
        for g in groups:
            sym = np.zeros(n, dtype=object) if len(g) * np.log2(b) > 62 else np.zeros(n, dtype=np.int64)
            for j in g:
                sym = sym * b + idx[:, j]
            cols.append(sym)
        return [tuple(int(col[i]) for col in cols) for i in range(n)]

    s_syms = encode(s_idx, grouping.state_groups)
    a_syms = encode(a_idx, grouping.action_groups)
    sn_syms = encode(sn_idx, grouping.state_groups)
    return [
        SymbolizedTransition(
            t=tr.t,
            s_sym=s_syms[i],
            a_sym=a_syms[i],
            s_next_sym=sn_syms[i],
            reward=tr.reward,
            episode=tr.episode,
        )
        for i, tr in enumerate(transitions)
    ]
