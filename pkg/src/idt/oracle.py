"""Exact information metrics from fully enumerated joint distributions.

This is the independent ground truth the plug-in estimator is tested
against: every quantity is computed by direct summation over the full
probability table with compensated accumulation (math.fsum), and MI/Hf/Hb
use their defining sums rather than the estimator's three-entropy identity,
so the two routes share no code path.

Brute force by definition: tables are capped at 10^4 cells. Anything larger
belongs to the windowed estimator, not the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DistributionError, OracleError
from .infometrics import NEG_CLAMP, WindowMetrics
from .synthloop import DiscreteLoopConfig

MAX_CELLS = 10_000
MASS_TOL = 1e-15


@dataclass(frozen=True)
class JointDistribution:
    """Probability table p(s, a, s_next) over finite alphabets."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.float64))
        if self.p.ndim != 3:
            raise DistributionError(f"expected a 3-d table p(s, a, s_next), got ndim={self.p.ndim}")
        if self.p.size > MAX_CELLS:
            raise DistributionError(
                f"table has {self.p.size} cells, exact computation is capped at {MAX_CELLS}"
            )
        if np.any(self.p < 0):
            raise DistributionError("probability table has negative entries")
        mass = math.fsum(self.p.ravel().tolist())
        if abs(mass - 1.0) > MASS_TOL:
            raise DistributionError(f"probability mass is {mass!r}, not 1 within {MASS_TOL}")

    @classmethod
    def normalized(cls, table) -> "JointDistribution":
        """Build from any nonnegative table, dividing by its exact total."""
        arr = np.asarray(table, dtype=np.float64)
        total = math.fsum(arr.ravel().tolist())
        if total <= 0:
            raise DistributionError("cannot normalize a table with nonpositive total mass")
        return cls(arr / total)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.p.shape


def _fsum_entropy(probs) -> float:
    return -math.fsum(q * math.log2(q) for q in probs if q > 0.0)


def _clamp(x: float) -> float:
    return 0.0 if -NEG_CLAMP < x < 0.0 else x


def exact_metrics(d: JointDistribution) -> WindowMetrics:
    """Evaluate every windowed quantity exactly on a known distribution.

    MI, Hf and Hb come from their defining sums over the table:
        MI = sum p log2( p / (p_sa * p_snext) )
        Hf = sum p log2( p_sa / p )        (outcome residual)
        Hb = sum p log2( p_snext / p )     (cause residual)
    """
    p = d.p
    n_s, n_a, n_sn = p.shape
    # marginals via compensated summation, cell by cell
    p_s = np.array([math.fsum(p[s].ravel().tolist()) for s in range(n_s)])
    p_a = np.array([math.fsum(p[:, a].ravel().tolist()) for a in range(n_a)])
    p_sn = np.array([math.fsum(p[:, :, sn].ravel().tolist()) for sn in range(n_sn)])
    p_sa = np.array(
        [[math.fsum(p[s, a].tolist()) for a in range(n_a)] for s in range(n_s)]
    )

    h_s = _fsum_entropy(p_s)
    h_a = _fsum_entropy(p_a)
    h_sn = _fsum_entropy(p_sn)
    h_sa = _fsum_entropy(p_sa.ravel())
    h_joint = _fsum_entropy(p.ravel())

    mi_terms, hf_terms, hb_terms = [], [], []
    for s in range(n_s):
        for a in range(n_a):
            for sn in range(n_sn):
                q = p[s, a, sn]
                if q <= 0.0:
                    continue
                mi_terms.append(q * math.log2(q / (p_sa[s, a] * p_sn[sn])))
                hf_terms.append(q * math.log2(p_sa[s, a] / q))
                hb_terms.append(q * math.log2(p_sn[sn] / q))
    mi = _clamp(math.fsum(mi_terms))
    hf = _clamp(math.fsum(hf_terms))
    hb = _clamp(math.fsum(hb_terms))
    c = h_s + h_a + h_sn
    return WindowMetrics(
        window_index=None,
        t_start=None,
        t_end=None,
        H_S=h_s,
        H_A=h_a,
        H_Snext=h_sn,
        H_SA=h_sa,
        H_joint=h_joint,
        MI=mi,
        C=c,
        P=mi / c if c > 0.0 else 0.0,
        Hf=hf,
        Hb=hb,
        dH=hf - hb,
        reward_mean=None,
        sample_count=None,
        flags=() if c > 0.0 else ("degenerate-denominator",),
    )


def stationary_joint(config: DiscreteLoopConfig) -> JointDistribution:
    """Exact stationary joint p(s)·pi(a|s)·k(s'|s,a) of a discrete loop.

    The stationary state distribution is obtained by a direct linear solve of
    pi M = pi with the normalization constraint; a reducible chain makes the
    system singular or leaves a residual and raises OracleError.
    """
    config.validate()
    kernel, policy = config.kernel, config.policy
    n_states = policy.shape[0]
    # state-to-state chain under the scripted policy
    M = np.einsum("sa,sat->st", policy, kernel)
    A = M.T - np.eye(n_states)
    A[-1, :] = 1.0
    b = np.zeros(n_states)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"stationary solve failed (reducible chain?): {exc}") from exc
    if np.any(pi < -1e-9):
        raise OracleError(f"stationary solve produced negative mass: {pi}")
    pi = np.maximum(pi, 0.0)
    residual = float(np.max(np.abs(pi @ M - pi)))
    if residual > 1e-12:
        raise OracleError(f"stationary residual {residual:.3e} exceeds 1e-12")
    table = pi[:, None, None] * policy[:, :, None] * kernel
    return JointDistribution.normalized(table)
