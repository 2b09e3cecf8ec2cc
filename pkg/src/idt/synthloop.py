"""Synthetic closed loops, perturbation injectors, and the benchmark runner.

Two loop families stand in for a physics simulator:

* a linear-Gaussian loop with a frozen linear feedback policy — rich enough
  that information metrics have structure, cheap enough to run thousands of
  episodes on a desk;
* an exactly enumerable discrete loop (finite kernel + scripted stochastic
  policy) whose stationary joint distribution the oracle module can compute
  in closed form.

Perturbations mirror the usual failure menu: additive Gaussian noise on
actions or observations (agent side), a constant force bias or a scaled
dynamics matrix (environment side), each switched on from a configurable
onset episode. The benchmark runner replays the full monitoring pipeline per
trial — fit discretizer on the pre-onset segment, symbolize, window,
calibrate, detect — and aggregates seed-averaged detection rates and pooled
latency medians, with windowed reward evaluated under the identical
protocol for comparison.

The linear loop's reward is a quadratic cost, so reward degradation under
mild perturbations is gradual by construction: exactly the silent-
degradation regime the benchmark must exhibit.
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    GroupingConfig,
    SymbolizedTransition,
    Transition,
    discretize_stream,
    fit_discretizer,
)
from .detector import Summary, TrialOutcome, calibrate, detect, summarize
from .errors import ConfigError
from .infometrics import WindowMetrics, WindowSpec, stream_metrics

DIVERGENCE_BOUND = 1e6


class PerturbationKind(Enum):
    NONE = "none"
    ACTION_NOISE = "action_noise"
    OBSERVATION_NOISE = "observation_noise"
    EXTERNAL_FORCE = "external_force"
    DYNAMICS_SCALE = "dynamics_scale"


class Side(Enum):
    AGENT = "agent"
    ENVIRONMENT = "environment"


@dataclass(frozen=True)
class Perturbation:
    """A degradation switched on from onset_episode (1-indexed) onward."""

    kind: PerturbationKind
    magnitude: float = 0.0
    onset_episode: int = 15
    side: Side = Side.AGENT

    def __post_init__(self):
        if self.magnitude < 0:
            raise ConfigError(f"perturbation magnitude must be >= 0, got {self.magnitude}")
        if self.onset_episode < 1:
            raise ConfigError(f"onset_episode must be >= 1, got {self.onset_episode}")

    @classmethod
    def none(cls, onset_episode: int = 15) -> "Perturbation":
        return cls(kind=PerturbationKind.NONE, magnitude=0.0, onset_episode=onset_episode)


@dataclass(frozen=True)
class LinearLoopConfig:
    """Stable linear-Gaussian loop with a frozen linear feedback policy."""

    state_dim: int
    action_dim: int
    dynamics: np.ndarray  # (n, n) state propagation
    input_gain: np.ndarray  # (n, m) action coupling
    control: np.ndarray  # (m, n) scripted policy gain
    process_noise: float
    exploration_noise: float
    state_cost: float
    action_cost: float
    episode_length: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "dynamics", np.asarray(self.dynamics, dtype=np.float64))
        object.__setattr__(self, "input_gain", np.asarray(self.input_gain, dtype=np.float64))
        object.__setattr__(self, "control", np.asarray(self.control, dtype=np.float64))

    def validate(self) -> None:
        n, m = self.state_dim, self.action_dim
        if self.dynamics.shape != (n, n):
            raise ConfigError(f"dynamics must be {n}x{n}, got {self.dynamics.shape}")
        if self.input_gain.shape != (n, m):
            raise ConfigError(f"input_gain must be {n}x{m}, got {self.input_gain.shape}")
        if self.control.shape != (m, n):
            raise ConfigError(f"control must be {m}x{n}, got {self.control.shape}")
        if not (self.process_noise > 0 and self.exploration_noise > 0):
            raise ConfigError("noise scales must be > 0")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        closed = self.dynamics + self.input_gain @ self.control
        radius = float(np.max(np.abs(np.linalg.eigvals(closed))))
        if radius >= 1.0:
            raise ConfigError(f"closed-loop spectral radius {radius:.3f} is not < 1")


def default_linear_config(seed: int = 0, episode_length: int = 500) -> LinearLoopConfig:
    """The desk-scale nominal loop used by the shipped benchmark suite.

    Mixing is fast (closed-loop spectral radius ~0.56) so windowed entropy
    estimates have light, near-Gaussian tails; that is what keeps the 3-sigma
    protocol's false-positive rate low at desk-scale window counts.
    """
    blk = np.array(
        [
            [0.50, 0.06, 0.00, 0.00],
            [-0.06, 0.47, 0.03, 0.00],
            [0.00, -0.03, 0.44, 0.06],
            [0.03, 0.00, -0.06, 0.41],
        ]
    )
    dynamics = np.zeros((8, 8))
    dynamics[:4, :4] = blk
    dynamics[4:, 4:] = 0.95 * blk
    dynamics[0, 4] = 0.03
    dynamics[5, 1] = -0.03
    input_gain = np.array(
        [
            [0.10, 0.00],
            [0.05, 0.03],
            [0.00, 0.08],
            [0.04, -0.04],
            [0.08, 0.02],
            [0.00, 0.06],
            [0.05, 0.00],
            [-0.03, 0.05],
        ]
    )
    control = np.array(
        [
            [-0.50, 0.00, -0.30, 0.00, -0.40, 0.00, -0.20, 0.00],
            [0.00, -0.50, 0.00, -0.30, 0.00, -0.40, 0.00, -0.20],
        ]
    )
    return LinearLoopConfig(
        state_dim=8,
        action_dim=2,
        dynamics=dynamics,
        input_gain=input_gain,
        control=control,
        process_noise=0.03,
        exploration_noise=0.015,
        state_cost=1.0,
        action_cost=0.1,
        episode_length=episode_length,
        seed=seed,
    )


def suite_grouping() -> GroupingConfig:
    """Body-part-style grouping used with the default linear loop."""
    return GroupingConfig(
        state_groups=((0, 1), (2, 3), (4, 5), (6, 7)), action_groups=((0, 1),)
    )


@dataclass
class LoopRun:
    """A generated stream plus the divergence flag for unstable loops."""

    transitions: list[Transition]
    diverged: bool = False
    divergence_step: Optional[int] = None


def perturbation_onset_step(perturbation: Perturbation, episode_length: int) -> int:
    """Global index of the first perturbed step (episodes are 1-indexed)."""
    return (perturbation.onset_episode - 1) * episode_length


def run_linear_loop(
    config: LinearLoopConfig, perturbation: Perturbation, episodes: int
) -> LoopRun:
    """Roll the closed loop for `episodes` episodes, perturbing from onset.

    The recorded observation stream is what the policy sees, so observation
    noise shows up in s/s_next; the recorded action is the executed one, so
    actuator noise shows up in a. Separate generator streams drive process,
    exploration, reset, and perturbation noise: a zero-magnitude or NONE
    perturbation leaves the stream bit-identical, and the pre-onset prefix is
    always identical across perturbations under the same seed.
    """
    config.validate()
    if perturbation.kind is not PerturbationKind.NONE and episodes < perturbation.onset_episode:
        raise ConfigError(
            f"need episodes >= onset_episode, got {episodes} < {perturbation.onset_episode}"
        )
    init_rng, proc_rng, expl_rng, pert_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(4)
    )
    n, m = config.state_dim, config.action_dim
    L = config.episode_length
    D, B, K = config.dynamics, config.input_gain, config.control
    force_dir = np.zeros(n)
    force_dir[0] = 1.0

    transitions: list[Transition] = []
    t = 0
    diverged = False
    divergence_step: Optional[int] = None
    for ep in range(1, episodes + 1):
        active = (
            perturbation.kind is not PerturbationKind.NONE
            and perturbation.magnitude > 0
            and ep >= perturbation.onset_episode
        )
        kind = perturbation.kind if active else PerturbationKind.NONE
        D_eff = (1.0 + perturbation.magnitude) * D if kind is PerturbationKind.DYNAMICS_SCALE else D
        force = (
            perturbation.magnitude * force_dir
            if kind is PerturbationKind.EXTERNAL_FORCE
            else np.zeros(n)
        )
        # noise drawn in per-episode blocks; perturbation noise comes from its
        # own stream and only when active, so a NONE or zero-magnitude run and
        # every pre-onset prefix stay bit-identical under the same seed
        s = config.process_noise * init_rng.standard_normal(n)
        proc = config.process_noise * proc_rng.standard_normal((L, n))
        expl = config.exploration_noise * expl_rng.standard_normal((L, m))
        if kind is PerturbationKind.ACTION_NOISE:
            act_noise = perturbation.magnitude * pert_rng.standard_normal((L, m))
        if kind is PerturbationKind.OBSERVATION_NOISE:
            obs_noise = perturbation.magnitude * pert_rng.standard_normal((L + 1, n))
            obs = s + obs_noise[0]
        else:
            obs = s
        for k in range(L):
            a = K @ obs + expl[k]
            if kind is PerturbationKind.ACTION_NOISE:
                a = a + act_noise[k]
            reward = -(config.state_cost * float(s @ s) + config.action_cost * float(a @ a))
            s_next = D_eff @ s + B @ a + force + proc[k]
            if kind is PerturbationKind.OBSERVATION_NOISE:
                obs_next = s_next + obs_noise[k + 1]
            else:
                obs_next = s_next
            transitions.append(
                Transition(t=t, s=obs, a=a, s_next=obs_next, reward=reward, episode=ep)
            )
            t += 1
            if float(np.linalg.norm(s_next)) > DIVERGENCE_BOUND:
                diverged = True
                divergence_step = t - 1
                break
            s, obs = s_next, obs_next
        if diverged:
            break
    return LoopRun(transitions=transitions, diverged=diverged, divergence_step=divergence_step)


@dataclass(frozen=True)
class DiscreteLoopConfig:
    """Finite-alphabet loop: transition kernel plus scripted policy table."""

    kernel: np.ndarray  # (S, A, S') with rows over s' summing to 1
    policy: np.ndarray  # (S, A) with rows summing to 1
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=np.float64))
        object.__setattr__(self, "policy", np.asarray(self.policy, dtype=np.float64))

    @property
    def n_states(self) -> int:
        return self.policy.shape[0]

    @property
    def n_actions(self) -> int:
        return self.policy.shape[1]

    def validate(self) -> None:
        if self.policy.ndim != 2 or self.kernel.ndim != 3:
            raise ConfigError("policy must be 2-d and kernel 3-d")
        n_s, n_a = self.policy.shape
        if self.kernel.shape != (n_s, n_a, n_s):
            raise ConfigError(
                f"kernel shape {self.kernel.shape} inconsistent with policy {self.policy.shape}"
            )
        if np.any(self.kernel < 0) or np.any(self.policy < 0):
            raise ConfigError("probabilities must be nonnegative")
        if np.max(np.abs(self.policy.sum(axis=1) - 1.0)) > 1e-12:
            raise ConfigError("policy rows must sum to 1 within 1e-12")
        if np.max(np.abs(self.kernel.sum(axis=2) - 1.0)) > 1e-12:
            raise ConfigError("kernel rows must sum to 1 within 1e-12")


def random_discrete_config(seed: int, n_states: int = 3, n_actions: int = 3) -> DiscreteLoopConfig:
    """A strictly positive (hence irreducible, aperiodic) random loop."""
    rng = np.random.default_rng(seed)
    kernel = rng.random((n_states, n_actions, n_states)) + 0.05
    kernel /= kernel.sum(axis=2, keepdims=True)
    policy = rng.random((n_states, n_actions)) + 0.05
    policy /= policy.sum(axis=1, keepdims=True)
    return DiscreteLoopConfig(kernel=kernel, policy=policy, seed=seed)


def run_discrete_loop(
    config: DiscreteLoopConfig,
    perturbation: Perturbation,
    steps: int,
    onset_step: int = 0,
) -> list[SymbolizedTransition]:
    """Sample the Markov chain induced by kernel and policy.

    A perturbation mixes the policy with the uniform distribution (AGENT
    side) or every kernel row with the uniform outcome distribution
    (ENVIRONMENT side), with mixing weight equal to its magnitude, from
    onset_step onward (default: the whole run, which is what the exact
    stationary analysis assumes).
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n_s, n_a = config.n_states, config.n_actions
    weight = perturbation.magnitude if perturbation.kind is not PerturbationKind.NONE else 0.0
    policy_p = config.policy
    kernel_p = config.kernel
    if weight > 0 and perturbation.side is Side.AGENT:
        policy_p = (1.0 - weight) * config.policy + weight / n_a
    if weight > 0 and perturbation.side is Side.ENVIRONMENT:
        kernel_p = (1.0 - weight) * config.kernel + weight / n_s

    # cumulative rows as plain lists: bisect on small lists beats array calls
    # in the per-step loop by a wide margin
    pol_cum = [row.tolist() for row in np.cumsum(config.policy, axis=1)]
    ker_cum = [[cell.tolist() for cell in row] for row in np.cumsum(config.kernel, axis=2)]
    pol_cum_p = [row.tolist() for row in np.cumsum(policy_p, axis=1)]
    ker_cum_p = [[cell.tolist() for cell in row] for row in np.cumsum(kernel_p, axis=2)]

    u = rng.random((steps, 2)).tolist()
    out: list[SymbolizedTransition] = []
    s = 0
    a_top = n_a - 1
    s_top = n_s - 1
    right = bisect.bisect_right
    for k in range(steps):
        u_a, u_s = u[k]
        if weight > 0 and k >= onset_step:
            pol_row, ker_row = pol_cum_p[s], ker_cum_p[s]
        else:
            pol_row, ker_row = pol_cum[s], ker_cum[s]
        a = right(pol_row, u_a)
        if a > a_top:
            a = a_top
        s_next = right(ker_row[a], u_s)
        if s_next > s_top:
            s_next = s_top
        out.append(SymbolizedTransition(t=k, s_sym=(s,), a_sym=(a,), s_next_sym=(s_next,)))
        s = s_next
    return out


LoopConfig = Union[LinearLoopConfig, DiscreteLoopConfig]


@dataclass(frozen=True)
class BenchmarkCondition:
    """One (loop, perturbation) slot of a suite."""

    label: str
    config: LoopConfig
    perturbation: Perturbation
    episodes: Optional[int] = None  # linear loops
    steps: Optional[int] = None  # discrete loops
    onset_step: Optional[int] = None  # discrete loops
    grouping: Optional[GroupingConfig] = None  # linear loops; None = one group per class


@dataclass
class TrialResult:
    """Everything one trial produced, or the error that ended it."""

    fingerprint: str
    seed: int
    condition: str
    perturbation: Perturbation
    onset_step: int
    onset_window: Optional[int] = None
    metrics: list[WindowMetrics] = field(default_factory=list)
    outcome: Optional[TrialOutcome] = None
    diverged: bool = False
    error: Optional[str] = None
    n_steps: int = 0


@dataclass
class BenchmarkResult:
    summary: Summary
    trials: list[TrialResult]
    window: WindowSpec
    threshold: float


def _trial_seed(seed: int, condition_index: int) -> int:
    return int(np.random.SeedSequence((int(seed), int(condition_index))).generate_state(1)[0])


def _fingerprint(label: str, seed: int, trial_seed: int, pert: Perturbation) -> str:
    text = f"{label}|{seed}|{trial_seed}|{pert.kind.value}|{pert.magnitude!r}|{pert.onset_episode}|{pert.side.value}"
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _onset_window_index(series: Sequence[WindowMetrics], onset_step: int) -> int:
    for i, wm in enumerate(series):
        if wm.t_end >= onset_step:
            return i
    raise ConfigError("no window reaches the perturbation onset")


def run_trial(
    condition: BenchmarkCondition,
    seed: int,
    condition_index: int,
    spec: WindowSpec,
    threshold: float,
    min_consecutive: int = 1,
    bins: int = 3,
    clip: float = 3.0,
) -> TrialResult:
    """Full pipeline for one (seed, condition) pair.

    Fit the discretizer on the pre-onset segment, symbolize the whole
    stream, window it, calibrate each channel off the windows that end
    before onset (straddling windows are excluded from calibration and the
    first window touching the onset step counts as post-onset window zero),
    then detect.
    """
    trial_seed = _trial_seed(seed, condition_index)
    pert = condition.perturbation
    result = TrialResult(
        fingerprint=_fingerprint(condition.label, seed, trial_seed, pert),
        seed=seed,
        condition=condition.label,
        perturbation=pert,
        onset_step=0,
    )
    try:
        if isinstance(condition.config, LinearLoopConfig):
            cfg = replace(condition.config, seed=trial_seed)
            if condition.episodes is None:
                raise ConfigError(f"condition {condition.label}: linear loops need episodes")
            onset_step = perturbation_onset_step(pert, cfg.episode_length)
            run = run_linear_loop(cfg, pert, condition.episodes)
            result.diverged = run.diverged
            transitions = run.transitions
            result.n_steps = len(transitions)
            result.onset_step = onset_step
            grouping = condition.grouping or GroupingConfig.single(cfg.state_dim, cfg.action_dim)
            params = fit_discretizer(transitions[:onset_step], bins=bins, clip=clip)
            symbols = discretize_stream(transitions, params, grouping)
        else:
            cfg = replace(condition.config, seed=trial_seed)
            if condition.steps is None or condition.onset_step is None:
                raise ConfigError(
                    f"condition {condition.label}: discrete loops need steps and onset_step"
                )
            onset_step = condition.onset_step
            result.onset_step = onset_step
            symbols = run_discrete_loop(cfg, pert, condition.steps, onset_step=onset_step)
            result.n_steps = len(symbols)

        series = stream_metrics(symbols, spec)
        result.metrics = series
        onset_window = _onset_window_index(series, onset_step)
        result.onset_window = onset_window
        model = calibrate([wm for wm in series if wm.t_end < onset_step], threshold)
        result.outcome = detect(series, model, onset_window, threshold, min_consecutive)
    except Exception as exc:  # a failed trial is recorded, not fatal to the suite
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run_benchmark(
    suite: Sequence[BenchmarkCondition],
    seeds: Sequence[int],
    spec: WindowSpec = WindowSpec(),
    threshold: float = 3.0,
    min_consecutive: int = 1,
    bins: int = 3,
    clip: float = 3.0,
) -> BenchmarkResult:
    """Run every (seed, condition) trial and aggregate a summary table."""
    if not suite or not len(list(seeds)):
        raise ConfigError("benchmark needs a non-empty suite and at least one seed")
    trials: list[TrialResult] = []
    outcomes_by_seed: dict[int, list[TrialOutcome]] = {}
    for seed in seeds:
        for j, condition in enumerate(suite):
            tr = run_trial(condition, seed, j, spec, threshold, min_consecutive, bins, clip)
            trials.append(tr)
            if tr.outcome is not None:
                outcomes_by_seed.setdefault(seed, []).append(tr.outcome)
    summary = summarize(outcomes_by_seed)
    return BenchmarkResult(summary=summary, trials=trials, window=spec, threshold=threshold)


def default_suite(
    episodes: int = 52,
    episode_length: int = 500,
    onset_episode: int = 51,
    action_noise_levels: Sequence[float] = (0.01, 0.03, 0.04),
    observation_noise_levels: Sequence[float] = (0.01, 0.03),
    force_levels: Sequence[float] = (0.005, 0.01),
    dynamics_scale_levels: Sequence[float] = (0.10,),
) -> list[BenchmarkCondition]:
    """Eight desk-scale conditions spanning agent- and environment-side faults."""
    base = default_linear_config(seed=0, episode_length=episode_length)
    grouping = suite_grouping()

    def cond(label: str, kind: PerturbationKind, magnitude: float, side: Side) -> BenchmarkCondition:
        return BenchmarkCondition(
            label=label,
            config=base,
            perturbation=Perturbation(
                kind=kind, magnitude=magnitude, onset_episode=onset_episode, side=side
            ),
            episodes=episodes,
            grouping=grouping,
        )

    suite = []
    for mag in action_noise_levels:
        suite.append(cond(f"action_noise_{mag:g}", PerturbationKind.ACTION_NOISE, mag, Side.AGENT))
    for mag in observation_noise_levels:
        suite.append(
            cond(f"observation_noise_{mag:g}", PerturbationKind.OBSERVATION_NOISE, mag, Side.AGENT)
        )
    for mag in force_levels:
        suite.append(
            cond(f"external_force_{mag:g}", PerturbationKind.EXTERNAL_FORCE, mag, Side.ENVIRONMENT)
        )
    for mag in dynamics_scale_levels:
        suite.append(
            cond(f"dynamics_scale_{mag:g}", PerturbationKind.DYNAMICS_SCALE, mag, Side.ENVIRONMENT)
        )
    return suite


def all_none_suite(
    episodes: int = 52, episode_length: int = 500, onset_episode: int = 51, slots: int = 8
) -> list[BenchmarkCondition]:
    """Control suite: same shape, no perturbation — rates are false positives."""
    base = default_linear_config(seed=0, episode_length=episode_length)
    grouping = suite_grouping()
    return [
        BenchmarkCondition(
            label=f"none_{i}",
            config=base,
            perturbation=Perturbation.none(onset_episode=onset_episode),
            episodes=episodes,
            grouping=grouping,
        )
        for i in range(slots)
    ]
