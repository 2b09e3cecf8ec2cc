"""Rollout exporter: run episodes, apply perturbations, write records.

One line per step, newline-delimited JSON with keys t, s, a, s_next and,
when the environment provides a reward, r, plus the episode index — the
exact wire format the monitor ingests. The recorded observation is what
the policy saw (so observation noise is visible in the stream) and the
recorded action is the executed one (so actuator noise is visible too).

Perturbations switch on at onset_episode (1-indexed) and draw from their
own random stream, so a zero-magnitude or "none" export is byte-identical
to an unperturbed one under the same seed.
"""

from __future__ import annotations

import json
import socket
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from urllib.parse import urlsplit

import numpy as np

from .env import AdapterError, SetupError, UnsupportedPerturbationError, make_env

PERTURBATION_KINDS = (
    "none",
    "action_noise",
    "observation_noise",
    "external_force",
    "dynamics_scale",
)


@dataclass(frozen=True)
class ExportConfig:
    """What to run and where to send the records."""

    env_id: str
    episodes: int
    steps_per_episode: int
    perturbation: str = "none"
    magnitude: float = 0.0
    onset_episode: int = 15
    output: str = "-"  # file path, "-" for stdout, or tcp://host:port
    seed: int = 0
    include_reward: bool = True

    def validate(self):
        if self.perturbation not in PERTURBATION_KINDS:
            raise AdapterError(
                f"unknown perturbation {self.perturbation!r}, expected one of {PERTURBATION_KINDS}"
            )
        if self.magnitude < 0:
            raise AdapterError("magnitude must be >= 0")
        if self.episodes < 1 or self.steps_per_episode < 1:
            raise AdapterError("episodes and steps_per_episode must be >= 1")
        if self.perturbation != "none" and self.onset_episode > self.episodes:
            raise AdapterError(
                f"onset_episode {self.onset_episode} exceeds episodes {self.episodes}"
            )


def record_line(t, s, a, s_next, reward=None, episode=None) -> str:
    obj = {
        "t": int(t),
        "s": [float(x) for x in np.asarray(s).ravel()],
        "a": [float(x) for x in np.asarray(a).ravel()],
        "s_next": [float(x) for x in np.asarray(s_next).ravel()],
    }
    if reward is not None:
        obj["r"] = float(reward)
    if episode is not None:
        obj["episode"] = int(episode)
    return json.dumps(obj, separators=(",", ":"))


@contextmanager
def _open_target(target: str):
    if target == "-":
        yield sys.stdout
        return
    if target.startswith("tcp://"):
        parts = urlsplit(target)
        if parts.port is None:
            raise AdapterError(f"{target}: tcp target needs an explicit port")
        try:
            conn = socket.create_connection((parts.hostname or "127.0.0.1", parts.port))
        except OSError as exc:
            raise AdapterError(f"cannot connect to {target}: {exc}") from exc
        with conn, conn.makefile("w", encoding="utf-8") as fh:
            yield fh
        return
    with open(target, "w", encoding="utf-8") as fh:
        yield fh


def _require_hook(env, name: str, kind: str):
    hook = getattr(env, name, None)
    if hook is None or not callable(hook):
        raise UnsupportedPerturbationError(
            f"environment {type(env).__name__} exposes no {name}() hook; "
            f"refusing to silently skip the {kind} perturbation"
        )
    return hook


def export(config: ExportConfig, policy) -> int:
    """Run the evaluation episodes and emit one record per step.

    The policy is any callable observation -> action; determinism of the
    output requires it to be deterministic or internally seeded.
    Returns the number of records written.
    """
    config.validate()
    env = make_env(config.env_id)
    kind = config.perturbation if config.magnitude > 0 else "none"

    # force/dynamics need environment support: check before running anything
    if kind == "external_force":
        _require_hook(env, "set_external_force", kind)
    if kind == "dynamics_scale":
        _require_hook(env, "set_dynamics_scale", kind)

    seed_root = np.random.SeedSequence(config.seed)
    env_seeds = seed_root.spawn(config.episodes)
    noise_rng = np.random.default_rng(seed_root.spawn(1)[0])

    count = 0
    t = 0
    with _open_target(config.output) as sink:
        for ep in range(1, config.episodes + 1):
            active = kind != "none" and ep >= config.onset_episode

            # configure environment-side hooks for this episode
            if kind == "external_force":
                dim = getattr(env, "observation_dim", None)
                if dim is None:
                    raise UnsupportedPerturbationError(
                        "external_force needs the environment to declare observation_dim"
                    )
                vec = np.zeros(dim)
                if active:
                    vec[0] = config.magnitude
                _require_hook(env, "set_external_force", kind)(vec)
            if kind == "dynamics_scale":
                _require_hook(env, "set_dynamics_scale", kind)(
                    1.0 + config.magnitude if active else 1.0
                )

            obs, _ = env.reset(seed=int(env_seeds[ep - 1].generate_state(1)[0]))
            obs = np.asarray(obs, dtype=np.float64)
            if active and kind == "observation_noise":
                obs = obs + config.magnitude * noise_rng.standard_normal(obs.shape)
            for _ in range(config.steps_per_episode):
                action = np.asarray(policy(obs), dtype=np.float64)
                if active and kind == "action_noise":
                    action = action + config.magnitude * noise_rng.standard_normal(action.shape)
                obs_next, reward, terminated, truncated, _ = env.step(action)
                obs_next = np.asarray(obs_next, dtype=np.float64)
                if active and kind == "observation_noise":
                    obs_next = obs_next + config.magnitude * noise_rng.standard_normal(obs_next.shape)
                sink.write(
                    record_line(
                        t, obs, action, obs_next,
                        reward=reward if config.include_reward else None,
                        episode=ep,
                    )
                    + "\n"
                )
                count += 1
                t += 1
                obs = obs_next
                if terminated or truncated:
                    break
        sink.flush()
    return count
