"""Environment construction and the built-in test environment.

The exporter talks to anything with the gym-style API:

    obs, info = env.reset(seed=...)
    obs, reward, terminated, truncated, info = env.step(action)

Environment ids starting with ``builtin:`` construct the self-contained
environments below (no simulator dependency); any other id is handed to
gymnasium.make() when gymnasium is importable. Force and dynamics
perturbations need environment support and are discovered by duck typing:
an environment that exposes ``set_external_force(vector)`` and
``set_dynamics_scale(factor)`` gets them, anything else is refused.
"""

from __future__ import annotations

import numpy as np


class AdapterError(Exception):
    """Base class for adapter failures."""


class SetupError(AdapterError):
    """Environment missing or not constructible."""


class UnsupportedPerturbationError(AdapterError):
    """The environment exposes no hook for the requested perturbation."""


class BuiltinLinearEnv:
    """A stable linear-Gaussian plant with quadratic cost.

    Six state dimensions, two action dimensions. Exposes the perturbation
    hooks the exporter looks for, so every perturbation kind can be
    exercised without a physics simulator.
    """

    observation_dim = 6
    action_dim = 2

    _D = np.array(
        [
            [0.55, 0.08, 0.00, 0.00, 0.00, 0.00],
            [-0.08, 0.52, 0.05, 0.00, 0.00, 0.00],
            [0.00, -0.05, 0.49, 0.08, 0.00, 0.00],
            [0.00, 0.00, -0.08, 0.46, 0.05, 0.00],
            [0.00, 0.00, 0.00, -0.05, 0.43, 0.08],
            [0.03, 0.00, 0.00, 0.00, -0.08, 0.40],
        ]
    )
    _B = np.array(
        [
            [0.10, 0.00],
            [0.05, 0.04],
            [0.00, 0.09],
            [0.05, -0.04],
            [0.08, 0.03],
            [-0.03, 0.06],
        ]
    )

    def __init__(self, process_noise: float = 0.03):
        self.process_noise = process_noise
        self._rng = np.random.default_rng(0)
        self._state = np.zeros(self.observation_dim)
        self._force = np.zeros(self.observation_dim)
        self._dynamics_scale = 1.0

    # gym-style API ---------------------------------------------------------

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self.process_noise * self._rng.standard_normal(self.observation_dim)
        return self._state.copy(), {}

    def step(self, action):
        a = np.asarray(action, dtype=np.float64)
        if a.shape != (self.action_dim,):
            raise AdapterError(f"action must have shape ({self.action_dim},), got {a.shape}")
        noise = self.process_noise * self._rng.standard_normal(self.observation_dim)
        self._state = (
            self._dynamics_scale * (self._D @ self._state) + self._B @ a + self._force + noise
        )
        reward = -(float(self._state @ self._state) + 0.1 * float(a @ a))
        return self._state.copy(), reward, False, False, {}

    # perturbation hooks ----------------------------------------------------

    def set_external_force(self, force):
        force = np.asarray(force, dtype=np.float64)
        if force.shape != (self.observation_dim,):
            raise AdapterError(f"force must have shape ({self.observation_dim},)")
        self._force = force

    def set_dynamics_scale(self, factor: float):
        self._dynamics_scale = float(factor)

    # a frozen scripted policy for CLI use ----------------------------------

    def scripted_policy(self):
        gain = np.array(
            [
                [-0.45, 0.00, -0.30, 0.00, -0.20, 0.00],
                [0.00, -0.45, 0.00, -0.30, 0.00, -0.20],
            ]
        )

        def policy(obs):
            return gain @ np.asarray(obs, dtype=np.float64)

        return policy


class BuiltinRewardFreeEnv(BuiltinLinearEnv):
    """Same plant, but the reward signal is unavailable (reported as None)."""

    def step(self, action):
        obs, _, terminated, truncated, info = super().step(action)
        return obs, None, terminated, truncated, info


_BUILTINS = {
    "builtin:linear": BuiltinLinearEnv,
    "builtin:linear-no-reward": BuiltinRewardFreeEnv,
}


def make_env(env_id: str):
    """Construct an environment by id; gymnasium ids work when installed."""
    if env_id in _BUILTINS:
        return _BUILTINS[env_id]()
    try:
        import gymnasium
    except ImportError as exc:
        raise SetupError(
            f"environment {env_id!r} is not a builtin and gymnasium is not installed "
            f"(builtins: {sorted(_BUILTINS)})"
        ) from exc
    try:
        return gymnasium.make(env_id)
    except Exception as exc:
        raise SetupError(f"gymnasium could not construct {env_id!r}: {exc}") from exc
