"""idt-export: roll out an environment and emit transition records."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .env import AdapterError, make_env
from .exporter import PERTURBATION_KINDS, ExportConfig, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idt-export",
        description="Run evaluation episodes with optional perturbations and "
        "write newline-delimited transition records for the idt monitor.",
    )
    parser.add_argument("--env", default="builtin:linear",
                        help="environment id (builtin:linear, builtin:linear-no-reward, "
                        "or any gymnasium id when gymnasium is installed)")
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--steps", type=int, default=500, help="steps per episode")
    parser.add_argument("--perturbation", choices=PERTURBATION_KINDS, default="none")
    parser.add_argument("--magnitude", type=float, default=0.0)
    parser.add_argument("--onset-episode", type=int, default=15)
    parser.add_argument("--out", default="-", help="file path, '-' for stdout, or tcp://host:port")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--no-reward", action="store_true", help="omit rewards from the records")
    parser.add_argument("--policy", choices=("scripted", "zero", "random"), default="scripted",
                        help="scripted uses the environment's frozen policy when it has one")
    return parser


def _build_policy(name: str, env_id: str, seed: int):
    env = make_env(env_id)
    if name == "scripted":
        maker = getattr(env, "scripted_policy", None)
        if maker is None:
            raise AdapterError(
                f"environment {env_id!r} ships no scripted policy; use --policy zero or random"
            )
        return maker()
    action_dim = getattr(env, "action_dim", None)
    if action_dim is None:
        space = getattr(env, "action_space", None)
        action_dim = getattr(space, "shape", (None,))[0]
    if action_dim is None:
        raise AdapterError(f"cannot infer the action dimension of {env_id!r}")
    if name == "zero":
        return lambda obs: np.zeros(action_dim)
    rng = np.random.default_rng(seed ^ 0x5EED)
    return lambda obs: rng.uniform(-1.0, 1.0, size=action_dim)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExportConfig(
        env_id=args.env,
        episodes=args.episodes,
        steps_per_episode=args.steps,
        perturbation=args.perturbation,
        magnitude=args.magnitude,
        onset_episode=args.onset_episode,
        output=args.out,
        seed=args.seed,
        include_reward=not args.no_reward,
    )
    try:
        policy = _build_policy(args.policy, args.env, args.seed)
        count = export(config, policy)
    except AdapterError as exc:
        print(f"idt-export: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} records to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
