"""Exporter bridging gym-style environments to the idt monitor's wire format."""

from .env import (
    AdapterError,
    BuiltinLinearEnv,
    BuiltinRewardFreeEnv,
    SetupError,
    UnsupportedPerturbationError,
    make_env,
)
from .exporter import PERTURBATION_KINDS, ExportConfig, export, record_line

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ExportConfig",
    "export",
    "record_line",
    "PERTURBATION_KINDS",
    "make_env",
    "BuiltinLinearEnv",
    "BuiltinRewardFreeEnv",
    "AdapterError",
    "SetupError",
    "UnsupportedPerturbationError",
]
