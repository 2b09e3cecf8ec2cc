"""Black-box coupling monitor for agent-environment transition streams.

The package watches a stream of (observation, action, next-observation)
records, symbolizes it against frozen calibration statistics, and tracks
windowed information metrics: the bi-predictability ratio P = MI / C (shared
information over the total entropy budget, bounded by 1/2), the forward and
backward residual uncertainties Hf and Hb, and their asymmetry dH. A
per-channel +/-3 sigma comparison against a calibrated baseline turns the
metric series into detection events; the union of the four channels is the
monitoring signal, with windowed reward evaluated under the identical
protocol for comparison.
"""

from .core import (
    DiscretizerParams,
    GroupingConfig,
    SymbolizedTransition,
    Transition,
    discretize,
    discretize_stream,
    fit_discretizer,
)
from .detector import (
    BaselineModel,
    Channel,
    ChannelOutcome,
    ChannelStats,
    DetectionEvent,
    Direction,
    StreamingDetector,
    Summary,
    SummaryRow,
    TrialOutcome,
    calibrate,
    detect,
    summarize,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DistributionError,
    EstimationError,
    FormatError,
    IdtError,
    IoError,
    OracleError,
    ReportError,
)
from .infometrics import (
    JointMode,
    StreamingWindowEstimator,
    WindowMetrics,
    WindowSpec,
    entropy,
    iter_stream_metrics,
    stream_metrics,
    window_metrics,
)
from .oracle import JointDistribution, exact_metrics, stationary_joint
from .streamio import (
    MonitorBundle,
    event_to_line,
    format_summary_text,
    load_bundle,
    metrics_to_line,
    parse_metrics_line,
    parse_transition_line,
    read_stream,
    save_bundle,
    summary_to_dict,
    transition_to_line,
)
from .synthloop import (
    BenchmarkCondition,
    BenchmarkResult,
    DiscreteLoopConfig,
    LinearLoopConfig,
    LoopRun,
    Perturbation,
    PerturbationKind,
    Side,
    TrialResult,
    all_none_suite,
    default_linear_config,
    default_suite,
    perturbation_onset_step,
    random_discrete_config,
    run_benchmark,
    run_discrete_loop,
    run_linear_loop,
    run_trial,
    suite_grouping,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "Transition",
    "GroupingConfig",
    "DiscretizerParams",
    "SymbolizedTransition",
    "fit_discretizer",
    "discretize",
    "discretize_stream",
    # infometrics
    "WindowSpec",
    "WindowMetrics",
    "JointMode",
    "entropy",
    "window_metrics",
    "stream_metrics",
    "iter_stream_metrics",
    "StreamingWindowEstimator",
    # detector
    "Channel",
    "ChannelStats",
    "BaselineModel",
    "DetectionEvent",
    "Direction",
    "ChannelOutcome",
    "TrialOutcome",
    "StreamingDetector",
    "Summary",
    "SummaryRow",
    "calibrate",
    "detect",
    "summarize",
    # synthloop
    "Perturbation",
    "PerturbationKind",
    "Side",
    "LinearLoopConfig",
    "DiscreteLoopConfig",
    "LoopRun",
    "BenchmarkCondition",
    "BenchmarkResult",
    "TrialResult",
    "default_linear_config",
    "default_suite",
    "all_none_suite",
    "suite_grouping",
    "perturbation_onset_step",
    "random_discrete_config",
    "run_linear_loop",
    "run_discrete_loop",
    "run_trial",
    "run_benchmark",
    # oracle
    "JointDistribution",
    "exact_metrics",
    "stationary_joint",
    # streamio
    "read_stream",
    "parse_transition_line",
    "transition_to_line",
    "metrics_to_line",
    "parse_metrics_line",
    "event_to_line",
    "MonitorBundle",
    "save_bundle",
    "load_bundle",
    "summary_to_dict",
    "format_summary_text",
    # errors
    "IdtError",
    "ConfigError",
    "CalibrationError",
    "FormatError",
    "EstimationError",
    "DistributionError",
    "OracleError",
    "ReportError",
    "IoError",
]
