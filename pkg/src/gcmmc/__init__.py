"""Gradient coding with multi-message communication (GC-MMC).

Code constructions (cyclic, correlated, virtual-worker), a real-valued
polynomial encoder/decoder, a shifted-exponential straggler model and a
Monte Carlo simulator for per-iteration completion time and communication
load.
"""

from gcmmc.model import (
    ClusterPartition,
    ConfigError,
    EncodingMatrix,
    IterationOutcome,
    MessageSchedule,
    MetricsSummary,
    Scheme,
    SchemeConfig,
    SupportMatrix,
    WorkerTimeline,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterPartition",
    "ConfigError",
    "EncodingMatrix",
    "IterationOutcome",
    "MessageSchedule",
    "MetricsSummary",
    "Scheme",
    "SchemeConfig",
    "SupportMatrix",
    "WorkerTimeline",
    "validate_config",
]
