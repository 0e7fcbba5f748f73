"""Shared domain types and configuration validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


class ConfigError(ValueError):
    pass


class Scheme(str, enum.Enum):
    GC = "GC"
    FRACTIONAL_REPETITION = "FractionalRepetition"
    UC_MMC = "UC_MMC"
    GC_MMC_CORRELATED = "GC_MMC_Correlated"
    GC_MMC_UNCORRELATED = "GC_MMC_Uncorrelated"
    HYBRID = "Hybrid"
    # external baseline (e.g. LCC): user-supplied threshold and per-message load
    THRESHOLD_BASELINE = "ThresholdBaseline"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    K: int
    r: int
    P: int = 1
    m: Optional[int] = None
    order_vector: Optional[tuple[int, ...]] = None
    mu: float = 10.0
    alpha: float = 0.01
    iterations: int = 1000
    seed: int = 0
    baseline_threshold: Optional[int] = None
    baseline_computations: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.order_vector is not None:
            # stored as [m0 >= m1 >= ...]; [6, 8, 10] and [10, 8, 6] are the same design
            ov = tuple(sorted((int(v) for v in self.order_vector), reverse=True))
            object.__setattr__(self, "order_vector", ov)

    @property
    def is_correlated(self) -> bool:
        if self.scheme is Scheme.HYBRID:
            return self.order_vector is None
        return self.scheme in (Scheme.GC, Scheme.FRACTIONAL_REPETITION, Scheme.UC_MMC,
                               Scheme.GC_MMC_CORRELATED)

    @property
    def clusters(self) -> int:
        """Effective number of clusters (fractional repetition uses clusters of size r)."""
        if self.scheme is Scheme.FRACTIONAL_REPETITION:
            return self.K // self.r
        if self.scheme is Scheme.THRESHOLD_BASELINE:
            return 1
        return self.P

    @property
    def cluster_size(self) -> int:
        return self.K // self.clusters

    def to_dict(self) -> dict[str, Any]:
        d = {
            "scheme": self.scheme.value,
            "K": self.K,
            "r": self.r,
            "P": self.P,
            "m": self.m,
            "order_vector": list(self.order_vector) if self.order_vector else None,
            "mu": self.mu,
            "alpha": self.alpha,
            "iterations": self.iterations,
            "seed": self.seed,
        }
        if self.scheme is Scheme.THRESHOLD_BASELINE:
            d["baseline_threshold"] = self.baseline_threshold
            d["baseline_computations"] = self.baseline_computations
        return d


def validate_config(cfg: SchemeConfig) -> list[str]:
    """Return the list of violated invariants; an empty list means the config is valid."""
    errors = []

    def positive_int(name, v):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
            errors.append(f"{name} must be a positive integer, got {v!r}")
            return False
        return True

    ok = positive_int("K", cfg.K) & positive_int("r", cfg.r) & positive_int("P", cfg.P)
    positive_int("iterations", cfg.iterations)
    if not cfg.mu > 0:
        errors.append(f"mu must be > 0, got {cfg.mu}")
    if not cfg.alpha > 0:
        errors.append(f"alpha must be > 0, got {cfg.alpha}")
    if not (isinstance(cfg.seed, (int, np.integer)) and 0 <= cfg.seed < 2**64):
        errors.append(f"seed must be a 64-bit unsigned integer, got {cfg.seed!r}")
    if not ok:
        return errors

    if cfg.r > cfg.K:
        errors.append(f"r={cfg.r} exceeds K={cfg.K}")
    if cfg.K % cfg.P != 0:
        errors.append(f"K mod P != 0 (K={cfg.K}, P={cfg.P})")
        return errors

    s = cfg.scheme
    if s is Scheme.FRACTIONAL_REPETITION:
        if cfg.K % cfg.r != 0:
            errors.append(f"fractional repetition needs K mod r == 0 (K={cfg.K}, r={cfg.r})")
        return errors
    if s is Scheme.THRESHOLD_BASELINE:
        t, c = cfg.baseline_threshold, cfg.baseline_computations
        if t is None or not 1 <= t <= cfg.K:
            errors.append(f"baseline_threshold must lie in [1, K], got {t!r}")
        if c is None or not 1 <= c <= cfg.r:
            errors.append(f"baseline_computations must lie in [1, r], got {c!r}")
        return errors

    size = cfg.K // cfg.P
    if cfg.r > size:
        errors.append(f"r={cfg.r} exceeds cluster size K/P={size}")
    if s in (Scheme.GC_MMC_CORRELATED,) or (s is Scheme.HYBRID and cfg.order_vector is None):
        if cfg.m is None:
            errors.append("correlated design needs order m")
        elif not 1 <= cfg.m <= cfg.r:
            errors.append(f"order m={cfg.m} outside [1, r={cfg.r}]")
    if s is Scheme.GC_MMC_UNCORRELATED or (s is Scheme.HYBRID and cfg.order_vector is not None):
        ov = cfg.order_vector
        if not ov:
            errors.append("uncorrelated design needs an order vector")
        else:
            if any(not 1 <= v <= cfg.r for v in ov):
                errors.append(f"order vector entries must lie in [1, r={cfg.r}], got {list(ov)}")
            if ov[0] != cfg.r:
                errors.append(f"order vector must contain m0 = r = {cfg.r}, got {list(ov)}")
    if s is Scheme.HYBRID and cfg.r != size:
        errors.append(f"hybrid needs r == K/P so a worker holds its whole cluster (r={cfg.r}, K/P={size})")
    return errors


def check_config(cfg: SchemeConfig) -> SchemeConfig:
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


@dataclass(frozen=True)
class ClusterPartition:
    workers: tuple[tuple[int, ...], ...]
    batches: tuple[tuple[int, ...], ...]

    @property
    def P(self) -> int:
        return len(self.workers)

    def cluster_of(self, worker: int) -> int:
        for p, ws in enumerate(self.workers):
            if worker in ws:
                return p
        raise KeyError(worker)


@dataclass(frozen=True, eq=False)
class SupportMatrix:
    """Binary N x K~ matrix; row i lists the gradients coded message i may combine.

    ``orders[w]`` is the computation order of base worker ``w`` (cluster-local
    batch indices) and ``row_owner[i]`` the workers able to send row ``i``.
    """

    mask: np.ndarray
    row_owner: tuple[tuple[int, ...], ...]
    orders: tuple[tuple[int, ...], ...]
    design: str = "correlated"

    def __post_init__(self):
        mask = np.array(self.mask, dtype=np.int8)
        if mask.ndim != 2:
            raise ValueError("support matrix must be 2-D")
        if not np.isin(mask, (0, 1)).all():
            raise ValueError("support matrix must be binary")
        if (mask.sum(axis=1) == 0).any():
            raise ValueError("support matrix has an all-zero row")
        if (mask.sum(axis=0) == 0).any():
            raise ValueError("support matrix has an all-zero column: some partial gradient is never computed")
        if len(self.row_owner) != mask.shape[0]:
            raise ValueError("row_owner length does not match row count")
        object.__setattr__(self, "mask", _readonly(mask))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def support(self, i: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.mask[i]).tolist())

    def zeros_per_column(self) -> np.ndarray:
        return self.mask.shape[0] - self.mask.sum(axis=0)


@dataclass(frozen=True, eq=False)
class EncodingMatrix:
    B: np.ndarray
    eval_points: np.ndarray
    target_point: float
    degree: int
    support: SupportMatrix

    def __post_init__(self):
        object.__setattr__(self, "B", _readonly(np.asarray(self.B, dtype=float)))
        object.__setattr__(self, "eval_points", _readonly(np.asarray(self.eval_points, dtype=float)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.B.shape


@dataclass(frozen=True)
class MessageSchedule:
    """``entries[w]`` lists (row, computations_required) in sending order for worker w."""

    entries: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        for w, msgs in enumerate(self.entries):
            comps = [c for _, c in msgs]
            if comps != sorted(comps):
                raise ValueError(f"worker {w}: computations_required must be nondecreasing")

    @property
    def workers(self) -> int:
        return len(self.entries)

    def flat(self) -> list[tuple[int, int, int]]:
        """All messages as (worker, row, computations_required)."""
        return [(w, row, c) for w, msgs in enumerate(self.entries) for row, c in msgs]


@dataclass(frozen=True, eq=False)
class WorkerTimeline:
    """``times[w, s-1]`` is when worker w finishes its s-th computation."""

    times: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.times, dtype=float))
        object.__setattr__(self, "times", _readonly(t))

    @property
    def K(self) -> int:
        return self.times.shape[0]

    @property
    def r(self) -> int:
        return self.times.shape[1]

    def at(self, worker: int, s: int) -> float:
        return float(self.times[worker, s - 1])


@dataclass(frozen=True)
class IterationOutcome:
    completion_time: float
    comm_load: int
    rows_used: tuple[tuple[int, ...], ...]
    decodable: bool
    cluster_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class MetricsSummary:
    mean_completion_time: float
    stderr_completion_time: float
    mean_comm_load: float
    stderr_comm_load: float
    trials: int
    undecodable: int
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_completion_time": self.mean_completion_time,
            "stderr_completion_time": self.stderr_completion_time,
            "mean_comm_load": self.mean_comm_load,
            "stderr_comm_load": self.stderr_comm_load,
            "trials": self.trials,
            "undecodable": self.undecodable,
            "config": self.config,
        }


def as_order_vector(values: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted((int(v) for v in values), reverse=True))
