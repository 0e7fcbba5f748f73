"""Per-iteration replay of a coded scheme on sampled worker timelines.

A message becomes ready when its worker finishes the number of local
computations it needs. The master collects messages in ready-time order and a
cluster is done once its distinct received rows reach the code's threshold
(or, in exact mode, once the least-squares decode succeeds). The iteration
completes when every cluster is done; every message ready by then counts
toward the communication load.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from gcmmc import assignment, coding, runtime
from gcmmc.model import (
    ClusterPartition,
    EncodingMatrix,
    IterationOutcome,
    MessageSchedule,
    MetricsSummary,
    Scheme,
    SchemeConfig,
    SupportMatrix,
    WorkerTimeline,
    check_config,
)

log = logging.getLogger(__name__)

THREADS_ENV = "GCMMC_THREADS"


@dataclass(frozen=True, eq=False)
class ClusterCode:
    """Code shared by every cluster; indices are cluster-local."""

    support: Optional[SupportMatrix]
    encoding: Optional[EncodingMatrix]
    schedule: MessageSchedule
    threshold: int
    certificate: Optional[coding.CertificateReport] = None


@dataclass(frozen=True, eq=False)
class SchemeInstance:
    scheme: Scheme
    config: SchemeConfig
    partition: ClusterPartition
    code: ClusterCode
    hybrid: bool = False
    # flattened messages of one cluster: local worker, row, computations required
    msg_worker: np.ndarray = field(default=None, repr=False)
    msg_row: np.ndarray = field(default=None, repr=False)
    msg_comp: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        flat = self.code.schedule.flat()
        w, row, c = (np.array(v, dtype=np.int64) for v in zip(*flat))
        object.__setattr__(self, "msg_worker", w)
        object.__setattr__(self, "msg_row", row)
        object.__setattr__(self, "msg_comp", c)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def r(self) -> int:
        return self.config.r

    @property
    def P(self) -> int:
        return self.partition.P

    @property
    def messages_per_worker(self) -> int:
        return max(len(m) for m in self.code.schedule.entries)


def _code_for(cfg: SchemeConfig, n_batches: int) -> tuple[SupportMatrix, MessageSchedule]:
    base = assignment.build_cyclic_assignment(n_batches, cfg.r)
    s = cfg.scheme
    if s in (Scheme.GC, Scheme.FRACTIONAL_REPETITION):
        m = cfg.r
    elif s is Scheme.UC_MMC:
        m = 1
    elif cfg.is_correlated:
        m = cfg.m
    else:
        support = assignment.expand_virtual(base, cfg.order_vector)
        return support, assignment.build_message_schedule(
            support, assignment.UNCORRELATED, order_vector=cfg.order_vector)
    support = assignment.shrink_correlated(base, m)
    return support, assignment.build_message_schedule(support, assignment.CORRELATED, m=m)


def build_scheme(cfg: SchemeConfig, *, certify: bool = False) -> SchemeInstance:
    """Build the per-cluster code, schedule and threshold for ``cfg``.

    With ``certify`` the code is checked by :func:`coding.verify_code` first
    and a failing certificate raises.
    """
    check_config(cfg)
    P = cfg.clusters
    partition = assignment.partition_clusters(cfg.K, P, cfg.K)
    if cfg.scheme is Scheme.THRESHOLD_BASELINE:
        c = cfg.baseline_computations
        sched = MessageSchedule(tuple(((w, c),) for w in range(cfg.K)))
        code = ClusterCode(None, None, sched, cfg.baseline_threshold)
        return SchemeInstance(cfg.scheme, cfg, partition, code)

    support, sched = _code_for(cfg, cfg.K // P)
    enc = coding.build_encoding_matrix(support)
    threshold = coding.decode_threshold(support)
    cert = None
    if certify:
        cert = coding.verify_code(enc, threshold, seed=cfg.seed)
        if not cert.passed:
            raise coding.DecodeError(f"{cfg.scheme.value}: code certificate failed: {cert}")
    code = ClusterCode(support, enc, sched, threshold, cert)
    return SchemeInstance(cfg.scheme, cfg, partition, code, hybrid=cfg.scheme is Scheme.HYBRID)


def _events(instance: SchemeInstance, times: np.ndarray):
    """(ready, global worker, row, cluster, is_average) for every message, in processing order."""
    out = []
    r = instance.r
    for p, workers in enumerate(instance.partition.workers):
        for w_local, row, c in zip(instance.msg_worker, instance.msg_row, instance.msg_comp):
            w = workers[w_local]
            average = instance.hybrid and c == r
            out.append((float(times[w, c - 1]), w, int(row), p, average))
    out.sort(key=lambda e: (e[0], e[1], e[2]))
    return out


def run_iteration(
    instance: SchemeInstance,
    timeline: WorkerTimeline,
    *,
    exact: bool = False,
    distinct: bool = False,
) -> IterationOutcome:
    """Replay one iteration event by event.

    ``exact`` decides decodability by solving the decode system after every new
    distinct row instead of using the certified threshold. ``distinct`` counts
    distinct (cluster, row) pairs toward the communication load instead of
    every message.
    """
    times = timeline.times
    if times.shape[0] != instance.K or times.shape[1] < instance.r:
        raise ValueError(f"timeline shape {times.shape} does not cover K={instance.K}, r={instance.r}")
    events = _events(instance, times)
    P = instance.P
    code = instance.code
    received: list[list[int]] = [[] for _ in range(P)]
    done_at = [np.inf] * P
    used: list[tuple[int, ...]] = [()] * P
    remaining = P
    for ready, _, row, p, average in events:
        if done_at[p] < np.inf:
            continue
        if average:
            done_at[p], used[p] = ready, (row,)
            remaining -= 1
        elif row not in received[p]:
            received[p].append(row)
            if exact and code.encoding is not None:
                ok = coding.is_decodable(received[p], code.encoding)
            else:
                ok = len(received[p]) >= code.threshold
            if ok:
                done_at[p], used[p] = ready, tuple(received[p])
                remaining -= 1
        if remaining == 0:
            break
    completion = max(done_at)
    decodable = bool(np.isfinite(completion))
    if distinct:
        load = len({(p, row) for ready, _, row, p, _ in events if ready <= completion and ready < np.inf})
    else:
        load = sum(1 for e in events if e[0] <= completion and e[0] < np.inf)
    return IterationOutcome(completion, load, tuple(used), decodable, tuple(done_at))


def _simulate_units(instance: SchemeInstance, units: np.ndarray, distinct: bool) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized threshold-mode replay for a block of trials; units has shape (n, K)."""
    n = units.shape[0]
    code, r = instance.code, instance.r
    order = np.argsort(instance.msg_row, kind="stable")
    rows_sorted = instance.msg_row[order]
    starts = np.flatnonzero(np.r_[True, rows_sorted[1:] != rows_sorted[:-1]])
    comp = instance.msg_comp[order].astype(float)
    w_local = instance.msg_worker[order]
    k = code.threshold - 1

    completion = np.full(n, -np.inf)
    per_cluster = []
    for workers in instance.partition.workers:
        u = units[:, list(workers)]
        ready = u[:, w_local] * comp
        earliest = np.minimum.reduceat(ready, starts, axis=1)
        if k < earliest.shape[1]:
            t = np.partition(earliest, k, axis=1)[:, k]
        else:
            t = np.full(n, np.inf)
        if instance.hybrid:
            t = np.minimum(t, r * u.min(axis=1))
        completion = np.maximum(completion, t)
        per_cluster.append((ready, earliest))
    load = np.zeros(n, dtype=np.int64)
    for ready, earliest in per_cluster:
        src = earliest if distinct else ready
        load += ((src <= completion[:, None]) & np.isfinite(src)).sum(axis=1)
    return completion, load


@dataclass(frozen=True, eq=False)
class TrialResults:
    completion_time: np.ndarray
    comm_load: np.ndarray

    @property
    def decodable(self) -> np.ndarray:
        return np.isfinite(self.completion_time)


def _threads(threads: Optional[int]) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, threads)


def run_trials(
    cfg: SchemeConfig,
    instance: Optional[SchemeInstance] = None,
    *,
    exact: bool = False,
    distinct: bool = False,
    threads: Optional[int] = None,
) -> TrialResults:
    if instance is None:
        instance = build_scheme(cfg, certify=exact)
    units = runtime.sample_units(cfg.mu, cfg.alpha, cfg.K, cfg.iterations, cfg.seed)
    if exact:
        outs = [run_iteration(instance, WorkerTimeline(runtime.timeline_from_unit(u, cfg.r)),
                              exact=True, distinct=distinct) for u in units]
        return TrialResults(np.array([o.completion_time for o in outs]),
                            np.array([o.comm_load for o in outs], dtype=np.int64))
    blocks = [units[i:i + runtime.CHUNK] for i in range(0, len(units), runtime.CHUNK)]
    n_threads = _threads(threads)
    if n_threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            parts = list(pool.map(lambda b: _simulate_units(instance, b, distinct), blocks))
    else:
        parts = [_simulate_units(instance, b, distinct) for b in blocks]
    return TrialResults(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if len(x) == 0:
        return float("nan"), float("nan")
    se = float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0
    return float(np.mean(x)), se


def summarize(results: TrialResults, cfg: SchemeConfig) -> MetricsSummary:
    ok = results.decodable
    undecodable = int((~ok).sum())
    if undecodable:
        log.warning("%s: %d of %d iterations were not decodable", cfg.scheme.value, undecodable, len(ok))
    ct, ct_se = _mean_se(results.completion_time[ok])
    cl, cl_se = _mean_se(results.comm_load[ok].astype(float))
    return MetricsSummary(ct, ct_se, cl, cl_se, int(len(ok)), undecodable, cfg.to_dict())


def run_experiment(cfg: SchemeConfig, **kwargs) -> MetricsSummary:
    return summarize(run_trials(cfg, **kwargs), cfg)


@dataclass(frozen=True, eq=False)
class ComparisonRow:
    name: str
    summary: MetricsSummary
    trials: TrialResults


_SHARED = ("K", "r", "mu", "alpha", "iterations", "seed")


def compare_schemes(
    configs: Sequence[SchemeConfig],
    names: Optional[Sequence[str]] = None,
    **kwargs,
) -> list[ComparisonRow]:
    """Run every config on the same timeline draws (shared seed) and tabulate the metrics."""
    if not configs:
        raise ValueError("no schemes to compare")
    names = list(names) if names is not None else [c.scheme.value for c in configs]
    if len(names) != len(configs) or len(set(names)) != len(names):
        raise ValueError("scheme names must be unique, one per config")
    ref = configs[0]
    for c in configs[1:]:
        bad = [k for k in _SHARED if getattr(c, k) != getattr(ref, k)]
        if bad:
            raise ValueError(f"configs disagree on shared parameters {bad}")
    rows = []
    for name, cfg in zip(names, configs):
        res = run_trials(cfg, **kwargs)
        rows.append(ComparisonRow(name, summarize(res, cfg), res))
    return rows
