"""Shifted-exponential computation times.

A worker draws one X ~ Exp(mu) per iteration and finishes its s-th partial
gradient at T[s] = s * (alpha + X), so Pr[T[s] <= t] = 1 - exp(-mu (t/s - alpha))
for t >= s * alpha.
"""

from __future__ import annotations

import numpy as np

from gcmmc.model import WorkerTimeline

# trials per RNG stream; fixed so results do not depend on how chunks are scheduled
CHUNK = 4096


def _check(mu, alpha, r):
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")


def completion_cdf(t, s, mu: float, alpha: float):
    """Probability that s computations are done by time t."""
    t = np.asarray(t, dtype=float)
    return np.where(t >= s * alpha, -np.expm1(-mu * (t / s - alpha)), 0.0)


def timeline_from_unit(unit: np.ndarray, r: int) -> np.ndarray:
    """Expand per-computation times (alpha + X) into T[..., s-1] = s * unit."""
    return np.asarray(unit)[..., None] * np.arange(1, r + 1)


def sample_timeline(mu: float, alpha: float, r: int, rng: np.random.Generator) -> np.ndarray:
    _check(mu, alpha, r)
    return timeline_from_unit(alpha + rng.exponential(1.0 / mu), r)


def sample_iteration(mu: float, alpha: float, r: int, K: int, rng: np.random.Generator) -> WorkerTimeline:
    _check(mu, alpha, r)
    return WorkerTimeline(timeline_from_unit(alpha + rng.exponential(1.0 / mu, size=K), r))


def sample_units(mu: float, alpha: float, K: int, trials: int, seed: int) -> np.ndarray:
    """Per-trial, per-worker time per computation, shape (trials, K).

    Trials are drawn in fixed-size chunks, each from its own child stream of
    ``seed``, so any trial prefix is reproducible and chunks can be drawn in
    parallel.
    """
    _check(mu, alpha, 1)
    out = np.empty((trials, K))
    n_chunks = -(-trials // CHUNK)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n_chunks)):
        lo, hi = i * CHUNK, min(trials, (i + 1) * CHUNK)
        out[lo:hi] = alpha + np.random.default_rng(child).exponential(1.0 / mu, size=(CHUNK, K))[: hi - lo]
    return out
