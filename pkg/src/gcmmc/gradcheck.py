"""End-to-end check that coded messages decode to the true full gradient.

Uses a least-squares regression problem with one mini-batch per worker, so
the decoded gradient can be compared with the centralized one and coded
gradient descent with plain gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from gcmmc import coding, runtime
from gcmmc.model import WorkerTimeline
from gcmmc.simulator import SchemeInstance, run_iteration


class InfeasiblePattern(ValueError):
    """The received messages do not determine the full gradient."""


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    batches: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = {len(b) for b in self.batches}
        if len(sizes) != 1 or 0 in sizes:
            raise ValueError("batches must be nonempty and of equal size")
        idx = np.sort(np.concatenate(self.batches))
        if not np.array_equal(idx, np.arange(len(self.y))):
            raise ValueError("batches must partition the samples")

    @classmethod
    def random(cls, n_batches: int, batch_size: int = 4, d: int = 5, seed: int = 0, noise: float = 0.1):
        rng = np.random.default_rng(seed)
        n = n_batches * batch_size
        X = rng.standard_normal((n, d))
        y = X @ rng.standard_normal(d) + noise * rng.standard_normal(n)
        return cls(X, y, tuple(np.arange(n).reshape(n_batches, batch_size)))

    @property
    def n_batches(self) -> int:
        return len(self.batches)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def loss(self, theta: np.ndarray) -> float:
        return float(np.mean((self.X @ theta - self.y) ** 2))

    def full_gradient(self, theta: np.ndarray) -> np.ndarray:
        """Gradient of the mean loss over the whole dataset."""
        return 2.0 * self.X.T @ (self.X @ theta - self.y) / len(self.y)


def partial_gradient(problem: RegressionProblem, batch_id: int, theta: np.ndarray) -> np.ndarray:
    idx = problem.batches[batch_id]
    if len(idx) == 0:
        raise ValueError(f"batch {batch_id} is empty")
    Xb = problem.X[idx]
    return 2.0 * Xb.T @ (Xb @ theta - problem.y[idx]) / len(idx)


def all_partial_gradients(problem: RegressionProblem, theta: np.ndarray) -> np.ndarray:
    return np.stack([partial_gradient(problem, k, theta) for k in range(problem.n_batches)])


def encode_messages(instance: SchemeInstance, partials: np.ndarray) -> list[np.ndarray]:
    """Coded message c_i = sum_k B(i, k) g_k for every row, one array per cluster."""
    B = instance.code.encoding.B
    return [B @ partials[list(batches)] for batches in instance.partition.batches]


def received_rows(instance: SchemeInstance, pattern: np.ndarray) -> list[tuple[list[int], bool]]:
    """Per cluster: distinct rows available and whether a hybrid cluster average arrived.

    ``pattern[w]`` is how many local computations worker w finished (0 for a
    persistent straggler).
    """
    pattern = np.asarray(pattern)
    if pattern.shape != (instance.K,):
        raise ValueError(f"pattern must have one entry per worker ({instance.K})")
    out = []
    for workers in instance.partition.workers:
        rows, average = set(), False
        for w_local, row, c in zip(instance.msg_worker, instance.msg_row, instance.msg_comp):
            if pattern[workers[w_local]] >= c:
                if instance.hybrid and c == instance.r:
                    average = True
                else:
                    rows.add(int(row))
        out.append((sorted(rows), average))
    return out


def decode_gradients(instance: SchemeInstance, partials: np.ndarray, pattern: np.ndarray) -> np.ndarray:
    """What the master reconstructs from the messages allowed by ``pattern``.

    Works for any d-vectors in place of true gradients.
    """
    if instance.code.encoding is None:
        raise ValueError("threshold baselines carry no code to decode")
    partials = np.asarray(partials, dtype=float)
    messages = encode_messages(instance, partials)
    K = partials.shape[0]
    total = np.zeros(partials.shape[1:])
    for p, (rows, average) in enumerate(received_rows(instance, pattern)):
        batches = list(instance.partition.batches[p])
        if average:
            cluster = partials[batches].mean(axis=0)
        else:
            if not rows:
                raise InfeasiblePattern(f"cluster {p}: nothing received")
            sol = coding.decode(rows, instance.code.encoding)
            if not sol.feasible:
                raise InfeasiblePattern(f"cluster {p}: rows {rows} cannot be decoded (residual {sol.residual:.2e})")
            cluster = sol.coefficients @ messages[p][rows]
        total += len(batches) / K * cluster
    return total


@dataclass(frozen=True)
class RoundTripReport:
    decoded: np.ndarray
    expected: np.ndarray
    error: float
    scale: float

    @property
    def relative_error(self) -> float:
        return self.error / self.scale if self.scale > 0 else self.error

    @property
    def ok(self) -> bool:
        return self.error <= 1e-8 * max(self.scale, 1e-300)


def coded_round_trip(
    problem: RegressionProblem,
    instance: SchemeInstance,
    pattern: np.ndarray,
    theta: Optional[np.ndarray] = None,
) -> RoundTripReport:
    if theta is None:
        theta = np.zeros(problem.dim)
    if problem.n_batches != instance.K:
        raise ValueError(f"problem has {problem.n_batches} batches, scheme expects {instance.K}")
    partials = all_partial_gradients(problem, theta)
    decoded = decode_gradients(instance, partials, pattern)
    expected = partials.mean(axis=0)
    scale = float(max(np.abs(expected).max(), np.abs(partials).max()))
    return RoundTripReport(decoded, expected, float(np.abs(decoded - expected).max()), scale)


def sample_admissible_pattern(
    instance: SchemeInstance,
    rng: np.random.Generator,
    *,
    max_persistent: Optional[int] = None,
    max_tries: int = 1000,
) -> np.ndarray:
    """Straggler pattern at the moment the master stops collecting.

    Workers get shifted-exponential times with random extra slowdowns; up to
    ``max_persistent`` of them (default r-1) never finish anything. Draws
    that leave some cluster undecodable are rejected.
    """
    cfg = instance.config
    K, r = instance.K, instance.r
    if max_persistent is None:
        max_persistent = r - 1
    for _ in range(max_tries):
        unit = (cfg.alpha + rng.exponential(1.0 / cfg.mu, size=K)) * rng.choice([1.0, 2.0, 5.0], size=K)
        n_dead = rng.integers(0, max_persistent + 1)
        unit[rng.choice(K, n_dead, replace=False)] = np.inf
        times = runtime.timeline_from_unit(unit, r)
        out = run_iteration(instance, WorkerTimeline(times))
        if out.decodable:
            return (times <= out.completion_time).sum(axis=1)
    raise RuntimeError("no admissible straggler pattern found")


@dataclass(frozen=True, eq=False)
class DGDResult:
    trajectory: np.ndarray
    losses: np.ndarray
    diverged: bool


def _diverging(losses, window=10) -> bool:
    run = 0
    for a, b in zip(losses, losses[1:]):
        run = run + 1 if b > a else 0
        if run > window:
            return True
    return False


def centralized_gd(problem: RegressionProblem, steps: int, learning_rate: float,
                   theta0: Optional[np.ndarray] = None) -> DGDResult:
    theta = np.zeros(problem.dim) if theta0 is None else np.array(theta0, dtype=float)
    traj = [theta.copy()]
    for _ in range(steps):
        theta = theta - learning_rate * all_partial_gradients(problem, theta).mean(axis=0)
        traj.append(theta.copy())
    losses = np.array([problem.loss(t) for t in traj])
    return DGDResult(np.array(traj), losses, _diverging(losses))


def run_dgd(
    problem: RegressionProblem,
    instance: SchemeInstance,
    steps: int,
    learning_rate: float,
    *,
    theta0: Optional[np.ndarray] = None,
    seed: int = 0,
) -> DGDResult:
    """Gradient descent where each step's gradient is decoded under a fresh straggler pattern."""
    rng = np.random.default_rng(seed)
    theta = np.zeros(problem.dim) if theta0 is None else np.array(theta0, dtype=float)
    traj = [theta.copy()]
    for _ in range(steps):
        pattern = sample_admissible_pattern(instance, rng)
        g = decode_gradients(instance, all_partial_gradients(problem, theta), pattern)
        theta = theta - learning_rate * g
        traj.append(theta.copy())
    losses = np.array([problem.loss(t) for t in traj])
    return DGDResult(np.array(traj), losses, _diverging(losses))
