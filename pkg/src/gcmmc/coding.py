"""Real-valued polynomial gradient codes: construction, thresholds, decoding.

Each column k of a support gets a polynomial f_k that vanishes at the
evaluation points of the rows not holding gradient k and equals 1/K~ at a
common target point. Row i of the encoding matrix is (f_1(a_i), ..., f_K~(a_i)),
so any h+1 rows (h = zeros in the sparsest column) determine the sum of the
f_k at the target point by interpolation.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from gcmmc.model import EncodingMatrix, SupportMatrix

log = logging.getLogger(__name__)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_ZERO = 1e-12


class DecodeError(ArithmeticError):
    """The linear solve itself broke down (non-finite values), as opposed to an infeasible row set."""


@dataclass(frozen=True)
class DecodeSolution:
    rows: tuple[int, ...]
    coefficients: np.ndarray
    residual: float
    tol: float

    @property
    def feasible(self) -> bool:
        return self.residual <= self.tol

    def combination(self, enc: EncodingMatrix) -> np.ndarray:
        """a^T B_S; equals (1/K~) * ones when feasible."""
        return self.coefficients @ enc.B[list(self.rows)]


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    threshold: int
    checked: int
    exhaustive: bool
    worst_residual: float
    failing_subset: Optional[tuple[int, ...]] = None

    def __str__(self):
        mode = "exhaustive" if self.exhaustive else "sampled"
        verdict = "PASS" if self.passed else f"FAIL on rows {list(self.failing_subset)}"
        return (f"{verdict}: threshold={self.threshold}, {self.checked} {mode} subsets, "
                f"worst residual={self.worst_residual:.3e}")


def decode_threshold(support: SupportMatrix) -> int:
    zeros = support.zeros_per_column()
    if (zeros == support.shape[0]).any():
        raise ValueError("support has an all-zero column")
    return int(zeros.max()) + 1


def choose_evaluation_points(N: int) -> tuple[np.ndarray, float]:
    """N distinct evaluation points in (-1, 1) plus a distinct target point.

    Uses the N+1 first-kind Chebyshev nodes; the middle node is the target and
    the rest are dealt to rows in golden-ratio order, so consecutive rows
    (cyclic supports put the zeros of a column on consecutive rows) get nodes
    spread over the whole interval. This keeps the code entries bounded and
    the decode systems far better conditioned than in natural order.
    """
    if N < 1:
        raise ValueError("need at least one evaluation point")
    n = N + 1
    nodes = np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))
    centre = n // 2
    target = float(nodes[centre])
    rest = np.delete(nodes, centre)
    rank = np.argsort(np.argsort((np.arange(N) * _GOLDEN) % 1.0, kind="stable"), kind="stable")
    points = rest[rank]
    if log.isEnabledFor(logging.DEBUG):
        V = np.polynomial.chebyshev.chebvander(points, N - 1)
        log.debug("N=%d evaluation points: Chebyshev-Vandermonde condition number %.3e", N, np.linalg.cond(V))
    return points, target


def zero_pattern(enc: EncodingMatrix) -> np.ndarray:
    """Entries that are numerically zero."""
    return np.abs(enc.B) < _ZERO


def interpolation_condition(points: np.ndarray) -> float:
    V = np.polynomial.chebyshev.chebvander(np.asarray(points, dtype=float), len(points) - 1)
    return float(np.linalg.cond(V))


def build_encoding_matrix(support: SupportMatrix) -> EncodingMatrix:
    N, n_cols = support.shape
    h = decode_threshold(support) - 1
    points, target = choose_evaluation_points(N)
    if np.isclose(points, target, rtol=0, atol=0).any():
        raise ValueError("target point coincides with an evaluation point")
    B = np.empty((N, n_cols))
    for k in range(n_cols):
        roots = points[support.mask[:, k] == 0]
        B[:, k] = np.prod(points[:, None] - roots[None, :], axis=1) / np.prod(target - roots) / n_cols
    return EncodingMatrix(B=B, eval_points=points, target_point=target, degree=h, support=support)


def _rows(rows: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(i) for i in rows)))
    if not out:
        raise ValueError("no rows to decode from")
    return out


def _tolerance(Bs: np.ndarray) -> float:
    return 1e-8 * max(1.0, float(np.abs(Bs).sum(axis=1).max()))


def decode(rows: Iterable[int], enc: EncodingMatrix) -> DecodeSolution:
    """Least-squares solve of a^T B_S = (1/K~) 1^T; feasible iff the residual is within tolerance."""
    S = _rows(rows)
    Bs = enc.B[list(S)]
    n_cols = Bs.shape[1]
    target = np.full(n_cols, 1.0 / n_cols)
    if not np.isfinite(Bs).all():
        raise DecodeError(f"non-finite code entries in rows {list(S)}")
    try:
        a = np.linalg.lstsq(Bs.T, target, rcond=None)[0]
    except np.linalg.LinAlgError as e:
        raise DecodeError(str(e)) from e
    residual = float(np.max(np.abs(Bs.T @ a - target)))
    if not (np.isfinite(a).all() and np.isfinite(residual)):
        raise DecodeError(f"non-finite decoding coefficients for rows {list(S)}")
    return DecodeSolution(S, a, residual, _tolerance(Bs))


def decode_interpolate(rows: Iterable[int], enc: EncodingMatrix) -> DecodeSolution:
    """Decode by Lagrange interpolation at the target point from h+1 of the received rows."""
    S = _rows(rows)
    need = enc.degree + 1
    if len(S) < need:
        raise ValueError(f"interpolation needs {need} rows, got {len(S)}")
    used = S[:need]
    x = enc.eval_points[list(used)]
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    a = np.prod(np.where(np.eye(need, dtype=bool), 1.0, enc.target_point - x[None, :]), axis=1) / np.prod(diff, axis=1)
    coeffs = np.zeros(len(S))
    coeffs[:need] = a
    Bs = enc.B[list(S)]
    n_cols = Bs.shape[1]
    residual = float(np.max(np.abs(Bs.T @ coeffs - 1.0 / n_cols)))
    if not np.isfinite(residual):
        raise DecodeError(f"non-finite interpolation weights for rows {list(used)}")
    return DecodeSolution(S, coeffs, residual, _tolerance(Bs))


def is_decodable(rows: Iterable[int], enc: EncodingMatrix) -> bool:
    return decode(rows, enc).feasible


def verify_code(
    enc: EncodingMatrix,
    threshold: Optional[int] = None,
    *,
    exhaustive_limit: int = 16,
    samples: int = 10_000,
    seed: int = 0,
) -> CertificateReport:
    """Check that every threshold-size row subset decodes (sampled when N > exhaustive_limit)."""
    N = enc.shape[0]
    if threshold is None:
        threshold = decode_threshold(enc.support)
    exhaustive = N <= exhaustive_limit
    if exhaustive:
        subsets: Iterable[tuple[int, ...]] = itertools.combinations(range(N), threshold)
    else:
        rng = np.random.default_rng(seed)
        subsets = (tuple(np.sort(rng.choice(N, threshold, replace=False)).tolist()) for _ in range(samples))
    checked, worst = 0, 0.0
    for S in subsets:
        sol = decode(S, enc)
        checked += 1
        worst = max(worst, sol.residual)
        if not sol.feasible:
            return CertificateReport(False, threshold, checked, exhaustive, worst, S)
    return CertificateReport(True, threshold, checked, exhaustive, worst)
