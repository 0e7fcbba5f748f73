"""Cluster partitions, cyclic assignments and the two multi-message supports.

All supports are cluster-local: columns index the cluster's own batches and
rows the cluster's coded messages.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from gcmmc.model import ClusterPartition, MessageSchedule, SupportMatrix

CORRELATED = "correlated"
UNCORRELATED = "uncorrelated"


def partition_clusters(K: int, P: int, batch_count: int) -> ClusterPartition:
    if P < 1 or K % P or batch_count % P:
        raise ValueError(f"cannot split K={K} workers and {batch_count} batches into {P} equal clusters")
    kw, kb = K // P, batch_count // P
    return ClusterPartition(
        workers=tuple(tuple(range(p * kw, (p + 1) * kw)) for p in range(P)),
        batches=tuple(tuple(range(p * kb, (p + 1) * kb)) for p in range(P)),
    )


def _cyclic_order(support: Sequence[int], start: int) -> tuple[int, ...]:
    # ascending, rotated to begin at the first index >= start
    s = sorted(support)
    k = next((j for j, v in enumerate(s) if v >= start), 0)
    return tuple(s[k:] + s[:k])


def build_cyclic_assignment(n_batches: int, r: int) -> SupportMatrix:
    """Row i covers batches i, i+1, ..., i+r-1 (mod n_batches)."""
    if not 1 <= r <= n_batches:
        raise ValueError(f"computation load r={r} outside [1, {n_batches}]")
    mask = np.zeros((n_batches, n_batches), dtype=np.int8)
    for i in range(n_batches):
        mask[i, (i + np.arange(r)) % n_batches] = 1
    orders = tuple(_cyclic_order(np.flatnonzero(mask[i]).tolist(), i) for i in range(n_batches))
    return SupportMatrix(mask, row_owner=tuple((i,) for i in range(n_batches)), orders=orders)


def computation_order(M: SupportMatrix, worker: int) -> tuple[int, ...]:
    return M.orders[worker]


def _uniform_width(M: SupportMatrix) -> int:
    widths = {len(o) for o in M.orders}
    if len(widths) != 1:
        raise ValueError(f"nonuniform row weights {sorted(widths)}")
    return widths.pop()


def shrink_correlated(M: SupportMatrix, m: int) -> SupportMatrix:
    """Keep the first ``m`` ones of each row in the worker's computation order.

    A shrunken row may be sent by every worker whose computation order holds
    its support as a contiguous window.
    """
    r = _uniform_width(M)
    if M.shape[0] != len(M.orders):
        raise ValueError("shrink_correlated expects one row per base worker")
    if not 1 <= m <= r:
        raise ValueError(f"order m={m} outside [1, r={r}]")
    n = M.shape[1]
    mask = np.zeros((len(M.orders), n), dtype=np.int8)
    for i, order in enumerate(M.orders):
        mask[i, list(order[:m])] = 1
    windows = _window_index(M.orders, m)
    owners = []
    for i, order in enumerate(M.orders):
        key = frozenset(order[:m])
        owners.append(tuple(sorted(windows.get(key, ())) or (i,)))
    return SupportMatrix(mask, row_owner=tuple(owners), orders=M.orders, design=CORRELATED)


def _window_index(orders, m):
    # support of each length-m sliding window -> workers that produce it
    out: dict[frozenset, set] = {}
    for w, order in enumerate(orders):
        for start in range(len(order) - m + 1):
            out.setdefault(frozenset(order[start:start + m]), set()).add(w)
    return out


def expand_virtual(M: SupportMatrix, order_vector: Sequence[int]) -> SupportMatrix:
    """Attach one virtual worker per extra order; row w*(l+1)+j is worker w's order-m_j message."""
    r = _uniform_width(M)
    ov = [int(v) for v in order_vector]
    if not ov or any(not 1 <= v <= r for v in ov):
        raise ValueError(f"order vector {ov} has entries outside [1, r={r}]")
    if ov[0] != r:
        raise ValueError(f"order vector must start with m0 = r = {r}, got {ov}")
    n_workers, n = len(M.orders), M.shape[1]
    rows = n_workers * len(ov)
    mask = np.zeros((rows, n), dtype=np.int8)
    owners = []
    for w, order in enumerate(M.orders):
        for j, mj in enumerate(ov):
            mask[w * len(ov) + j, list(order[:mj])] = 1
            owners.append((w,))
    return SupportMatrix(mask, row_owner=tuple(owners), orders=M.orders, design=UNCORRELATED)


def build_message_schedule(
    support: SupportMatrix,
    design: str,
    m: Optional[int] = None,
    order_vector: Optional[Sequence[int]] = None,
) -> MessageSchedule:
    """Per worker: which rows it sends and after how many local computations."""
    if design != support.design:
        raise ValueError(f"support was built for the {support.design} design, not {design}")
    r = len(support.orders[0])
    entries = []
    if design == CORRELATED:
        if m is None:
            raise ValueError("correlated schedule needs order m")
        if int(support.mask[0].sum()) != m:
            raise ValueError(f"support rows have weight {int(support.mask[0].sum())}, expected m={m}")
        by_support: dict[frozenset, list[int]] = {}
        for i in range(support.shape[0]):
            by_support.setdefault(frozenset(support.support(i)), []).append(i)
        for w, order in enumerate(support.orders):
            msgs = []
            for c in range(m, r + 1):
                candidates = by_support.get(frozenset(order[c - m:c]))
                if not candidates:
                    raise ValueError(f"worker {w}: window {sorted(order[c - m:c])} is not a row of the support")
                # equal supports (e.g. r == K~): take the row whose own order starts where this window does
                row = next((j for j in candidates if support.orders[j][0] == order[c - m]), candidates[0])
                msgs.append((row, c))
            entries.append(tuple(msgs))
    elif design == UNCORRELATED:
        if order_vector is None:
            raise ValueError("uncorrelated schedule needs the order vector")
        ov = [int(v) for v in order_vector]
        l1 = len(ov)
        if support.shape[0] != l1 * len(support.orders):
            raise ValueError("support row count does not match the order vector")
        for w in range(len(support.orders)):
            msgs = sorted(((w * l1 + j, mj) for j, mj in enumerate(ov)), key=lambda e: (e[1], e[0]))
            entries.append(tuple(msgs))
    else:
        raise ValueError(f"unknown design {design!r}")
    sched = MessageSchedule(tuple(entries))
    seen = {row for _, row, _ in sched.flat()}
    if len(seen) != support.shape[0]:
        raise ValueError("schedule leaves some support rows unsendable")
    return sched
