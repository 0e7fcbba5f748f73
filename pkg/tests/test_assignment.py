import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcmmc import assignment
from gcmmc.assignment import CORRELATED, UNCORRELATED

from .conftest import CYCLIC_6_3, VIRTUAL_6_3_2


def brute_zero_counts(mask):
    return [sum(1 for row in mask if row[k] == 0) for k in range(len(mask[0]))]


def test_partition_forty_workers_four_clusters():
    part = assignment.partition_clusters(40, 4, 40)
    assert part.P == 4
    assert all(len(w) == 10 for w in part.workers)
    assert all(len(b) == 10 for b in part.batches)
    for a, b in itertools.combinations(part.workers, 2):
        assert not set(a) & set(b)
    assert set().union(*map(set, part.workers)) == set(range(40))
    assert set().union(*map(set, part.batches)) == set(range(40))


def test_partition_single_cluster():
    part = assignment.partition_clusters(6, 1, 6)
    assert part.workers == (tuple(range(6)),)
    assert part.batches == (tuple(range(6)),)


def test_partition_rejects_indivisible():
    with pytest.raises(ValueError):
        assignment.partition_clusters(40, 3, 40)


def test_cyclic_matches_reference_matrix(cyclic_support):
    np.testing.assert_array_equal(cyclic_support.mask, CYCLIC_6_3)
    assert brute_zero_counts(CYCLIC_6_3) == [3] * 6


def test_cyclic_trivial():
    np.testing.assert_array_equal(assignment.build_cyclic_assignment(1, 1).mask, [[1]])


@pytest.mark.parametrize("r", [0, 7])
def test_cyclic_rejects_bad_load(r):
    with pytest.raises(ValueError):
        assignment.build_cyclic_assignment(6, r)


def test_computation_order_starts_at_own_batch(cyclic_support):
    assert assignment.computation_order(cyclic_support, 0) == (0, 1, 2)
    assert assignment.computation_order(cyclic_support, 4) == (4, 5, 0)
    assert assignment.computation_order(cyclic_support, 5) == (5, 0, 1)


def test_shrink_example1(cyclic_support):
    M = assignment.shrink_correlated(cyclic_support, 2)
    assert M.support(0) == (0, 1)  # c1 combines g1, g2
    assert M.support(1) == (1, 2)  # c2 combines g2, g3
    assert M.support(5) == (0, 5)
    assert brute_zero_counts(M.mask) == [4] * 6
    # c2 can be sent by both worker 1 and worker 2
    assert M.row_owner[1] == (0, 1)


def test_shrink_full_order_is_identity(cyclic_support):
    np.testing.assert_array_equal(assignment.shrink_correlated(cyclic_support, 3).mask, cyclic_support.mask)


def test_shrink_rejects_nonuniform_rows():
    from gcmmc.model import SupportMatrix

    M = SupportMatrix(np.array([[1, 1], [0, 1]]), row_owner=((0,), (1,)), orders=((0, 1), (1,)))
    with pytest.raises(ValueError, match="nonuniform"):
        assignment.shrink_correlated(M, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n)))
       .flatmap(lambda nr: st.tuples(st.just(nr[0]), st.just(nr[1]), st.integers(1, nr[1]))))
def test_shrink_zero_count_property(nrm):
    n, r, m = nrm
    M = assignment.shrink_correlated(assignment.build_cyclic_assignment(n, r), m)
    assert brute_zero_counts(M.mask) == [n - m] * n


def test_expand_matches_reference_matrix(virtual_support):
    np.testing.assert_array_equal(virtual_support.mask, VIRTUAL_6_3_2)
    assert brute_zero_counts(VIRTUAL_6_3_2) == [7] * 6
    assert all(owner == (i // 2,) for i, owner in enumerate(virtual_support.row_owner))


def test_expand_single_order_is_identity(cyclic_support):
    np.testing.assert_array_equal(assignment.expand_virtual(cyclic_support, [3]).mask, cyclic_support.mask)


def test_expand_gc_mmc2_cluster():
    M = assignment.expand_virtual(assignment.build_cyclic_assignment(10, 10), [10, 8, 6])
    assert M.shape == (30, 10)
    assert brute_zero_counts(M.mask) == [6] * 10


def test_expand_rejects_order_above_r(cyclic_support):
    with pytest.raises(ValueError):
        assignment.expand_virtual(cyclic_support, [3, 4])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n)))
       .flatmap(lambda nr: st.tuples(st.just(nr[0]), st.just(nr[1]),
                                     st.lists(st.integers(1, nr[1]), max_size=3))))
def test_expand_zero_count_property(args):
    n, r, extra = args
    ov = [r] + sorted(extra, reverse=True)
    M = assignment.expand_virtual(assignment.build_cyclic_assignment(n, r), ov)
    assert brute_zero_counts(M.mask) == [n * len(ov) - sum(ov)] * n
    # virtual rows are prefixes of the real worker's computation order
    for w, order in enumerate(M.orders):
        for j, mj in enumerate(ov):
            assert set(M.support(w * len(ov) + j)) == set(order[:mj])


def test_schedule_example1_correlated(cyclic_support):
    M = assignment.shrink_correlated(cyclic_support, 2)
    sched = assignment.build_message_schedule(M, CORRELATED, m=2)
    assert sched.entries[0] == ((0, 2), (1, 3))
    assert all(len(e) == 2 for e in sched.entries)


def test_schedule_plain_gc_single_message(cyclic_support):
    sched = assignment.build_message_schedule(cyclic_support, CORRELATED, m=3)
    assert sched.entries == tuple(((w, 3),) for w in range(6))


def test_schedule_full_cluster_rows_are_own_rows():
    # r == K~: every row has the same support, each worker still sends its own row
    M = assignment.build_cyclic_assignment(10, 10)
    sched = assignment.build_message_schedule(M, CORRELATED, m=10)
    assert sched.entries == tuple(((w, 10),) for w in range(10))


def test_schedule_gc_mmc2_prefix_rule():
    M = assignment.expand_virtual(assignment.build_cyclic_assignment(10, 10), [10, 8, 6])
    sched = assignment.build_message_schedule(M, UNCORRELATED, order_vector=[10, 8, 6])
    for w, msgs in enumerate(sched.entries):
        assert [c for _, c in msgs] == [6, 8, 10]
        assert [len(M.support(row)) for row, _ in msgs] == [6, 8, 10]


def test_schedule_gc_mmc1_five_messages():
    M = assignment.shrink_correlated(assignment.build_cyclic_assignment(10, 10), 6)
    sched = assignment.build_message_schedule(M, CORRELATED, m=6)
    assert all([c for _, c in e] == [6, 7, 8, 9, 10] for e in sched.entries)


def test_schedule_design_mismatch(virtual_support):
    with pytest.raises(ValueError, match="design"):
        assignment.build_message_schedule(virtual_support, CORRELATED, m=2)


@pytest.mark.parametrize("n, r, m", [(6, 3, 2), (12, 3, 1), (10, 10, 6), (7, 4, 2), (9, 5, 5)])
def test_messages_never_precede_their_support(n, r, m):
    M = assignment.shrink_correlated(assignment.build_cyclic_assignment(n, r), m)
    sched = assignment.build_message_schedule(M, CORRELATED, m=m)
    for w, msgs in enumerate(sched.entries):
        order = M.orders[w]
        for s, (row, c) in enumerate(msgs):
            assert c == m + s
            assert set(M.support(row)) <= set(order[:c])
    assert {row for _, row, _ in sched.flat()} == set(range(n))
