import numpy as np
import pytest

from gcmmc import assignment, coding

# cyclic assignment for K=6, r=3 (rows = workers)
CYCLIC_6_3 = np.array([
    [1, 1, 1, 0, 0, 0],
    [0, 1, 1, 1, 0, 0],
    [0, 0, 1, 1, 1, 0],
    [0, 0, 0, 1, 1, 1],
    [1, 0, 0, 0, 1, 1],
    [1, 1, 0, 0, 0, 1],
])

# mask with one virtual worker per real worker (order vector [3, 2]); real and virtual rows alternate
VIRTUAL_6_3_2 = np.array([
    [1, 1, 1, 0, 0, 0],
    [1, 1, 0, 0, 0, 0],
    [0, 1, 1, 1, 0, 0],
    [0, 1, 1, 0, 0, 0],
    [0, 0, 1, 1, 1, 0],
    [0, 0, 1, 1, 0, 0],
    [0, 0, 0, 1, 1, 1],
    [0, 0, 0, 1, 1, 0],
    [1, 0, 0, 0, 1, 1],
    [0, 0, 0, 0, 1, 1],
    [1, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 1],
])


@pytest.fixture
def cyclic_support():
    return assignment.build_cyclic_assignment(6, 3)


@pytest.fixture
def virtual_support():
    return assignment.expand_virtual(assignment.build_cyclic_assignment(6, 3), [3, 2])


@pytest.fixture
def cyclic_code(cyclic_support):
    return coding.build_encoding_matrix(cyclic_support)


@pytest.fixture
def virtual_code(virtual_support):
    return coding.build_encoding_matrix(virtual_support)


ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda e: e[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
