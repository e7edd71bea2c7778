import numpy as np
import pytest

from shiftkrylov.generators import make_rng


def random_dense(n, seed, shift=3.0):
    rng = make_rng(seed)
    return rng.standard_normal((n, n)) / np.sqrt(n) + shift * np.eye(n)


def mixed_shifts(ell, seed):
    rng = make_rng(seed + 1000)
    s = rng.uniform(0.0, 2.0, ell) + 1j * rng.uniform(-1.0, 1.0, ell)
    s[::3] = s[::3].real
    return s


@pytest.fixture
def small_problem():
    from shiftkrylov.solvers import ShiftedProblem

    A = random_dense(40, 7)
    b = make_rng(8).standard_normal(40)
    return ShiftedProblem(A, mixed_shifts(12, 7), b=b)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
