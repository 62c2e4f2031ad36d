import numpy as np
import pytest

from gaussrd import make_model
from gaussrd.duality import make_direct

HALF_LN2 = 0.5 * np.log(2.0)
R_HALF = np.array([HALF_LN2, HALF_LN2])

ACCEPTANCE_LINES: list[str] = []


def random_model(rng, k=None, l=None, kmax=3, lmax=4):
    k = int(rng.integers(1, kmax + 1)) if k is None else k
    l = int(rng.integers(1, lmax + 1)) if l is None else l
    b = rng.normal(size=(k, k))
    sx = b @ b.T / k + 0.3 * np.eye(k)
    a = rng.normal(size=(l, k))
    nv = rng.uniform(0.2, 2.0, size=l)
    return make_model(sx, a, nv)


def random_direct(rng, l=None, lmax=4):
    l = int(rng.integers(1, lmax + 1)) if l is None else l
    b = rng.normal(size=(l, l))
    sx = b @ b.T / l + 0.3 * np.eye(l)
    return make_direct(sx, rng.uniform(0.1, 1.5, size=l))


def random_rates(rng, l, hi=2.0, zero_prob=0.2):
    r = rng.uniform(0.0, hi, size=l)
    r[rng.uniform(size=l) < zero_prob] = 0.0
    return r


@pytest.fixture
def m1():
    return make_model([[1.0]], [1.0, 1.0], [1.0, 1.0])


@pytest.fixture
def m2():
    return make_model(np.eye(2), np.eye(2), [1.0, 0.25])


@pytest.fixture
def cyc2_direct():
    # circulant with eigenvalues (1.5, 0.5), noise 0.1
    return make_direct([[1.0, 0.5], [0.5, 1.0]], [0.1, 0.1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
