import math

import numpy as np
import pytest

from gaussrd.errors import InvalidInput, OutsideD
from gaussrd.two_terminal import (
    TwoTerminalInstance,
    in_wagner_D,
    oho_bound,
    oho_region_contains,
    wagner_beta,
    wagner_sum_rate,
)


@pytest.mark.parametrize(
    "rho, d, inside",
    [(0.5, (0.2, 0.2), True), (0.5, (1.0, 1.0), True), (0.0, (0.5, 1.2), False), (0.9, (0.1, 0.5), False)],
)
def test_in_wagner_D(rho, d, inside):
    assert in_wagner_D(TwoTerminalInstance(rho, *d)) is inside


def test_wagner_examples():
    inst = TwoTerminalInstance(0.5, 0.2, 0.2)
    assert wagner_beta(inst) == pytest.approx(2.03494, abs=1e-5)
    # closed form evaluated by hand: 1/2 ln(0.75 * 2.0349449797506685 / 0.08)
    assert wagner_sum_rate(inst) == pytest.approx(0.5 * math.log(0.75 * 2.0349449797506685 / 0.08), abs=1e-12)
    assert wagner_sum_rate(TwoTerminalInstance(0.5, 1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)
    inst = TwoTerminalInstance(0.5, 0.75, 0.75)
    assert wagner_beta(inst) == pytest.approx(1 + math.sqrt(2), abs=1e-12)
    assert wagner_sum_rate(inst) == pytest.approx(0.5 * math.log(0.75 * (1 + math.sqrt(2)) / 1.125), abs=1e-12)


def test_wagner_outside():
    with pytest.raises(OutsideD):
        wagner_sum_rate(TwoTerminalInstance(0.0, 0.5, 1.2))


def test_independent_sources_add_up():
    for d1, d2 in [(0.2, 0.5), (0.9, 0.9)]:
        val = wagner_sum_rate(TwoTerminalInstance(0.0, d1, d2))
        assert val == pytest.approx(0.5 * math.log(1 / d1) + 0.5 * math.log(1 / d2), abs=1e-12)


def test_instance_validation():
    with pytest.raises(InvalidInput):
        TwoTerminalInstance(1.0, 0.5, 0.5)
    with pytest.raises(InvalidInput):
        TwoTerminalInstance(0.5, 0.0, 0.5)


def test_oho_examples():
    s = math.exp(-0.7)
    assert oho_bound(0.5, 0.2, s) == pytest.approx(0.5 * math.log(0.75 / 0.2 * (1 + s / 3)), abs=1e-12)
    assert oho_region_contains(0.5, 1, 0.2, (0.9, 0.35))
    assert not oho_region_contains(0.5, 1, 0.2, (0.7, 0.35))


@pytest.mark.parametrize("d1", [0.1, 0.4, 0.9])
def test_oho_reductions(d1):
    need = 0.5 * math.log(1 / d1)
    assert oho_bound(0.6, d1, 1.0) == pytest.approx(need, abs=1e-12)
    assert oho_region_contains(0.6, 1, d1, (need + 1e-12, 0.0))
    assert not oho_region_contains(0.6, 1, d1, (need - 1e-6, 0.0))
    for helper in (0.0, 1.0, 10.0):
        assert oho_region_contains(0.0, 2, d1, (helper, need + 1e-12))
        assert not oho_region_contains(0.0, 2, d1, (helper, need - 1e-6))


def test_oho_errors():
    with pytest.raises(InvalidInput):
        oho_region_contains(0.5, 3, 0.2, (1.0, 1.0))
    with pytest.raises(InvalidInput):
        oho_region_contains(0.5, 1, 0.2, (-1.0, 1.0))


def test_oho_helper_rate_helps():
    vals = [oho_bound(0.7, 0.3, math.exp(-2 * r)) for r in np.linspace(0, 3, 7)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
