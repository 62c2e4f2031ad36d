import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from gaussrd import MatrixSpec, SumSpec, VectorSpec, make_model
from gaussrd.errors import EmptySubset, InfeasibleSpec, NonpositiveTheta, SpecDimensionMismatch
from gaussrd.gauss_model import error_covariance, scaled_noise_inverse
from gaussrd.rate_region import (
    RateVector,
    copolymatroid_violations,
    corner_point,
    feasible,
    j_lower,
    j_upper,
    membership_verdict,
    polyhedron_contains,
    subset_function,
    subset_mask,
    sum_rate_inner,
    sum_rate_outer,
)

from conftest import R_HALF, random_model, random_rates

LN8 = 0.5 * np.log(8.0)
LN83 = 0.5 * np.log(8.0 / 3.0)


def test_subset_mask_forms():
    assert subset_mask([0, 2], 3) == 0b101
    assert subset_mask(0b011, 3) == 3
    assert subset_mask([], 2) == 0
    with pytest.raises(ValueError):
        subset_mask([3], 3)


@pytest.mark.parametrize(
    "s, theta, r, expected",
    [
        ([0, 1], 0.5, R_HALF, LN8),
        ([0, 1], 1.0, [0.0, 0.0], 0.0),
        ([0], 0.5, R_HALF, LN83),
    ],
)
def test_j_lower_examples(m1, s, theta, r, expected):
    assert j_lower(m1, s, theta, r) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("s, expected", [([0, 1], LN8), ([0], LN83), ([1], LN83)])
def test_j_upper_examples(m1, s, expected):
    assert j_upper(m1, s, R_HALF) == pytest.approx(expected, abs=1e-14)


def test_j_errors(m1):
    with pytest.raises(EmptySubset):
        j_upper(m1, [], R_HALF)
    with pytest.raises(EmptySubset):
        j_lower(m1, 0, 0.5, R_HALF)
    with pytest.raises(NonpositiveTheta):
        j_lower(m1, [0], 0.0, R_HALF)


def test_j_upper_zero_when_subset_rates_zero():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = random_model(rng)
        r = random_rates(rng, m.l)
        for mask in range(1, 1 << m.l):
            idx = [i for i in range(m.l) if mask >> i & 1]
            rz = r.copy()
            rz[idx] = 0.0
            assert j_upper(m, idx, rz) == 0.0


def test_j_upper_against_explicit_determinants():
    # J_S = 1/2 log(|Sigma_X^-1 + sum_all| e^{2 r_S} / |Sigma_X^-1 + sum_{S^c}|)
    rng = np.random.default_rng(11)
    m = random_model(rng, k=2, l=3)
    r = rng.uniform(0.1, 1.5, 3)
    u = (1 - np.exp(-2 * r)) / m.noise_var
    terms = [u[i] * np.outer(m.a[i], m.a[i]) for i in range(3)]
    for s in ([0], [1, 2], [0, 1, 2]):
        full = m.sigma_x_inv + sum(terms)
        rest = m.sigma_x_inv + sum((terms[i] for i in range(3) if i not in s), np.zeros((2, 2)))
        expected = 0.5 * (np.log(np.linalg.det(full) / np.linalg.det(rest)) + 2 * r[s].sum())
        assert j_upper(m, s, r) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "spec, r, expected",
    [
        (MatrixSpec([[0.5]]), R_HALF, True),
        (MatrixSpec([[0.5]]), [0.0, 0.0], False),
        (SumSpec(1.0, 0.5), R_HALF, True),
    ],
)
def test_feasible_examples(m1, spec, r, expected):
    assert feasible(m1, spec, r) is expected


def test_feasible_dimension(m1):
    with pytest.raises(SpecDimensionMismatch):
        feasible(m1, SumSpec(np.eye(2), 1.0), R_HALF)


@pytest.mark.parametrize(
    "rv, r, theta, expected",
    [
        ((0.52, 0.52), R_HALF, 0.5, True),
        ((0.52, 0.51), R_HALF, 0.5, False),
        ((0.0, 0.0), (0.0, 0.0), 1.0, True),
    ],
)
def test_polyhedron_contains_examples(m1, rv, r, theta, expected):
    assert polyhedron_contains(m1, RateVector(rv), r, theta) is expected


def test_copolymatroid_examples(m1):
    assert copolymatroid_violations(m1, R_HALF, "upper") == []
    assert copolymatroid_violations(m1, R_HALF, 0.5) == []
    assert copolymatroid_violations(m1, [0.0, 0.0], "upper") == []
    f = subset_function(m1, R_HALF)
    assert f[[0]] + f[[1]] <= f[[0, 1]]


def test_copolymatroid_detects_a_bad_function(monkeypatch):
    from gaussrd import rate_region

    m = make_model([[1.0]], [1.0, 1.0], [1.0, 1.0])
    bad = rate_region.SubsetFunction(2, np.array([0.0, 1.0, 1.0, 1.5]))
    monkeypatch.setattr(rate_region, "subset_function", lambda *a, **k: bad)
    assert (1, 2) in copolymatroid_violations(m, R_HALF)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_corner_points_lie_in_polyhedron(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, lmax=4)
    r = random_rates(rng, m.l)
    f = subset_function(m, r)
    for order in itertools.islice(itertools.permutations(range(m.l)), 6):
        c = corner_point(m, r, order)
        assert polyhedron_contains(m, c, r)
        assert c.sum() == pytest.approx(f.values[-1], abs=1e-12)


# Sum rates --------------------------------------------------------------------

def slsqp_inner(model, gamma, d, starts=12, seed=0):
    """Independent oracle: SLSQP on the sum-rate objective in r-space."""
    rng = np.random.default_rng(seed)
    ld_x = np.linalg.slogdet(model.sigma_x)[1]

    def obj(r):
        u = (1 - np.exp(-2 * r)) / model.noise_var
        m = model.sigma_x_inv + model.a.T @ np.diag(u) @ model.a
        return r.sum() + 0.5 * (np.linalg.slogdet(m)[1] + ld_x)

    def cons(r):
        u = (1 - np.exp(-2 * r)) / model.noise_var
        m = model.sigma_x_inv + model.a.T @ np.diag(u) @ model.a
        return d - np.trace(gamma @ np.linalg.inv(m) @ gamma.T)

    best = np.inf
    for _ in range(starts):
        x0 = rng.uniform(0.0, 4.0, model.l)
        res = minimize(obj, x0, method="SLSQP", bounds=[(0, 12)] * model.l,
                       constraints=[{"type": "ineq", "fun": cons}], options={"ftol": 1e-14, "maxiter": 500})
        if res.success and cons(res.x) >= -1e-9:
            best = min(best, res.fun)
    return best


def test_m1_sum_rate_examples(m1):
    inner = sum_rate_inner(m1, SumSpec(1.0, 0.5))
    outer = sum_rate_outer(m1, SumSpec(1.0, 0.5))
    assert inner.value == pytest.approx(1.5 * np.log(2), abs=1e-7)
    assert outer.value == pytest.approx(1.5 * np.log(2), abs=1e-7)
    np.testing.assert_allclose(inner.r, R_HALF, atol=1e-4)
    for d in (1.0, 1.7):
        assert sum_rate_inner(m1, SumSpec(1.0, d)).value == 0.0
        assert sum_rate_outer(m1, SumSpec(1.0, d)).value == 0.0
    with pytest.raises(InfeasibleSpec):
        sum_rate_inner(m1, SumSpec(1.0, 1 / 3))
    with pytest.raises(InfeasibleSpec):
        sum_rate_outer(m1, SumSpec(1.0, 0.3))


def test_m2_outer_below_inner(m2):
    spec = SumSpec(np.eye(2), 0.8)
    inner = sum_rate_inner(m2, spec).value
    outer = sum_rate_outer(m2, spec).value
    assert outer <= inner + 1e-9
    assert inner == pytest.approx(2.5375869, abs=1e-6)


def test_m2_threshold_is_open(m2):
    # trace of the conditional covariance is exactly 0.7
    with pytest.raises(InfeasibleSpec):
        sum_rate_inner(m2, SumSpec(np.eye(2), 0.7))


@pytest.mark.parametrize("seed", range(6))
def test_inner_sum_rate_matches_slsqp(seed):
    rng = np.random.default_rng(100 + seed)
    m = random_model(rng, k=int(rng.integers(1, 3)), l=int(rng.integers(2, 4)))
    g = np.eye(m.k)
    e_full = error_covariance(m, m.u_max)
    d = float(np.trace(e_full)) + rng.uniform(0.1, 0.6) * float(np.trace(m.sigma_x) - np.trace(e_full))
    ours = sum_rate_inner(m, SumSpec(g, d))
    oracle = slsqp_inner(m, g, d)
    assert ours.value <= oracle + 1e-7
    assert ours.value >= oracle - 1e-5
    assert feasible(m, SumSpec(g, d), ours.r)


def test_vector_and_matrix_inner_are_feasible(m2):
    for spec in (VectorSpec(np.eye(2), [0.6, 0.4]), MatrixSpec(np.diag([0.6, 0.4]))):
        res = sum_rate_inner(m2, spec)
        assert feasible(m2, spec, res.r)
        assert sum_rate_outer(m2, spec).value <= res.value + 1e-9


def test_membership_examples(m1):
    v = membership_verdict(m1, RateVector([2.0, 2.0]), MatrixSpec([[0.5]]))
    assert v.kind == "InnerCertified"
    v = membership_verdict(m1, RateVector([0.0, 0.0]), MatrixSpec([[0.5]]))
    assert v.kind == "ExcludedHeuristic" and v.margin >= 0.5 * np.log(2) - 1e-9
    v = membership_verdict(m1, RateVector([0.0, 0.0]), MatrixSpec([[1.0]]))
    assert v.kind == "InnerCertified" and v.outer
    np.testing.assert_array_equal(v.r, [0.0, 0.0])


def test_membership_void_region(m1):
    v = membership_verdict(m1, [5.0, 5.0], SumSpec(1.0, 0.2))
    assert v.kind == "ExcludedHeuristic" and v.certifying
