import numpy as np
import pytest

from gaussrd import MatrixSpec, SumSpec, VectorSpec
from gaussrd.duality import (
    convert_spec,
    corollary_path,
    direct_error_covariance,
    direct_feasible,
    direct_sum_rate,
    duality_matrices,
    invert_spec,
    make_direct,
    matching_direct,
    remote_model,
    tilde_j,
)
from gaussrd.errors import EmptySubset, HiddenSourceNotPD, InvalidInput, SpecDimensionMismatch
from gaussrd.gauss_model import error_covariance, scaled_noise_inverse
from gaussrd.rate_region import feasible, j_lower, j_upper, sum_rate_inner

from conftest import R_HALF, random_direct, random_rates


def test_duality_matrices_identity():
    mats = duality_matrices(make_direct(np.eye(2), [1.0, 1.0]))
    np.testing.assert_allclose(mats.a_tilde, 0.5 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(mats.b, 2 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(mats.b_tilde, 2 * np.eye(2), atol=1e-15)


def test_duality_matrices_correlated():
    mats = duality_matrices(make_direct([[1.0, 0.5], [0.5, 1.0]], [1.0, 1.0]))
    np.testing.assert_allclose(mats.a_tilde, np.array([[7, 2], [2, 7]]) / 15, atol=1e-14)
    np.testing.assert_allclose(mats.b, np.array([[7, -2], [-2, 7]]) / 3, atol=1e-14)


def test_noiseless_limit():
    mats = duality_matrices(make_direct([[1.0, 0.5], [0.5, 1.0]], [1e-6, 1e-6]))
    np.testing.assert_allclose(mats.b, 0.0, atol=1e-4)
    np.testing.assert_allclose(mats.a_tilde, np.eye(2), atol=1e-4)


def test_make_direct_rejects_correlated_noise():
    with pytest.raises(InvalidInput):
        make_direct(np.eye(2), [[1.0, 0.1], [0.1, 1.0]])
    dm = make_direct(np.eye(2), np.diag([1.0, 2.0]))
    np.testing.assert_array_equal(dm.noise_var, [1.0, 2.0])


def test_convert_examples():
    dm = make_direct(np.eye(2), [1.0, 1.0])
    _, s = convert_spec(dm, SumSpec(np.eye(2), 1.0))
    np.testing.assert_allclose(s.gamma, 2 * np.eye(2), atol=1e-14)
    assert s.d == pytest.approx(5.0)
    _, v = convert_spec(dm, VectorSpec(np.eye(2), [1.0, 1.0]))
    np.testing.assert_allclose(v.gamma, 2 * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(v.d, [3.0, 3.0])
    _, mspec = convert_spec(dm, MatrixSpec(1e-9 * np.eye(2)))
    np.testing.assert_allclose(mspec.sigma_d, duality_matrices(dm).sigma_n_tilde, atol=1e-8)
    with pytest.raises(SpecDimensionMismatch):
        convert_spec(dm, SumSpec(np.eye(3), 1.0))


@pytest.mark.parametrize("seed", range(5))
def test_invert_spec_round_trip(seed):
    rng = np.random.default_rng(seed)
    dm = random_direct(rng, l=3)
    g = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
    for spec in (SumSpec(g, 2.0), VectorSpec(g, [0.5, 0.7, 0.9]), MatrixSpec(np.diag([0.4, 0.5, 0.6]))):
        back = invert_spec(dm, convert_spec(dm, spec)[1])
        for name in ("gamma", "d", "sigma_d"):
            if hasattr(spec, name):
                np.testing.assert_allclose(getattr(back, name), getattr(spec, name), atol=1e-10)


def test_tilde_j_examples():
    dm = make_direct(np.eye(2), [1.0, 1.0])
    assert tilde_j(dm, [0, 1], R_HALF) == pytest.approx(0.5 * np.log(9.0), abs=1e-14)
    assert tilde_j(dm, [0], [0.0, 0.3]) == 0.0
    with pytest.raises(EmptySubset):
        tilde_j(dm, [], R_HALF)


@pytest.mark.parametrize("seed", range(10))
def test_tilde_j_lower_matches_converted(seed):
    rng = np.random.default_rng(seed)
    dm = random_direct(rng)
    r = random_rates(rng, dm.l, zero_prob=0.0)
    mats = duality_matrices(dm)
    sd = direct_error_covariance(dm, r) + 0.1 * np.eye(dm.l)
    theta = float(np.linalg.det(sd + mats.b))
    model, ms = convert_spec(dm, MatrixSpec(sd))
    theta_remote = float(np.linalg.det(ms.sigma_d))
    for mask in range(1, 1 << dm.l):
        assert tilde_j(dm, mask, r, theta) == pytest.approx(j_lower(model, mask, theta_remote, r), abs=1e-9)


def test_direct_error_covariance_maps_to_remote():
    rng = np.random.default_rng(4)
    dm = random_direct(rng, l=3)
    r = random_rates(rng, 3)
    mats = duality_matrices(dm)
    model = remote_model(dm)
    e_x = error_covariance(model, scaled_noise_inverse(model, r))
    e_y = direct_error_covariance(dm, r)
    np.testing.assert_allclose(mats.a_tilde @ (e_y + mats.b) @ mats.a_tilde.T, e_x, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_direct_sum_rate_equals_remote(seed):
    rng = np.random.default_rng(20 + seed)
    dm = random_direct(rng, l=2)
    e_full = direct_error_covariance(dm, [10.0, 10.0])
    d = float(np.trace(e_full)) + 0.5 * float(np.trace(dm.sigma_y) - np.trace(e_full))
    spec = SumSpec(np.eye(2), d)
    model, rspec = convert_spec(dm, spec)
    assert direct_sum_rate(dm, spec).value == pytest.approx(sum_rate_inner(model, rspec).value, abs=1e-7)


def test_matching_direct_example():
    dm = make_direct(np.eye(2), [0.5, 0.5])
    g = np.diag([np.sqrt(2), np.sqrt(2)])
    rep = matching_direct(dm, g, 1.0)
    assert rep.threshold == pytest.approx(1.5)
    assert rep.verdict == "Matched"
    assert matching_direct(dm, g, 1.6).verdict == "Unknown"


def test_corollary_path():
    sy = 2.0 * np.eye(2)
    # gamma is rescaled to sum(gamma_i^-2) = 1, so the removed noise is delta / 2 per coordinate
    rep = corollary_path(sy, np.eye(2), 2.0)
    np.testing.assert_allclose(rep.noise_var, [1.0, 1.0])
    assert rep.lambda_min == pytest.approx(1.0)
    assert rep.best_bound == pytest.approx(0.25)
    assert rep.bound == pytest.approx(2.0 - 4.0)
    assert rep.theorem_threshold >= rep.bound - 1e-12
    rep = corollary_path(sy, np.eye(2), 0.5)
    assert rep.bound == pytest.approx(0.5 - 0.25 / 1.75)
    assert rep.theorem_threshold >= rep.bound - 1e-12
    with pytest.raises(HiddenSourceNotPD):
        corollary_path(sy, np.eye(2), 4.0)
    dm = make_direct(np.eye(2), [1.0, 1.0])
    attached = matching_direct(dm, np.eye(2), 0.1, delta=0.5).corollary
    assert attached is not None and attached.delta == 0.5


def test_direct_feasible_dimension():
    dm = make_direct(np.eye(2), [1.0, 1.0])
    with pytest.raises(SpecDimensionMismatch):
        direct_feasible(dm, SumSpec(np.eye(3), 1.0), R_HALF)


@pytest.mark.parametrize("seed", range(5))
def test_feasibility_equivalence(seed):
    rng = np.random.default_rng(50 + seed)
    dm = random_direct(rng, l=3)
    g = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
    for _ in range(20):
        r = random_rates(rng, 3)
        spec = SumSpec(g, rng.uniform(0.3, 3.0))
        model, rspec = convert_spec(dm, spec)
        assert direct_feasible(dm, spec, r) == feasible(model, rspec, r)
    assert j_upper(remote_model(dm), [0], [0.5, 0.5, 0.5]) == pytest.approx(tilde_j(dm, [0], [0.5, 0.5, 0.5]))
