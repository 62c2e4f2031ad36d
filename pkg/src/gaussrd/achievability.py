"""Gaussian test channels and the linear estimator behind the inner bound.

Encoder ``i`` forms ``U_i = Y_i + V_i`` with independent
``V_i ~ N(0, noise_var_i / (e^{2 r_i} - 1))``.  A zero rate makes ``U_i``
the constant zero; such channels are dropped from every joint covariance
instead of carrying an infinite variance.  The decoder applies the MMSE
estimator ``X_hat = E A^T diag(u) U`` with ``E = M(u)^{-1}``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BadSampleCount, NumericalFailure
from .gauss_model import SourceModel, error_covariance, logdet, scaled_noise_inverse
from .rate_region import _in_mask, subset_mask

__all__ = [
    "TestChannel",
    "MonteCarloResult",
    "test_channel",
    "test_channel_distortion",
    "berger_tung_mutual_info",
    "monte_carlo_distortion",
    "BLOCK",
]

BLOCK = 8192


@dataclass(frozen=True, eq=False)
class TestChannel:
    """``v_prec[i] = (e^{2 r_i} - 1) / noise_var_i`` is the inverse variance of
    ``V_i``; it is zero exactly on the degenerate channels."""

    __test__ = False  # not a pytest class

    model: SourceModel
    r: np.ndarray
    v_prec: np.ndarray
    degenerate: np.ndarray
    estimator: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return ~self.degenerate

    def v_var(self) -> np.ndarray:
        """Variances of ``V`` on the active channels only."""
        return 1.0 / self.v_prec[self.active]


def test_channel(model: SourceModel, r) -> TestChannel:
    u = scaled_noise_inverse(model, r)
    rv = np.asarray(r.r if hasattr(r, "r") else r, dtype=float)
    v_prec = np.expm1(2.0 * rv) / model.noise_var
    est = error_covariance(model, u) @ model.a.T * u[None, :]
    return TestChannel(model, rv, v_prec, rv == 0.0, est)


test_channel.__test__ = False


def _joint_yu(tc: TestChannel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = tc.model
    act = tc.active
    cyy = m.a @ m.sigma_x @ m.a.T + np.diag(m.noise_var)
    cyu = cyy[:, act]
    cuu = cyy[np.ix_(act, act)] + np.diag(tc.v_var())
    return cyy, cyu, cuu


def test_channel_distortion(model: SourceModel, r, rtol: float = 1e-10) -> np.ndarray:
    """Error covariance of ``X`` given ``U`` from the joint ``(X, U)`` covariance.

    The result is compared with the precision-form expression ``M(u)^{-1}``
    and :class:`NumericalFailure` is raised if they differ by more than
    ``rtol`` relative to the largest entry.
    """
    tc = test_channel(model, r)
    act = tc.active
    sx = model.sigma_x
    if not np.any(act):
        schur = sx.copy()
    else:
        _, _, cuu = _joint_yu(tc)
        cxu = sx @ model.a[act].T
        schur = sx - cxu @ np.linalg.solve(cuu, cxu.T)
        schur = 0.5 * (schur + schur.T)
    other = error_covariance(model, scaled_noise_inverse(model, r))
    scale = 1.0 + float(np.max(np.abs(other)))
    if np.max(np.abs(schur - other)) > rtol * scale:
        raise NumericalFailure("joint-covariance and precision-form error covariances disagree")
    return schur


test_channel_distortion.__test__ = False


def _cond_logdet(cov: np.ndarray, target: list[int], given: list[int]) -> float:
    if not target:
        return 0.0
    a = cov[np.ix_(target, target)]
    if given:
        b = cov[np.ix_(target, given)]
        a = a - b @ np.linalg.solve(cov[np.ix_(given, given)], b.T)
    return logdet(0.5 * (a + a.T))


def berger_tung_mutual_info(model: SourceModel, s, r) -> float:
    """``I(U_S; Y_S | U_{S^c})`` in nats from the joint covariance of ``(Y, U)``."""
    mask = subset_mask(s, model.l)
    tc = test_channel(model, r)
    l = model.l
    inside = _in_mask(mask, l)
    act_idx = [i for i in range(l) if tc.active[i]]
    if not any(inside[i] for i in act_idx):
        return 0.0
    cyy, cyu, cuu = _joint_yu(tc)
    # joint layout: Y_0..Y_{L-1}, then the active U's
    joint = np.block([[cyy, cyu], [cyu.T, cuu]])
    u_pos = {i: l + k for k, i in enumerate(act_idx)}
    us = [u_pos[i] for i in act_idx if inside[i]]
    uc = [u_pos[i] for i in act_idx if not inside[i]]
    ys = [i for i in range(l) if inside[i]]
    h1 = _cond_logdet(joint, us, uc)
    h2 = _cond_logdet(joint, us, ys + uc)
    return max(0.5 * (h1 - h2), 0.0)


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    """Empirical error covariance (known zero mean, divisor ``n``) and the
    per-entry standard error ``sqrt((E_ii E_jj + E_ij^2) / n)`` of that
    estimate under the analytic covariance ``E``."""

    empirical: np.ndarray
    analytic: np.ndarray
    stderr: np.ndarray
    n: int

    def max_deviation_in_stderr(self) -> float:
        return float(np.max(np.abs(self.empirical - self.analytic) / self.stderr))


def _block_moment(model: SourceModel, tc: TestChannel, chol: np.ndarray, seed: int, b: int, m: int) -> np.ndarray:
    # block b owns the counter range whose top word is b
    bitgen = np.random.Philox(key=np.uint64(seed & (2 ** 64 - 1)), counter=[0, 0, 0, b])
    rng = np.random.Generator(bitgen)
    k, l = model.k, model.l
    z = rng.standard_normal((m, k + 2 * l))
    x = z[:, :k] @ chol.T
    y = x @ model.a.T + z[:, k:k + l] * np.sqrt(model.noise_var)
    act = tc.active
    u = np.zeros((m, l))
    if np.any(act):
        u[:, act] = y[:, act] + z[:, k + l:][:, act] * np.sqrt(tc.v_var())
    err = x - u @ tc.estimator.T
    return err.T @ err


def monte_carlo_distortion(model: SourceModel, r, n: int, seed: int = 0, workers: int = 1) -> MonteCarloResult:
    """Simulate the test channel and estimator on ``n`` samples.

    Samples are drawn in fixed blocks of :data:`BLOCK`; block ``b`` uses a
    Philox stream keyed by ``seed`` with its own counter range, and block
    sums are reduced with ``math.fsum`` in block order, so the output does
    not depend on ``workers``.
    """
    if int(n) != n or n < 2:
        raise BadSampleCount(f"need at least 2 samples, got {n}")
    n = int(n)
    tc = test_channel(model, r)
    chol = np.linalg.cholesky(model.sigma_x)
    nblocks = -(-n // BLOCK)
    sizes = [min(BLOCK, n - b * BLOCK) for b in range(nblocks)]
    job = lambda b: _block_moment(model, tc, chol, seed, b, sizes[b])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(nblocks)))
    else:
        parts = [job(b) for b in range(nblocks)]
    k = model.k
    emp = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            emp[i, j] = math.fsum(p[i, j] for p in parts) / n
    analytic = error_covariance(model, scaled_noise_inverse(model, r))
    d = np.diag(analytic)
    stderr = np.sqrt((np.outer(d, d) + analytic ** 2) / n)
    return MonteCarloResult(emp, analytic, stderr, n)
