"""Determinant maximization under trace and diagonal constraints.

For a rate allocation ``r`` let ``M = Sigma_X^{-1} + A^T diag(u) A`` and
``E = M^{-1}``.  The largest determinant of a covariance ``S`` with
``E <= S`` and ``trace(Gamma S Gamma^T) <= D`` has the closed form

    omega = |Gamma|^{-2} * prod_i max(xi, 1/alpha_i),

where ``alpha_i`` are the eigenvalues of ``Gamma^{-T} M Gamma^{-1}`` and the
water level ``xi`` spends the budget ``D``.  The maximizer is
``Gamma^{-1} V diag(levels) V^T Gamma^{-T}`` with ``V`` the eigenvectors.

The vector-criterion analogue (one cap per diagonal entry) has no closed
form; :func:`theta_vector` solves it by block coordinate ascent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAllocation, InsufficientBudget, SpecDimensionMismatch
from .gauss_model import (
    SourceModel,
    SumSpec,
    VectorSpec,
    _gamma_matrix,
    error_covariance,
    precision,
    scaled_noise_inverse,
)

__all__ = [
    "WaterSolution",
    "ThetaEstimate",
    "alpha_spectrum",
    "alpha_eig",
    "water_level",
    "omega",
    "omega_solution",
    "theta_oracle",
    "theta_vector",
]

BUDGET_TOL = 1e-12


@dataclass(frozen=True)
class WaterSolution:
    xi: float
    levels: np.ndarray
    omega: float


def alpha_eig(model: SourceModel, gamma, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenpairs of ``Gamma^{-T} M(u) Gamma^{-1}``."""
    g = _gamma_matrix(gamma)
    if g.shape[0] != model.k:
        raise SpecDimensionMismatch(f"gamma is {g.shape[0]}x{g.shape[0]}, model has K={model.k}")
    gi = np.linalg.inv(g)
    c = gi.T @ precision(model, u) @ gi
    return np.linalg.eigh(0.5 * (c + c.T))


def alpha_spectrum(model: SourceModel, gamma, r) -> np.ndarray:
    """Sorted eigenvalues ``alpha_1 <= ... <= alpha_K``."""
    return alpha_eig(model, gamma, scaled_noise_inverse(model, r))[0]


def water_level(alphas, d: float) -> WaterSolution:
    """Solve ``sum_i max(xi, 1/alpha_i) = d`` for the water level ``xi``.

    ``omega`` here is the plain product of levels; the ``|Gamma|^{-2}``
    factor is applied by :func:`omega`.
    """
    inv = 1.0 / np.asarray(alphas, dtype=float)
    floor = float(np.sum(inv))
    if d < floor - BUDGET_TOL * (1.0 + floor):
        raise InsufficientBudget(f"budget {d:.6g} is below the forced minimum {floor:.6g}")
    if d <= floor:
        return WaterSolution(0.0, inv.copy(), float(np.prod(inv)))

    def spent(x):
        return float(np.sum(np.maximum(x, inv)))

    lo, hi = 0.0, float(d)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spent(mid) < d:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BUDGET_TOL:
            break
    # exact solve on the active set found by bisection
    xi = 0.5 * (lo + hi)
    for _ in range(3):
        wet = inv <= xi
        n = int(np.sum(wet))
        if n == 0:
            break
        xi_new = (d - float(np.sum(inv[~wet]))) / n
        if np.array_equal(inv <= xi_new, wet):
            xi = xi_new
            break
        xi = xi_new
    levels = np.maximum(xi, inv)
    return WaterSolution(float(xi), levels, float(np.prod(levels)))


def _budget_check(model, gamma, d, u):
    g = _gamma_matrix(gamma)
    e = error_covariance(model, u)
    used = float(np.trace(g @ e @ g.T))
    if used > d + 1e-9 * (1.0 + abs(d)):
        raise InfeasibleAllocation(f"trace distortion {used:.6g} exceeds D={d:.6g} at this allocation")
    return g


def omega_solution(model: SourceModel, gamma, d: float, r) -> tuple[float, np.ndarray, WaterSolution]:
    """``omega`` together with the maximizing covariance and the water solution."""
    u = scaled_noise_inverse(model, r)
    g = _budget_check(model, gamma, d, u)
    alphas, vecs = alpha_eig(model, g, u)
    # tiny overshoot within the feasibility tolerance is treated as the boundary
    floor = float(np.sum(1.0 / alphas))
    ws = water_level(alphas, max(float(d), floor))
    gi = np.linalg.inv(g)
    sd = gi @ (vecs * ws.levels) @ vecs.T @ gi.T
    val = ws.omega / np.linalg.det(g) ** 2
    return float(val), 0.5 * (sd + sd.T), ws


def omega(model: SourceModel, gamma, d: float, r) -> float:
    """Closed-form maximal determinant under the sum criterion."""
    return omega_solution(model, gamma, d, r)[0]


@dataclass(frozen=True)
class ThetaEstimate:
    """Best determinant found plus provenance.

    ``value`` is a certified lower bound on the true maximum because it is
    attained by ``argmax``, which satisfies every constraint.
    """

    value: float
    argmax: np.ndarray
    constructed: float
    sample_max: float


def _spec_parts(spec):
    if isinstance(spec, SumSpec):
        return spec.gamma, np.array([spec.d]), "sum"
    if isinstance(spec, VectorSpec):
        return spec.gamma, spec.d, "vector"
    raise TypeError("theta_oracle needs a Sum or Vector criterion")


def theta_oracle(model: SourceModel, spec, r, samples: int = 10_000, seed: int = 0,
                 batch: int = 2048) -> ThetaEstimate:
    """Randomized lower bound on the determinant maximum.

    Candidates are ``E + c P`` with ``P`` a random PSD matrix and ``c`` the
    largest scale keeping the criterion satisfied.  The analytic candidate
    (water-filling for Sum, diagonal caps for Vector) is always included.
    Random draws use a Philox stream keyed by ``seed``.
    """
    gamma, caps, kind = _spec_parts(spec)
    u = scaled_noise_inverse(model, r)
    g = _gamma_matrix(gamma)
    e = error_covariance(model, u)
    p0 = g @ e @ g.T
    gi = np.linalg.inv(g)
    k = model.k
    tol = 1e-9 * (1.0 + float(np.max(caps)))

    if kind == "sum":
        if np.trace(p0) > caps[0] + tol:
            raise InfeasibleAllocation("allocation violates the sum criterion")
        constructed, best_mat, _ = omega_solution(model, g, float(caps[0]), r)
    else:
        slack = caps - np.diag(p0)
        if np.any(slack < -tol):
            raise InfeasibleAllocation("allocation violates the vector criterion")
        best_mat = e + gi @ np.diag(np.maximum(slack, 0.0)) @ gi.T
        constructed = float(np.linalg.det(best_mat))

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    sample_max = -np.inf
    sample_arg = None
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        w = rng.standard_normal((m, k, k))
        # random rank to include boundary-hugging low-rank draws
        rank = rng.integers(1, k + 1, size=m)
        mask = np.arange(k)[None, None, :] < rank[:, None, None]
        w = np.where(mask, w, 0.0)
        q = np.einsum("nij,nkj->nik", w, w)
        gq = np.einsum("ij,njk,lk->nil", g, q, g)
        if kind == "sum":
            scale = np.maximum(caps[0] - np.trace(p0), 0.0) / np.trace(gq, axis1=1, axis2=2)
        else:
            diag = np.diagonal(gq, axis1=1, axis2=2)
            with np.errstate(divide="ignore"):
                ratios = np.where(diag > 0, np.maximum(caps - np.diag(p0), 0.0)[None, :] / diag, np.inf)
            scale = np.min(ratios, axis=1)
        cand = e[None] + scale[:, None, None] * q
        dets = np.linalg.det(cand)
        j = int(np.argmax(dets))
        if dets[j] > sample_max:
            sample_max = float(dets[j])
            sample_arg = cand[j]
        done += m

    if sample_arg is not None and sample_max > constructed:
        value, arg = sample_max, sample_arg
    else:
        value, arg = constructed, best_mat
    return ThetaEstimate(float(value), arg, float(constructed), float(sample_max))


def _trs(q: np.ndarray, c: np.ndarray, rad2: float) -> np.ndarray:
    """Global minimizer of ``x^T Q x + 2 c^T x`` over ``|x|^2 <= rad2``.

    Classical trust-region subproblem: ``(Q + mu I) x = -c`` with
    ``Q + mu I`` PSD and ``mu`` set by the secular equation; the hard case
    adds a component along the lowest eigenvector.
    """
    lam, v = np.linalg.eigh(0.5 * (q + q.T))
    ch = v.T @ c
    scale = 1.0 + float(np.max(np.abs(lam)))
    floor = max(0.0, -float(lam[0]))

    def norm2(mu):
        return float(np.sum((ch / (lam + mu)) ** 2))

    if lam[0] > 1e-13 * scale:
        x = -ch / lam
        if float(x @ x) <= rad2:
            return v @ x
    low = lam <= lam[0] + 1e-12 * scale
    tiny = 1e-14 * (1.0 + float(np.max(np.abs(ch))))
    if np.all(np.abs(ch[low]) <= tiny):
        # hard case candidate at mu = floor
        x = np.where(low, 0.0, -ch / np.where(low, 1.0, lam + floor))
        extra = rad2 - float(x @ x)
        if extra >= 0.0:
            x[int(np.argmax(low))] = np.sqrt(extra)
            return v @ x
    lo = floor
    hi = floor + float(np.linalg.norm(ch)) / np.sqrt(rad2) + 1.0
    while norm2(hi) > rad2:
        hi *= 2.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if norm2(mid) > rad2:
            lo = mid
        else:
            hi = mid
    return v @ (-ch / (lam + hi))


def _row_update(p0: np.ndarray, lm: np.ndarray, i: int, cap: float) -> np.ndarray:
    """Best row ``i`` of ``L`` with the other rows held fixed.

    With ``W`` the other rows, ``G = (P0_oo + W W^T)^{-1}`` and ``p = P0_oi``,
    the Schur complement gives
    ``log|P0 + L L^T| = const + log(P0_ii + |l|^2 - (p + W l)^T G (p + W l))``,
    so the row solves a trust-region subproblem in ``l``.
    """
    k = lm.shape[0]
    others = [j for j in range(k) if j != i]
    if not others:
        x = np.zeros(lm.shape[1])
        x[0] = np.sqrt(cap)
        return x
    w = lm[others]
    gmat = np.linalg.inv(p0[np.ix_(others, others)] + w @ w.T)
    gmat = 0.5 * (gmat + gmat.T)
    p = p0[others, i]
    # maximize |l|^2 - (p + W l)^T G (p + W l)
    q = w.T @ gmat @ w - np.eye(lm.shape[1])
    c = w.T @ gmat @ p
    return _trs(q, c, cap)


def theta_vector(model: SourceModel, gamma, d_vec, r, restarts: int = 8, sweeps: int = 200,
                 seed: int = 0) -> ThetaEstimate:
    """Heuristic maximal determinant under per-coordinate caps.

    Writes ``Gamma S Gamma^T = P0 + L L^T`` with ``P0 = Gamma E Gamma^T``, so
    every candidate satisfies ``S >= E`` by construction and the caps become
    ``|l_i|^2 <= D_i - P0_ii``.  Block coordinate ascent over the rows of
    ``L`` maximizes ``log|P0 + L L^T|``; each row update is solved globally.
    Starts from the diagonal candidate plus random row directions.
    """
    g = _gamma_matrix(gamma)
    caps = np.atleast_1d(np.asarray(d_vec, dtype=float))
    if caps.shape != (model.k,):
        raise SpecDimensionMismatch(f"need {model.k} caps, got {caps.shape[0]}")
    u = scaled_noise_inverse(model, r)
    e = error_covariance(model, u)
    p0 = g @ e @ g.T
    p0 = 0.5 * (p0 + p0.T)
    slack = caps - np.diag(p0)
    tol = 1e-9 * (1.0 + float(np.max(caps)))
    if np.any(slack < -tol):
        raise InfeasibleAllocation("allocation violates the vector criterion")
    slack = np.maximum(slack, 0.0)
    k = model.k
    gdet2 = np.linalg.det(g) ** 2
    gi = np.linalg.inv(g)
    hadamard = float(np.prod(caps) / gdet2)
    if np.linalg.eigvalsh(np.diag(caps) - p0)[0] >= -tol:
        # diagonal caps are attainable, so the Hadamard bound is the maximum
        arg = gi @ np.diag(caps) @ gi.T
        return ThetaEstimate(hadamard, 0.5 * (arg + arg.T), hadamard, hadamard)

    def logdet_of(lm):
        return float(np.linalg.slogdet(p0 + lm @ lm.T)[1])

    base = np.diag(np.sqrt(slack))
    starts = [base]
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    for _ in range(restarts - 1):
        z = rng.standard_normal((k, k))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        starts.append(np.sqrt(slack)[:, None] * z)

    best_val, best_l = logdet_of(base), base
    for lm in starts:
        lm = lm.copy()
        cur = logdet_of(lm)
        for _ in range(sweeps):
            for i in range(k):
                lm[i] = _row_update(p0, lm, i, slack[i]) if slack[i] > 0.0 else 0.0
            new = logdet_of(lm)
            done = new <= cur + 1e-14 * (1.0 + abs(cur))
            cur = max(cur, new)
            if done:
                break
        if cur > best_val:
            best_val, best_l = cur, lm
    arg = gi @ (p0 + best_l @ best_l.T) @ gi.T
    return ThetaEstimate(float(np.exp(best_val) / gdet2), 0.5 * (arg + arg.T),
                         float(np.exp(logdet_of(base)) / gdet2), float(np.exp(best_val) / gdet2))
