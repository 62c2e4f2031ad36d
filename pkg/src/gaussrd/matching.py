"""Certificates that the inner and outer sum-rate bounds coincide.

With ``C(u) = Gamma^{-T} M(u) Gamma^{-1}`` and ``a_hat_i`` the i-th row of
``A Gamma^{-1}``, the quantities used here are

* ``alpha*_max``: the top eigenvalue of ``C`` at full observation rates;
* ``eta_i(u)``: the Rayleigh quotient of ``C(u with u_i = 0)`` along
  ``a_hat_i``, computed through an explicit Householder rotation;
* ``chi_i(u) = |a_hat_i|^2 / noise_var_i + eta_i(u)``.

A sum criterion with ``trace(Gamma Sigma_X|Y Gamma^T) < D <= (K+1)/alpha*_max``
is guaranteed to match.  :func:`md_condition_numeric` is a falsification tool
for the monotone-decrease condition behind that guarantee, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import InfeasibleAllocation, InfeasibleSpec, SpecDimensionMismatch, ZeroObservationRow
from .gauss_model import SourceModel, _gamma_matrix, conditional_covariance, precision
from .waterfill import alpha_eig, omega

__all__ = [
    "MatchReport",
    "GridConfig",
    "MDResult",
    "alpha_max_star",
    "householder_to_e1",
    "eta_chi",
    "lemma3_condition",
    "sufficient_matching",
    "md_condition_numeric",
]

MATCHED = "Matched"
UNKNOWN = "Unknown"
INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class MatchReport:
    """``verdict`` is ``"Matched"``, ``"Unknown"`` or ``"Infeasible"``.

    ``corollary`` is only filled by the direct-problem test when a noise
    split ``delta`` is requested.
    """

    feasible_lower: float
    threshold: float
    verdict: str
    corollary: object | None = None


def _gamma_for(model: SourceModel, gamma) -> np.ndarray:
    g = _gamma_matrix(gamma)
    if g.shape[0] != model.k:
        raise SpecDimensionMismatch(f"gamma is {g.shape[0]}x{g.shape[0]}, model has K={model.k}")
    return g


def alpha_max_star(model: SourceModel, gamma) -> float:
    """Largest eigenvalue of ``C`` with every encoder at full rate."""
    return float(alpha_eig(model, _gamma_for(model, gamma), model.u_max)[0][-1])


def householder_to_e1(a: np.ndarray) -> np.ndarray:
    """Orthogonal ``Q`` with ``a @ Q = |a| e_1``.

    The reflector is built towards ``-sign(a_1)|a| e_1`` to avoid
    cancellation, then its first column is negated if needed so the image
    is ``+|a| e_1``.
    """
    a = np.asarray(a, dtype=float)
    k = a.size
    nrm = float(np.linalg.norm(a))
    s = 1.0 if a[0] >= 0 else -1.0
    v = a.copy()
    v[0] += s * nrm
    vv = float(v @ v)
    q = np.eye(k) if vv == 0.0 else np.eye(k) - 2.0 * np.outer(v, v) / vv
    q[:, 0] *= -s
    return q


def _a_hat(model: SourceModel, g: np.ndarray) -> np.ndarray:
    return model.a @ np.linalg.inv(g)


def eta_chi(model: SourceModel, gamma, i: int, u) -> tuple[float, float]:
    """``(eta_i, chi_i)`` at the u-vector ``u``; ``u_i`` itself is ignored."""
    g = _gamma_for(model, gamma)
    u = np.asarray(u, dtype=float)
    ah = _a_hat(model, g)
    row = ah[i]
    nrm2 = float(row @ row)
    if nrm2 <= 0.0:
        raise ZeroObservationRow(f"row {i} of A Gamma^-1 is zero")
    q = householder_to_e1(row)
    gi = np.linalg.inv(g)
    prior = q.T @ gi.T @ model.sigma_x_inv @ gi @ q
    eta = float(prior[0, 0])
    for j in range(model.l):
        if j == i:
            continue
        col = ah[j] @ q
        eta += float(u[j]) * float(col[0] ** 2)
    return eta, nrm2 / float(model.noise_var[i]) + eta


def lemma3_condition(model: SourceModel, gamma, u) -> bool:
    """``1/alpha_min - 1/alpha_max <= 1/chi_i`` for every encoder ``i``."""
    g = _gamma_for(model, gamma)
    alphas = alpha_eig(model, g, np.asarray(u, dtype=float))[0]
    lhs = 1.0 / alphas[0] - 1.0 / alphas[-1]
    for i in range(model.l):
        _, chi = eta_chi(model, g, i, u)
        if lhs > 1.0 / chi:
            return False
    return True


def trace_lower(model: SourceModel, gamma) -> float:
    g = _gamma_for(model, gamma)
    return float(np.trace(g @ conditional_covariance(model) @ g.T))


def sufficient_matching(model: SourceModel, gamma, d: float) -> MatchReport:
    """Classify ``d`` against the sufficient matching window."""
    lower = trace_lower(model, gamma)
    thr = (model.k + 1) / alpha_max_star(model, gamma)
    if d <= lower + 1e-12:
        verdict = INFEASIBLE
    elif d <= thr:
        verdict = MATCHED
    else:
        verdict = UNKNOWN
    return MatchReport(lower, thr, verdict)


@dataclass(frozen=True)
class GridConfig:
    """Grid for :func:`md_condition_numeric`.

    ``per_axis`` points in each ``u_i / u_max``, geometric from ``u_floor``
    up to 1/2 and geometric in ``1 - u_i / u_max`` from 1/2 down to 1e-6,
    reduced so the tensor product stays below ``max_points``, plus
    ``random_points`` uniform draws.
    """

    per_axis: int = 32
    max_points: int = 4096
    random_points: int = 64
    u_floor: float = 1e-4
    step: float = 1e-4
    rel_tol: float = 1e-10
    seed: int = 0


@dataclass(frozen=True)
class MDResult:
    holds: bool
    r: np.ndarray | None = None
    i: int | None = None
    checked: int = 0


def _per_axis(cfg: GridConfig, l: int) -> int:
    n = cfg.per_axis
    while n > 2 and n ** l > cfg.max_points:
        n -= 1
    return n


def _axis_fractions(cfg: GridConfig, n: int) -> np.ndarray:
    # geometric towards both ends: small u and saturation u -> u_max
    lo = np.geomspace(cfg.u_floor, 0.5, (n + 1) // 2)
    hi = 1.0 - np.geomspace(0.5, 1e-6, n // 2 + 1)[1:]
    return np.concatenate([lo, hi])


def md_condition_numeric(model: SourceModel, gamma, d: float, grid: GridConfig | None = None) -> MDResult:
    """Scan for increases of ``exp(-2 r_i) * omega(Gamma, D, r)`` in each ``r_i``."""
    cfg = grid or GridConfig()
    g = _gamma_for(model, gamma)
    if d <= trace_lower(model, g) + 1e-12:
        raise InfeasibleSpec(f"D={d:.6g} does not exceed the trace lower bound")
    l = model.l
    frac = _axis_fractions(cfg, _per_axis(cfg, l))
    axes = [frac * model.u_max[i] for i in range(l)]
    points = [np.array(p) for p in product(*axes)]
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    for _ in range(cfg.random_points):
        points.append(rng.uniform(0.0, 1.0 - 1e-6, size=l) * model.u_max)
    nv = model.noise_var

    def traced(u):
        m = precision(model, u)
        return float(np.trace(g @ np.linalg.inv(m) @ g.T))

    def h(r, i):
        return np.exp(-2.0 * r[i]) * omega(model, g, d, r)

    checked = 0
    for u in points:
        if traced(u) > d:
            continue
        r = -0.5 * np.log1p(-u * nv)
        for i in range(l):
            base = h(r, i)
            r2 = r.copy()
            r2[i] += cfg.step
            try:
                nxt = h(r2, i)
            except InfeasibleAllocation:
                continue
            checked += 1
            if nxt > base * (1.0 + cfg.rel_tol):
                return MDResult(False, r, i, checked)
    return MDResult(True, None, None, checked)
