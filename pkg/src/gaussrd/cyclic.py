"""Sum rate of cyclic-shift-invariant direct problems.

For a circulant hidden covariance with eigenvalues ``lambda_i`` and i.i.d.
noise of variance ``eps``, every matrix in the direct-to-remote conversion
is diagonal in the same Fourier basis.  With ``c_i = lambda_i / (lambda_i + eps)``
and a common rate ``r`` per encoder:

    beta_i(r) = (c_i - c_i^2 e^{-2r}) / eps,        zeta(r) = sum_i 1 / beta_i(r),
    trace(B)  = L eps + eps^2 sum_i 1 / lambda_i,   |Sigma_Y + B| = prod_i (lambda_i + eps)^2 / lambda_i.

The lower bound on the sum rate at distortion ``D`` minimizes
``1/2 log(e^{2 L r} |Sigma_Y + B| / omega~(D, r))`` over ``r >= r*``, where
``omega~`` water-fills the levels ``1 / beta_i`` to the budget ``D + trace(B)``
and ``zeta(r*) = D + trace(B)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .duality import DirectModel
from .errors import DistortionNotPositive, InfeasibleSpec, NotCyclic
from .waterfill import water_level

__all__ = [
    "CyclicInstance",
    "CyclicSumRate",
    "cyclic_instance",
    "beta_spectrum",
    "zeta",
    "trace_b",
    "logdet_sy_plus_b",
    "r_star",
    "j_lower_cyclic",
    "sum_rate_lower_cyclic",
    "parametric_curve",
    "monotonicity_conditions",
]

R_CAP = 0.5 * np.log(1e8)
CIRCULANT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CyclicInstance:
    dm: DirectModel
    lam: np.ndarray
    epsilon: float

    @property
    def l(self) -> int:
        return self.dm.l

    @property
    def c(self) -> np.ndarray:
        return self.lam / (self.lam + self.epsilon)


def cyclic_instance(dm: DirectModel) -> CyclicInstance:
    """Check the circulant structure and equal noise, then cache the spectrum."""
    sx = dm.sigma_x
    first = sx[0]
    for i in range(1, dm.l):
        if np.max(np.abs(sx[i] - np.roll(first, i))) > CIRCULANT_TOL:
            raise NotCyclic(f"row {i} of sigma_x is not a cyclic shift of row 0")
    nv = dm.noise_var
    if np.max(np.abs(nv - nv[0])) > CIRCULANT_TOL * (1.0 + abs(nv[0])):
        raise NotCyclic("noise variances must all be equal")
    lam = np.sort(np.linalg.eigvalsh(sx))[::-1].copy()
    return CyclicInstance(dm, lam, float(nv[0]))


def beta_spectrum(inst: CyclicInstance, r: float) -> np.ndarray:
    c = inst.c
    return (c - c * c * np.exp(-2.0 * r)) / inst.epsilon


def zeta(inst: CyclicInstance, r: float) -> float:
    return float(np.sum(1.0 / beta_spectrum(inst, r)))


def trace_b(inst: CyclicInstance) -> float:
    eps = inst.epsilon
    return float(inst.l * eps + eps * eps * np.sum(1.0 / inst.lam))


def logdet_sy_plus_b(inst: CyclicInstance) -> float:
    lam = inst.lam
    return float(np.sum(2.0 * np.log(lam + inst.epsilon) - np.log(lam)))


def r_star(inst: CyclicInstance, d_total: float) -> float:
    """Unique ``r`` with ``zeta(r) = d_total``; 0 once ``d_total >= zeta(0)``."""
    tb = trace_b(inst)
    if d_total <= tb:
        raise DistortionNotPositive(f"budget {d_total:.6g} leaves no distortion above trace(B)={tb:.6g}")
    if d_total >= zeta(inst, 0.0):
        return 0.0
    # zeta is monotone in x = e^{-2r} on (0, 1]
    c, eps = inst.c, inst.epsilon
    f = lambda x: float(np.sum(eps / (c - c * c * x))) - d_total
    x = brentq(f, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return max(float(-0.5 * np.log(x)), 0.0) if x > 0 else float("inf")


def j_lower_cyclic(inst: CyclicInstance, d: float, r: float) -> float:
    """``1/2 [2 L r + log|Sigma_Y + B| - log omega~(D, r)]``; requires ``r >= r*``."""
    b = beta_spectrum(inst, r)
    ws = water_level(b, d + trace_b(inst))
    return 0.5 * (2.0 * inst.l * r + logdet_sy_plus_b(inst) - float(np.sum(np.log(ws.levels))))


@dataclass(frozen=True)
class CyclicSumRate:
    """``value`` is a lower bound on the sum rate; it equals the sum rate
    when ``lemma_b_holds`` (checked on the scan grid) is true.
    ``exceeds_cap`` flags ``r* > r_cap`` (value reported as infinity)."""

    value: float
    r: float
    r_star: float
    exceeds_cap: bool
    lemma_b_holds: bool


def sum_rate_lower_cyclic(inst: CyclicInstance, d: float, scan: int = 400,
                          r_cap: float = R_CAP) -> CyclicSumRate:
    """Minimize the cyclic lower-bound objective over ``r in [r*, r_cap]``."""
    if not d > 0:
        raise InfeasibleSpec(f"distortion must be positive, got {d}")
    rs = r_star(inst, d + trace_b(inst))
    if not rs <= r_cap:
        return CyclicSumRate(float("inf"), float(rs), float(rs), True, False)
    span = r_cap - rs
    grid = rs + span * np.concatenate([[0.0], np.geomspace(1e-9, 1.0, scan - 1)])
    vals = np.array([j_lower_cyclic(inst, d, r) for r in grid])
    j = int(np.argmin(vals))
    best_r, best_v = float(grid[j]), float(vals[j])
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda r: j_lower_cyclic(inst, d, r), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        if res.fun < best_v:
            best_r, best_v = float(res.x), float(res.fun)
    holds = all(monotonicity_conditions(inst, r)[0] for r in grid)
    return CyclicSumRate(max(best_v, 0.0), best_r, float(rs), False, bool(holds))


def parametric_curve(inst: CyclicInstance, r: float) -> tuple[float, float]:
    """``(R, D)`` with ``R = 1/2 log(|Sigma_Y + B| e^{2 L r} prod beta_i)`` and ``D = zeta(r) - trace(B)``."""
    b = beta_spectrum(inst, r)
    rate = 0.5 * (logdet_sy_plus_b(inst) + 2.0 * inst.l * r + float(np.sum(np.log(b))))
    return max(rate, 0.0), float(np.sum(1.0 / b)) - trace_b(inst)


def monotonicity_conditions(inst: CyclicInstance, r: float) -> tuple[bool, bool]:
    """``(lemma_b, lemma_c)`` sufficient conditions at common rate ``r``.

    ``i0`` and ``i1`` index the smallest and largest ``beta_i(r)``.
    lemma_b: ``beta_i1 - beta_i0 <= eps e^{2r} L/(L-1) ((lmax+eps)/lmax)^2 beta_i0^2``.
    lemma_c: ``c_i1 - c_i0 <= 4L/(L-1) ((lmax+eps)/lmax)^2 c_i0^2 c_i1`` (free of ``r``
    apart from the choice of indices).
    """
    l = inst.l
    if l == 1:
        return True, True
    b = beta_spectrum(inst, r)
    i0, i1 = int(np.argmin(b)), int(np.argmax(b))
    eps = inst.epsilon
    lmax = float(np.max(inst.lam))
    k = l / (l - 1) * ((lmax + eps) / lmax) ** 2
    lemma_b = b[i1] - b[i0] <= eps * np.exp(2.0 * r) * k * b[i0] ** 2
    c = inst.c
    lemma_c = c[i1] - c[i0] <= 4.0 * k * c[i0] ** 2 * c[i1]
    return bool(lemma_b), bool(lemma_c)
