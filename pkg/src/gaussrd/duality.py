"""Multiterminal (direct) problems and their exact remote equivalents.

A direct model observes ``Y = X + N`` with diagonal noise and asks for
``Y`` itself.  Writing ``X = A~ Y + N~`` with

    A~ = (Sigma_X^{-1} + Sigma_N^{-1})^{-1} Sigma_N^{-1},
    Sigma_N~ = (Sigma_X^{-1} + Sigma_N^{-1})^{-1},
    B = Sigma_N + Sigma_N Sigma_X^{-1} Sigma_N = A~^{-1} Sigma_N~ A~^{-T},

an error covariance ``E_Y`` for ``Y`` corresponds to ``A~ (E_Y + B) A~^T``
for ``X``.  Every direct criterion therefore maps to a remote criterion on
the model ``(Sigma_X, A = I, noise_var)`` with identical rate regions.

Test channels on the direct side are ``U_i = Y_i + V_i`` with
``Var V_i = noise_var_i / (e^{2 r_i} - 1)``; as on the remote side they are
handled through the precision ``W_i = (e^{2 r_i} - 1) / noise_var_i`` so a
zero rate never produces an infinite variance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from ._search import SearchConfig, minimize_feasible
from .errors import (
    DimensionMismatch,
    EmptySubset,
    HiddenSourceNotPD,
    InvalidInput,
    NonpositiveTheta,
    NumericalFailure,
    SpecDimensionMismatch,
)
from .gauss_model import (
    MatrixSpec,
    RateAllocation,
    SourceModel,
    SumSpec,
    VectorSpec,
    _as_matrix,
    _check_pd,
    _check_symmetric,
    _gamma_matrix,
    logdet,
    make_model,
)
from .matching import MATCHED, UNKNOWN, INFEASIBLE, MatchReport
from .rate_region import SumRateResult, _in_mask, subset_mask

__all__ = [
    "DirectModel",
    "DualityMatrices",
    "CorollaryReport",
    "make_direct",
    "duality_matrices",
    "remote_model",
    "convert_spec",
    "invert_spec",
    "tilde_j",
    "direct_error_covariance",
    "direct_feasible",
    "direct_sum_rate",
    "corollary_path",
    "matching_direct",
]


@dataclass(frozen=True, eq=False)
class DirectModel:
    """``Y = X + N`` with hidden covariance ``sigma_x`` and diagonal noise."""

    l: int
    sigma_x: np.ndarray
    noise_var: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma_x", _as_matrix(self.sigma_x, "sigma_x"))
        object.__setattr__(self, "noise_var", np.atleast_1d(np.asarray(self.noise_var, dtype=float)))
        object.__setattr__(self, "l", int(self.l))

    @cached_property
    def sigma_y(self) -> np.ndarray:
        return self.sigma_x + np.diag(self.noise_var)

    @cached_property
    def sigma_y_inv(self) -> np.ndarray:
        inv = np.linalg.inv(self.sigma_y)
        return 0.5 * (inv + inv.T)

    def __repr__(self) -> str:
        return f"DirectModel(l={self.l})"


def make_direct(sigma_x, noise) -> DirectModel:
    """Validated :class:`DirectModel`.

    ``noise`` may be a vector of variances or a covariance matrix; a matrix
    with off-diagonal entries is rejected because the construction needs
    independent noise.
    """
    sx = _as_matrix(sigma_x, "sigma_x")
    n = np.asarray(noise, dtype=float)
    if n.ndim == 2:
        if np.any(np.abs(n - np.diag(np.diag(n))) > 0):
            raise InvalidInput("noise covariance must be diagonal")
        n = np.diag(n)
    n = np.atleast_1d(n)
    l = sx.shape[0]
    if n.shape != (l,):
        raise DimensionMismatch(f"noise must have length {l}, got {n.shape[0]}")
    # reuse the remote validator for symmetry, PD and positive noise
    make_model(sx, np.eye(l), n)
    return DirectModel(l, sx, n)


def remote_model(dm: DirectModel) -> SourceModel:
    """The equivalent remote model ``(Sigma_X, A = I, noise_var)``."""
    return make_model(dm.sigma_x, np.eye(dm.l), dm.noise_var)


@dataclass(frozen=True, eq=False)
class DualityMatrices:
    a_tilde: np.ndarray
    b: np.ndarray
    b_diag: np.ndarray
    b_tilde: np.ndarray
    b_tilde_diag: np.ndarray
    sigma_n_tilde: np.ndarray


def _core(dm: DirectModel):
    sx_inv = np.linalg.inv(dm.sigma_x)
    sn = np.diag(dm.noise_var)
    sn_inv = np.diag(1.0 / dm.noise_var)
    snt = np.linalg.inv(sx_inv + sn_inv)
    snt = 0.5 * (snt + snt.T)
    at = snt @ sn_inv
    b = sn + sn @ sx_inv @ sn
    return at, 0.5 * (b + b.T), snt


def duality_matrices(dm: DirectModel, gamma=None) -> DualityMatrices:
    """``A~``, ``B`` and ``B~ = Gamma B Gamma^T`` (``gamma`` defaults to I)."""
    g = np.eye(dm.l) if gamma is None else _gamma_matrix(gamma)
    if g.shape[0] != dm.l:
        raise SpecDimensionMismatch(f"gamma is {g.shape[0]}x{g.shape[0]}, model has L={dm.l}")
    at, b, snt = _core(dm)
    ati = np.linalg.inv(at)
    b2 = ati @ snt @ ati.T
    if np.max(np.abs(b - b2)) > 1e-10 * (1.0 + np.max(np.abs(b))):
        raise NumericalFailure("the two expressions for B disagree beyond 1e-10")
    bt = g @ b @ g.T
    bt = 0.5 * (bt + bt.T)
    return DualityMatrices(at, b, np.diag(b).copy(), bt, np.diag(bt).copy(), snt)


def convert_spec(dm: DirectModel, spec):
    """Map a direct criterion to ``(remote model, remote criterion)``.

    ``Sigma_d -> A~ (Sigma_d + B) A~^T``; ``(Gamma, D^L) -> (Gamma A~^{-1}, D^L + diag(Gamma B Gamma^T))``;
    ``(Gamma, D) -> (Gamma A~^{-1}, D + trace(Gamma B Gamma^T))``.
    """
    model = remote_model(dm)
    at, b, _ = _core(dm)
    if isinstance(spec, MatrixSpec):
        if spec.k != dm.l:
            raise SpecDimensionMismatch(f"spec has dimension {spec.k}, model has L={dm.l}")
        return model, MatrixSpec(at @ (spec.sigma_d + b) @ at.T)
    if spec.k != dm.l:
        raise SpecDimensionMismatch(f"spec has dimension {spec.k}, model has L={dm.l}")
    g = spec.gamma
    gp = g @ np.linalg.inv(at)
    bt = g @ b @ g.T
    if isinstance(spec, VectorSpec):
        return model, VectorSpec(gp, spec.d + np.diag(bt))
    if isinstance(spec, SumSpec):
        return model, SumSpec(gp, spec.d + float(np.trace(bt)))
    raise TypeError(f"unknown distortion criterion type {type(spec).__name__}")


def invert_spec(dm: DirectModel, spec):
    """Inverse of :func:`convert_spec` for a remote criterion on ``remote_model(dm)``."""
    at, b, _ = _core(dm)
    ati = np.linalg.inv(at)
    if isinstance(spec, MatrixSpec):
        return MatrixSpec(ati @ spec.sigma_d @ ati.T - b)
    g = spec.gamma @ at
    bt = g @ b @ g.T
    if isinstance(spec, VectorSpec):
        return VectorSpec(g, spec.d - np.diag(bt))
    if isinstance(spec, SumSpec):
        return SumSpec(g, spec.d - float(np.trace(bt)))
    raise TypeError(f"unknown distortion criterion type {type(spec).__name__}")


def _w(dm: DirectModel, r: np.ndarray) -> np.ndarray:
    return np.expm1(2.0 * r) / dm.noise_var


def _rates(dm: DirectModel, r) -> np.ndarray:
    rv = r.r if isinstance(r, RateAllocation) else RateAllocation(r).r
    if rv.shape != (dm.l,):
        raise DimensionMismatch(f"rate vector must have length {dm.l}")
    return rv


def tilde_j(dm: DirectModel, s, r, theta: float | None = None) -> float:
    """Direct-domain subset functions.

    With ``theta=None`` returns ``1/2 log(|Sigma_Y^{-1} + W| / |Sigma_Y^{-1} + W_{S^c}|)``;
    with ``theta`` (a value of ``|Sigma_d + B|``) returns the lower variant
    ``1/2 log+(|Sigma_Y + B| prod_i e^{2 r_i} / (theta |Sigma_Y| |Sigma_Y^{-1} + W_{S^c}|))``
    where the product runs over all encoders.
    """
    mask = subset_mask(s, dm.l)
    if mask == 0:
        raise EmptySubset("subset must be nonempty")
    rv = _rates(dm, r)
    w = _w(dm, rv)
    inside = _in_mask(mask, dm.l)
    wc = np.where(inside, 0.0, w)
    ld_c = logdet(dm.sigma_y_inv + np.diag(wc))
    if theta is None:
        if not np.any(rv[inside] > 0):
            return 0.0
        return 0.5 * max(logdet(dm.sigma_y_inv + np.diag(w)) - ld_c, 0.0)
    if not theta > 0:
        raise NonpositiveTheta(f"theta must be positive, got {theta}")
    _, b, _ = _core(dm)
    val = (logdet(dm.sigma_y + b) + 2.0 * float(np.sum(rv)) - np.log(theta)
           - logdet(dm.sigma_y) - ld_c)
    return 0.5 * max(val, 0.0)


def direct_error_covariance(dm: DirectModel, r) -> np.ndarray:
    """``(Sigma_Y^{-1} + W)^{-1}``: error covariance of ``Y`` given the test channels."""
    e = np.linalg.inv(dm.sigma_y_inv + np.diag(_w(dm, _rates(dm, r))))
    return 0.5 * (e + e.T)


def _direct_violation(dm: DirectModel, spec, r: np.ndarray) -> float:
    e = np.linalg.inv(dm.sigma_y_inv + np.diag(_w(dm, r)))
    if isinstance(spec, SumSpec):
        return float(np.trace(spec.gamma @ e @ spec.gamma.T)) - spec.d
    if isinstance(spec, VectorSpec):
        return float(np.max(np.diag(spec.gamma @ e @ spec.gamma.T) - spec.d))
    if isinstance(spec, MatrixSpec):
        diff = spec.sigma_d - e
        return -float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])
    raise TypeError(f"unknown distortion criterion type {type(spec).__name__}")


def direct_feasible(dm: DirectModel, spec, r) -> bool:
    """Feasibility of ``r`` for a criterion on ``Y``."""
    if spec.k != dm.l:
        raise SpecDimensionMismatch(f"spec has dimension {spec.k}, model has L={dm.l}")
    scale = spec.sigma_d if isinstance(spec, MatrixSpec) else spec.d
    tol = 1e-9 * (1.0 + float(np.max(np.abs(scale))))
    return bool(_direct_violation(dm, spec, _rates(dm, r)) <= tol)


def direct_sum_rate(dm: DirectModel, spec, search: SearchConfig | None = None) -> SumRateResult:
    """Minimum of the direct-domain ``J~_Lambda`` over direct-feasible allocations.

    Runs entirely in the ``Y`` domain, independently of :func:`convert_spec`.
    """
    if spec.k != dm.l:
        raise SpecDimensionMismatch(f"spec has dimension {spec.k}, model has L={dm.l}")
    base = logdet(dm.sigma_y_inv)

    def f(r):
        return 0.5 * (logdet(dm.sigma_y_inv + np.diag(_w(dm, r))) - base)

    res = minimize_feasible(f, lambda r: _direct_violation(dm, spec, r), dm.l, "boundary", search)
    return SumRateResult(max(res.value, 0.0), res.r)


@dataclass(frozen=True, eq=False)
class CorollaryReport:
    """Diagonal-Gamma sufficient condition evaluated for one ``delta``.

    ``bound = delta - delta^2 / lambda_min`` where ``lambda_min`` is the
    smallest eigenvalue of the hidden covariance left after removing the
    noise ``delta * Gamma^{-2}``; ``best_bound = lambda_min / 4`` is the value
    at ``delta = lambda_min / 2`` for that hidden covariance.
    ``theorem_threshold`` is the exact direct matching threshold of the
    constructed model, which is never below ``bound``.
    """

    delta: float
    gamma: np.ndarray
    noise_var: np.ndarray
    sigma_x: np.ndarray
    lambda_min: float
    bound: float
    best_bound: float
    theorem_threshold: float


def _normalized_diag_gamma(gamma, l: int) -> np.ndarray:
    g = _gamma_matrix(gamma)
    if g.shape[0] != l:
        raise SpecDimensionMismatch(f"gamma is {g.shape[0]}x{g.shape[0]}, need {l}x{l}")
    if np.any(np.abs(g - np.diag(np.diag(g))) > 0):
        raise InvalidInput("the corollary needs a diagonal gamma")
    d = np.diag(g)
    return np.diag(d * np.sqrt(np.sum(d ** -2.0)))


def _direct_threshold(dm: DirectModel, gamma) -> tuple[float, float]:
    mats = duality_matrices(dm, gamma)
    mu = float(np.linalg.eigvalsh(mats.b_tilde)[0])
    return mu, (dm.l + 1) * mu - float(np.trace(mats.b_tilde))


def corollary_path(sigma_y, gamma, delta: float) -> CorollaryReport:
    """Split ``Sigma_Y`` into ``Sigma_X + delta Gamma^{-2}`` and evaluate the bound.

    ``gamma`` is rescaled so that ``sum_i gamma_i^{-2} = 1``.  Raises
    :class:`HiddenSourceNotPD` when the remaining hidden covariance is not
    positive definite.
    """
    sy = _as_matrix(sigma_y, "sigma_y")
    _check_symmetric(sy, "sigma_y")
    _check_pd(sy, "sigma_y")
    l = sy.shape[0]
    g = _normalized_diag_gamma(gamma, l)
    if not delta > 0:
        raise InvalidInput("delta must be positive")
    nv = delta / np.diag(g) ** 2
    sx = sy - np.diag(nv)
    lam = np.linalg.eigvalsh(0.5 * (sx + sx.T))
    if lam[0] <= 1e-12 * (1.0 + float(np.max(np.abs(sy)))):
        raise HiddenSourceNotPD(f"Sigma_Y - delta Gamma^-2 has smallest eigenvalue {lam[0]:.3g}")
    lmin = float(lam[0])
    dm = make_direct(sx, nv)
    _, thr = _direct_threshold(dm, g)
    return CorollaryReport(float(delta), g, nv, sx, lmin, float(delta - delta ** 2 / lmin), lmin / 4.0, thr)


def matching_direct(dm: DirectModel, gamma, d: float, delta: float | None = None) -> MatchReport:
    """Direct sufficient matching test ``0 < D <= (L+1) mu*_min - trace(B~)``.

    ``mu*_min`` is the smallest eigenvalue of ``B~ = Gamma B Gamma^T``.  With
    ``delta`` given, the diagonal-Gamma corollary is evaluated on ``Sigma_Y``
    of ``dm`` and attached as ``corollary``.
    """
    _, thr = _direct_threshold(dm, gamma)
    if not d > 0:
        verdict = INFEASIBLE
    elif d <= thr:
        verdict = MATCHED
    else:
        verdict = UNKNOWN
    report = MatchReport(0.0, thr, verdict)
    if delta is not None:
        report = replace(report, corollary=corollary_path(dm.sigma_y, gamma, delta))
    return report
