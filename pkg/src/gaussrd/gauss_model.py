"""Problem instances and covariance algebra for the remote Gaussian problem.

A hidden Gaussian vector X of dimension K is observed by L encoders through
``Y = A X + N`` with independent noise ``N_i ~ N(0, noise_var[i])``.  A rate
allocation ``r`` parameterizes Gaussian test channels; every formula works
with the precision-domain view

    M(u) = Sigma_X^{-1} + A^T diag(u) A,     u_i = (1 - exp(-2 r_i)) / noise_var[i],

so that a zero rate is represented by ``u_i = 0`` and never by an infinite
variance.  All rates are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatch,
    NegativeRate,
    NonpositiveDistortion,
    NonpositiveNoise,
    NonSymmetric,
    NotPositiveDefinite,
    SingularGamma,
    SpecDimensionMismatch,
)

__all__ = [
    "SourceModel",
    "RateAllocation",
    "MatrixSpec",
    "VectorSpec",
    "SumSpec",
    "DistortionSpec",
    "validate_model",
    "make_model",
    "conditional_covariance",
    "scaled_noise_inverse",
    "rates_to_u",
    "precision",
    "psd_order_leq",
    "default_tol",
    "logdet",
]

SYM_TOL = 1e-10
PD_RTOL = 1e-13


def default_tol(*mats: np.ndarray) -> float:
    """Scale-aware tolerance ``1e-9 * (1 + max|entry|)``."""
    scale = max((float(np.max(np.abs(m))) if np.size(m) else 0.0) for m in mats) if mats else 0.0
    return 1e-9 * (1.0 + scale)


def logdet(m: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(m)
    if sign <= 0:
        raise NotPositiveDefinite("matrix is not positive definite (log-determinant undefined)")
    return float(val)


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def _check_symmetric(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=SYM_TOL * (1.0 + np.max(np.abs(m)))):
        raise NonSymmetric(f"{name} is not symmetric")


def _check_pd(m: np.ndarray, name: str) -> None:
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    # relative to the spectrum so tiny but well-conditioned matrices pass
    if lam[0] <= PD_RTOL * max(abs(float(lam[-1])), np.finfo(float).tiny):
        raise NotPositiveDefinite(f"{name} is not positive definite (smallest eigenvalue {lam[0]:.3g})")


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Remote source model ``Y = A X + N``.

    Construct through :func:`make_model` or call :func:`validate_model` on a
    hand-built instance; the constructor only coerces arrays.
    """

    k: int
    l: int
    sigma_x: np.ndarray
    a: np.ndarray
    noise_var: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma_x", _as_matrix(self.sigma_x, "sigma_x"))
        object.__setattr__(self, "a", _as_matrix(self.a, "a"))
        object.__setattr__(self, "noise_var", np.atleast_1d(np.asarray(self.noise_var, dtype=float)))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "l", int(self.l))

    @cached_property
    def sigma_x_inv(self) -> np.ndarray:
        inv = np.linalg.inv(self.sigma_x)
        return 0.5 * (inv + inv.T)

    @cached_property
    def u_max(self) -> np.ndarray:
        """Full-observation precisions ``1 / noise_var``."""
        return 1.0 / self.noise_var

    def __repr__(self) -> str:
        return f"SourceModel(k={self.k}, l={self.l})"


def validate_model(model: SourceModel) -> SourceModel:
    """Check every structural invariant and return the model unchanged."""
    k, l = model.k, model.l
    if k < 1 or l < 1:
        raise DimensionMismatch(f"k and l must be positive, got k={k}, l={l}")
    if model.sigma_x.shape != (k, k):
        raise DimensionMismatch(f"sigma_x must be {k}x{k}, got {model.sigma_x.shape}")
    if model.a.shape != (l, k):
        raise DimensionMismatch(f"a must be {l}x{k} (L rows, K columns), got {model.a.shape}")
    if model.noise_var.shape != (l,):
        raise DimensionMismatch(f"noise_var must have length {l}, got {model.noise_var.shape[0]}")
    if not (np.all(np.isfinite(model.sigma_x)) and np.all(np.isfinite(model.a))
            and np.all(np.isfinite(model.noise_var))):
        raise DimensionMismatch("model entries must be finite")
    _check_symmetric(model.sigma_x, "sigma_x")
    _check_pd(model.sigma_x, "sigma_x")
    if np.any(model.noise_var <= 0):
        raise NonpositiveNoise("noise_var entries must be strictly positive")
    return model


def make_model(sigma_x, a, noise_var) -> SourceModel:
    """Build and validate a :class:`SourceModel`, inferring ``k`` and ``l``."""
    sx = _as_matrix(sigma_x, "sigma_x")
    am = np.asarray(a, dtype=float)
    if am.ndim == 1:
        # a single column when K=1, otherwise a single observation row
        am = am.reshape(-1, 1) if sx.shape[0] == 1 else am.reshape(1, -1)
    nv = np.atleast_1d(np.asarray(noise_var, dtype=float))
    return validate_model(SourceModel(sx.shape[0], am.shape[0], sx, am, nv))


@dataclass(frozen=True)
class RateAllocation:
    """Nonnegative per-encoder rate parameters in nats."""

    r: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if not np.all(np.isfinite(r)):
            raise NegativeRate("rates must be finite")
        if np.any(r < 0):
            raise NegativeRate(f"rates must be nonnegative, got {r.tolist()}")
        object.__setattr__(self, "r", r)

    def u(self, model: SourceModel) -> np.ndarray:
        return scaled_noise_inverse(model, self)


def _rates(r) -> np.ndarray:
    if isinstance(r, RateAllocation):
        return r.r
    return RateAllocation(r).r


def rates_to_u(r: np.ndarray, noise_var: np.ndarray) -> np.ndarray:
    """Unchecked ``-expm1(-2r) / noise_var``; exact zero at ``r = 0``."""
    return -np.expm1(-2.0 * np.asarray(r, dtype=float)) / noise_var


def scaled_noise_inverse(model: SourceModel, r) -> np.ndarray:
    """Diagonal of the inverse rate-scaled noise covariance (the u-vector)."""
    rv = _rates(r)
    if rv.shape != (model.l,):
        raise DimensionMismatch(f"rate vector must have length {model.l}, got {rv.shape[0]}")
    return rates_to_u(rv, model.noise_var)


def precision(model: SourceModel, u: np.ndarray) -> np.ndarray:
    """``Sigma_X^{-1} + A^T diag(u) A``."""
    m = model.sigma_x_inv + model.a.T @ (np.asarray(u, dtype=float)[:, None] * model.a)
    return 0.5 * (m + m.T)


def error_covariance(model: SourceModel, u: np.ndarray) -> np.ndarray:
    e = np.linalg.inv(precision(model, u))
    return 0.5 * (e + e.T)


def conditional_covariance(model: SourceModel) -> np.ndarray:
    """Posterior covariance of X given all observations."""
    return error_covariance(model, model.u_max)


def psd_order_leq(m1, m2, tol: float | None = None) -> bool:
    """Loewner order test ``m1 <= m2``: smallest eigenvalue of ``m2 - m1`` is at least ``-tol``."""
    a = np.atleast_2d(np.asarray(m1, dtype=float))
    b = np.atleast_2d(np.asarray(m2, dtype=float))
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} are not equal square")
    if tol is None:
        tol = default_tol(a, b)
    diff = b - a
    return bool(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0] >= -tol)


# Distortion criteria --------------------------------------------------------

def _gamma_matrix(gamma, k: int | None = None) -> np.ndarray:
    g = _as_matrix(gamma, "gamma")
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"gamma must be square, got {g.shape}")
    if abs(np.linalg.det(g)) <= 1e-12 * max(1.0, float(np.max(np.abs(g)))) ** g.shape[0]:
        raise SingularGamma("gamma is singular")
    return g


@dataclass(frozen=True, eq=False)
class MatrixSpec:
    """Matrix criterion: error covariance must satisfy ``E <= sigma_d``."""

    sigma_d: np.ndarray

    def __post_init__(self):
        s = _as_matrix(self.sigma_d, "sigma_d")
        _check_symmetric(s, "sigma_d")
        _check_pd(s, "sigma_d")
        object.__setattr__(self, "sigma_d", s)

    @property
    def k(self) -> int:
        return self.sigma_d.shape[0]


@dataclass(frozen=True, eq=False)
class VectorSpec:
    """Vector criterion: ``diag(Gamma E Gamma^T) <= d`` entrywise."""

    gamma: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        g = _gamma_matrix(self.gamma)
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if d.shape != (g.shape[0],):
            raise SpecDimensionMismatch(f"d must have length {g.shape[0]}, got {d.shape[0]}")
        if np.any(d <= 0):
            raise NonpositiveDistortion("distortion levels must be positive")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "d", d)

    @property
    def k(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True, eq=False)
class SumSpec:
    """Sum criterion: ``trace(Gamma E Gamma^T) <= d``."""

    gamma: np.ndarray
    d: float

    def __post_init__(self):
        g = _gamma_matrix(self.gamma)
        d = float(self.d)
        if not d > 0:
            raise NonpositiveDistortion("distortion level must be positive")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "d", d)

    @property
    def k(self) -> int:
        return self.gamma.shape[0]


DistortionSpec = Union[MatrixSpec, VectorSpec, SumSpec]


def check_spec(model: SourceModel, spec: DistortionSpec) -> None:
    if spec.k != model.k:
        raise SpecDimensionMismatch(f"spec has dimension {spec.k}, model has K={model.k}")
