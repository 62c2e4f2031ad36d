"""Subset rate functions, feasibility, per-allocation polyhedra and sum rates.

Subsets of the ``L`` encoders are passed either as an iterable of 0-based
indices or as an ``int`` bit mask (bit ``i`` set means encoder ``i`` is in
the subset).  ``L`` is capped at 16 because every region is described by all
``2^L - 1`` subset constraints.

For a rate allocation ``r`` with u-vector ``u`` and ``M(u)`` as in
:mod:`gaussrd.gauss_model`:

* the upper function ``J_S = 1/2 log(|M(u)| prod_S e^{2 r_i} / |M(u_S = 0)|)``
  bounds the inner (achievable) polyhedron;
* the lower function ``Jlow_S(theta) = 1/2 log+(prod_S e^{2 r_i} / (theta |M(u_S = 0)|))``
  bounds the outer polyhedron when ``theta`` is a determinant budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from ._search import SearchConfig, minimize_feasible
from .errors import (
    DimensionMismatch,
    EmptySubset,
    InfeasibleSpec,
    NonpositiveTheta,
)
from .gauss_model import (
    MatrixSpec,
    RateAllocation,
    SourceModel,
    SumSpec,
    VectorSpec,
    check_spec,
    conditional_covariance,
    error_covariance,
    logdet,
    precision,
    rates_to_u,
    scaled_noise_inverse,
)
from .waterfill import omega

__all__ = [
    "RateVector",
    "SubsetFunction",
    "SumRateResult",
    "Verdict",
    "subset_mask",
    "subset_members",
    "j_lower",
    "j_upper",
    "subset_function",
    "constraint_value",
    "feasible",
    "region_nonvoid",
    "polyhedron_contains",
    "copolymatroid_violations",
    "corner_point",
    "sum_rate_inner",
    "sum_rate_outer",
    "membership_verdict",
]

MAX_L = 16
NONVOID_MARGIN = 1e-12
POLY_TOL = 1e-12

Subset = Union[int, Iterable[int]]


def subset_mask(s: Subset, l: int) -> int:
    if l > MAX_L:
        raise DimensionMismatch(f"at most {MAX_L} encoders are supported, got {l}")
    if isinstance(s, (int, np.integer)):
        mask = int(s)
        if mask < 0 or mask >= 1 << l:
            raise DimensionMismatch(f"subset mask {mask} out of range for L={l}")
        return mask
    mask = 0
    for i in s:
        i = int(i)
        if not 0 <= i < l:
            raise DimensionMismatch(f"encoder index {i} out of range for L={l}")
        mask |= 1 << i
    return mask


def subset_members(mask: int, l: int) -> list[int]:
    return [i for i in range(l) if mask >> i & 1]


def _in_mask(mask: int, l: int) -> np.ndarray:
    return np.array([bool(mask >> i & 1) for i in range(l)])


@dataclass(frozen=True)
class RateVector:
    rates: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.rates, dtype=float))
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise DimensionMismatch("rates must be finite and nonnegative")
        object.__setattr__(self, "rates", r)


@dataclass(frozen=True)
class SubsetFunction:
    """Values indexed by bit mask; ``values[0]`` is the empty set."""

    l: int
    values: np.ndarray

    def __getitem__(self, s: Subset) -> float:
        return float(self.values[subset_mask(s, self.l)])


def _rate_array(model: SourceModel, r) -> np.ndarray:
    rv = r.r if isinstance(r, RateAllocation) else RateAllocation(r).r
    if rv.shape != (model.l,):
        raise DimensionMismatch(f"rate vector must have length {model.l}")
    return rv


def _check_nonempty(mask: int) -> None:
    if mask == 0:
        raise EmptySubset("subset must be nonempty")


def _logdet_zeroed(model: SourceModel, u: np.ndarray, mask: int) -> float:
    uz = np.where(_in_mask(mask, model.l), 0.0, u)
    return logdet(precision(model, uz))


def j_lower(model: SourceModel, s: Subset, theta: float, r) -> float:
    """Outer-bound subset function ``Jlow_S(theta, r_S | r_{S^c})``."""
    mask = subset_mask(s, model.l)
    _check_nonempty(mask)
    if not theta > 0:
        raise NonpositiveTheta(f"theta must be positive, got {theta}")
    rv = _rate_array(model, r)
    u = rates_to_u(rv, model.noise_var)
    inside = _in_mask(mask, model.l)
    val = 2.0 * float(np.sum(rv[inside])) - np.log(theta) - _logdet_zeroed(model, u, mask)
    return 0.5 * max(val, 0.0)


def j_upper(model: SourceModel, s: Subset, r) -> float:
    """Inner-bound subset function ``J_S(r_S | r_{S^c})``."""
    mask = subset_mask(s, model.l)
    _check_nonempty(mask)
    rv = _rate_array(model, r)
    u = rates_to_u(rv, model.noise_var)
    inside = _in_mask(mask, model.l)
    if not np.any(rv[inside] > 0):
        return 0.0
    val = logdet(precision(model, u)) + 2.0 * float(np.sum(rv[inside])) - _logdet_zeroed(model, u, mask)
    return 0.5 * max(val, 0.0)


def subset_function(model: SourceModel, r, theta: float | None = None) -> SubsetFunction:
    """All ``2^L`` values of ``J`` (``theta=None``) or ``Jlow(theta)``.

    The empty-set entry is evaluated from the same formula rather than set to
    zero, so co-polymatroid checks can detect a nonzero ``f_empty``.
    """
    l = model.l
    subset_mask(0, l)
    rv = _rate_array(model, r)
    u = rates_to_u(rv, model.noise_var)
    full = logdet(precision(model, u))
    vals = np.empty(1 << l)
    for mask in range(1 << l):
        inside = _in_mask(mask, l)
        two_r = 2.0 * float(np.sum(rv[inside]))
        ld = full if mask == 0 else _logdet_zeroed(model, u, mask)
        if theta is None:
            vals[mask] = 0.0 if not np.any(rv[inside] > 0) else 0.5 * max(full + two_r - ld, 0.0)
        else:
            if not theta > 0:
                raise NonpositiveTheta(f"theta must be positive, got {theta}")
            vals[mask] = 0.5 * max(two_r - np.log(theta) - ld, 0.0)
    return SubsetFunction(l, vals)


# Feasibility ----------------------------------------------------------------

def _spec_tol(spec) -> float:
    if isinstance(spec, MatrixSpec):
        return 1e-9 * (1.0 + float(np.max(np.abs(spec.sigma_d))))
    return 1e-9 * (1.0 + float(np.max(np.abs(spec.d))))


def constraint_value(model: SourceModel, spec, u: np.ndarray) -> float:
    """Signed violation of the criterion at ``u``; ``<= 0`` means feasible.

    Nonincreasing in each ``u_i``.
    """
    e = error_covariance(model, u)
    if isinstance(spec, SumSpec):
        g = spec.gamma
        return float(np.trace(g @ e @ g.T)) - spec.d
    if isinstance(spec, VectorSpec):
        g = spec.gamma
        return float(np.max(np.diag(g @ e @ g.T) - spec.d))
    if isinstance(spec, MatrixSpec):
        diff = spec.sigma_d - e
        return -float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])
    raise TypeError(f"unknown distortion criterion type {type(spec).__name__}")


def feasible(model: SourceModel, spec, r) -> bool:
    """Whether the allocation meets the distortion criterion."""
    check_spec(model, spec)
    u = scaled_noise_inverse(model, r)
    return bool(constraint_value(model, spec, u) <= _spec_tol(spec))


def region_nonvoid(model: SourceModel, spec) -> bool:
    """Strict nonvoidness: the criterion holds with margin at full observation."""
    check_spec(model, spec)
    return constraint_value(model, spec, model.u_max) < -NONVOID_MARGIN


def _require_nonvoid(model, spec):
    if not region_nonvoid(model, spec):
        lower = conditional_covariance(model)
        if isinstance(spec, SumSpec):
            bound = float(np.trace(spec.gamma @ lower @ spec.gamma.T))
            raise InfeasibleSpec(f"D={spec.d:.6g} must exceed trace(Gamma Sigma_X|Y Gamma^T)={bound:.6g}")
        raise InfeasibleSpec("distortion criterion is not attainable even at full observation rates")


# Polyhedra ------------------------------------------------------------------

def polyhedron_contains(model: SourceModel, rv, r, theta: float | None = None) -> bool:
    """Check ``sum_S R_i >= f_S`` for every nonempty ``S``."""
    return bool(_max_violation(model, rv, r, theta) <= POLY_TOL)


def _max_violation(model, rv, r, theta):
    rates = rv.rates if isinstance(rv, RateVector) else RateVector(rv).rates
    if rates.shape != (model.l,):
        raise DimensionMismatch(f"rate vector must have length {model.l}")
    f = subset_function(model, r, theta)
    worst = -np.inf
    for mask in range(1, 1 << model.l):
        worst = max(worst, f.values[mask] - float(np.sum(rates[_in_mask(mask, model.l)])))
    return worst


def copolymatroid_violations(model: SourceModel, r, variant="upper", tol: float = 1e-10) -> list[tuple[int, int]]:
    """Violated co-polymatroid laws as ``(A, B)`` bit-mask pairs.

    ``variant`` is ``"upper"`` for ``J`` or a positive float ``theta`` for
    ``Jlow(theta)``.  A pair ``(0, 0)`` flags a nonzero empty-set value,
    ``(A, B)`` with ``A`` a subset of ``B`` flags a monotonicity failure, and
    any other pair a supermodularity failure.
    """
    theta = None if variant == "upper" else float(variant)
    f = subset_function(model, r, theta).values
    l = model.l
    n = 1 << l
    scale = tol * (1.0 + float(np.max(np.abs(f))))
    out: list[tuple[int, int]] = []
    if abs(f[0]) > scale:
        out.append((0, 0))
    for b in range(n):
        a = b
        while True:
            a = (a - 1) & b
            if a == b:
                break
            if f[a] > f[b] + scale:
                out.append((a, b))
            if a == 0:
                break
    for a in range(n):
        for b in range(a + 1, n):
            if (a & b) in (a, b):
                continue
            if f[a] + f[b] > f[a & b] + f[a | b] + scale:
                out.append((a, b))
    return out


def corner_point(model: SourceModel, r, order: Iterable[int], theta: float | None = None) -> np.ndarray:
    """Greedy vertex of the polyhedron for the given encoder order.

    The encoder listed first receives ``f({first}) - f(empty)``; each later
    encoder receives the marginal increase ``f(prefix + {i}) - f(prefix)``.
    """
    f = subset_function(model, r, theta).values
    order = [int(i) for i in order]
    if sorted(order) != list(range(model.l)):
        raise DimensionMismatch("order must be a permutation of the encoder indices")
    out = np.zeros(model.l)
    prefix = 0
    for i in order:
        nxt = prefix | (1 << i)
        out[i] = f[nxt] - f[prefix]
        prefix = nxt
    return out


# Sum rates ------------------------------------------------------------------

@dataclass(frozen=True)
class SumRateResult:
    value: float
    r: np.ndarray


def _constraint_fn(model, spec):
    nv = model.noise_var
    return lambda r: constraint_value(model, spec, rates_to_u(r, nv))


def _inner_objective(model):
    ld_x = -logdet(model.sigma_x_inv)
    nv = model.noise_var

    def f(r):
        return float(np.sum(r)) + 0.5 * (logdet(precision(model, rates_to_u(r, nv))) + ld_x)
    return f


def theta_upper(model: SourceModel, spec, r) -> float:
    """Valid upper bound on the determinant budget at ``r``.

    Exact for Sum and Matrix criteria.  For the vector criterion the minimum
    of the relaxed trace budget and the Hadamard bound is used.
    """
    if isinstance(spec, SumSpec):
        return omega(model, spec.gamma, spec.d, r)
    if isinstance(spec, MatrixSpec):
        return float(np.linalg.det(spec.sigma_d))
    if isinstance(spec, VectorSpec):
        g = spec.gamma
        had = float(np.prod(spec.d) / np.linalg.det(g) ** 2)
        return min(omega(model, g, float(np.sum(spec.d)), r), had)
    raise TypeError(f"unknown distortion criterion type {type(spec).__name__}")


def theta_lower(model: SourceModel, spec, r) -> float:
    """Certified lower bound on the determinant budget at ``r``.

    Exact for Sum and Matrix criteria.  For the vector criterion the feasible
    candidate ``E + Gamma^{-1} diag(slack) Gamma^{-T}`` is used.
    """
    if isinstance(spec, VectorSpec):
        u = scaled_noise_inverse(model, r)
        e = error_covariance(model, u)
        g = spec.gamma
        gi = np.linalg.inv(g)
        slack = np.maximum(spec.d - np.diag(g @ e @ g.T), 0.0)
        return float(np.linalg.det(e + gi @ np.diag(slack) @ gi.T))
    return theta_upper(model, spec, r)


def _outer_objective(model, spec):
    ld_x = -logdet(model.sigma_x_inv)

    def f(r):
        th = theta_upper(model, spec, r)
        return 0.5 * max(2.0 * float(np.sum(r)) + ld_x - np.log(th), 0.0)
    return f


def sum_rate_inner(model: SourceModel, spec, search: SearchConfig | None = None) -> SumRateResult:
    """Minimum of ``J_Lambda(r)`` over allocations meeting the criterion."""
    check_spec(model, spec)
    _require_nonvoid(model, spec)
    res = minimize_feasible(_inner_objective(model), _constraint_fn(model, spec), model.l,
                            "boundary", search)
    return SumRateResult(max(res.value, 0.0), res.r)


def sum_rate_outer(model: SourceModel, spec, search: SearchConfig | None = None) -> SumRateResult:
    """Minimum of ``Jlow_Lambda(theta(r), r)`` over allocations meeting the criterion.

    For the vector criterion ``theta`` is replaced by an upper bound, which
    keeps the result a valid lower bound on the sum rate.
    """
    check_spec(model, spec)
    _require_nonvoid(model, spec)
    res = minimize_feasible(_outer_objective(model, spec), _constraint_fn(model, spec), model.l,
                            "boundary", search)
    return SumRateResult(max(res.value, 0.0), res.r)


# Membership -----------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Outcome of :func:`membership_verdict`.

    ``kind`` is one of ``"InnerCertified"``, ``"OuterCertified"``,
    ``"ExcludedHeuristic"`` or ``"Undetermined"``.  ``inner``/``outer``
    record which certificates were found; an inner certificate implies the
    outer one.  ``ExcludedHeuristic`` is not a proof: it only reports that
    local search found no allocation placing the rates in the outer region.
    """

    kind: str
    r: np.ndarray | None = None
    theta: float | None = None
    margin: float | None = None
    inner: bool = False
    outer: bool = False
    certifying: bool = field(default=True)


def membership_verdict(model: SourceModel, rv, spec, search: SearchConfig | None = None) -> Verdict:
    """Classify a rate vector against the inner and outer regions."""
    check_spec(model, spec)
    rates = rv.rates if isinstance(rv, RateVector) else RateVector(rv).rates
    if rates.shape != (model.l,):
        raise DimensionMismatch(f"rate vector must have length {model.l}")
    if not region_nonvoid(model, spec):
        return Verdict("ExcludedHeuristic", margin=float("inf"), certifying=True)
    g = _constraint_fn(model, spec)

    inner_obj = lambda r: _max_violation(model, rates, r, None)
    res = minimize_feasible(inner_obj, g, model.l, "full", search, target=0.0)
    if res.value <= POLY_TOL:
        return Verdict("InnerCertified", r=res.r, inner=True, outer=True,
                       theta=theta_lower(model, spec, res.r))

    lower_obj = lambda r: _max_violation(model, rates, r, theta_lower(model, spec, r))
    res = minimize_feasible(lower_obj, g, model.l, "full", search, target=0.0)
    if res.value <= POLY_TOL:
        return Verdict("OuterCertified", r=res.r, theta=theta_lower(model, spec, res.r), outer=True)

    upper_obj = lambda r: _max_violation(model, rates, r, theta_upper(model, spec, r))
    res = minimize_feasible(upper_obj, g, model.l, "full", search, target=0.0)
    if res.value > 1e-9:
        return Verdict("ExcludedHeuristic", r=res.r, margin=float(res.value), certifying=False)
    return Verdict("Undetermined", r=res.r, margin=float(res.value), certifying=False)
