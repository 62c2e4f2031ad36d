"""Multistart local search over a monotone feasible set of rate allocations.

The feasible sets met in this package all have the form ``{r >= 0 : g(r) <= 0}``
with ``g`` nonincreasing in every coordinate (more rate never hurts the
distortion).  The search works in ``t = 1 - exp(-2r)``, which maps
``[0, r_max]`` onto a box ``[0, t_max]`` and makes the precision matrix affine
in ``t``.

Two modes are provided.

``boundary``
    For objectives that are nondecreasing in each rate the optimum sits on
    the lower boundary of the feasible set (or at ``r = 0``).  Each boundary
    point is the crossing of a ray ``s * w`` from the origin, so the search
    runs over directions ``w`` on the simplex: a bounded scalar search when
    ``L = 2``, Nelder-Mead on hyperspherical angles when ``L >= 3``.
``full``
    General objectives.  Points of the box that violate the constraint are
    pulled back along the segment towards the all-``t_max`` anchor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.stats import qmc

from .errors import InfeasibleSpec

R_MAX = 0.5 * np.log(1e6)
T_MAX = -np.expm1(-2.0 * R_MAX)


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for :func:`minimize_feasible`.

    ``starts`` deterministic low-discrepancy starts are evaluated; local
    refinement runs from the ``refine`` best of them, then once more from the
    overall best point.
    """

    starts: int = 16
    refine: int = 4
    xatol: float = 1e-10
    fatol: float = 1e-13
    maxiter: int = 4000


@dataclass(frozen=True)
class SearchResult:
    value: float
    r: np.ndarray


class _Target(Exception):
    def __init__(self, value, t):
        self.value = value
        self.t = t


def t_to_r(t: np.ndarray) -> np.ndarray:
    return -0.5 * np.log1p(-np.asarray(t, dtype=float))


def r_to_t(r: np.ndarray) -> np.ndarray:
    return -np.expm1(-2.0 * np.asarray(r, dtype=float))


def _halton(dim: int, n: int) -> np.ndarray:
    # unscrambled, skip the all-zero first point
    return qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]


def _angles_to_simplex(phi: np.ndarray, l: int) -> np.ndarray:
    w = np.empty(l)
    acc = 1.0
    for j in range(l - 1):
        c = np.cos(phi[j]) ** 2
        w[j] = acc * c
        acc *= 1.0 - c
    w[l - 1] = acc
    return w


class _Problem:
    def __init__(self, objective: Callable[[np.ndarray], float], g: Callable[[np.ndarray], float],
                 l: int, t_max: float):
        self.f = objective
        self.g = g
        self.l = l
        self.t_max = t_max
        self.anchor = np.full(l, t_max)

    def gt(self, t: np.ndarray) -> float:
        return self.g(t_to_r(t))

    def ft(self, t: np.ndarray) -> float:
        return self.f(t_to_r(t))

    def _segment_root(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Feasible point on ``[lo, hi]`` closest to ``lo``; ``g(hi) <= 0 < g(lo)``."""
        d = hi - lo
        h = lambda s: self.gt(lo + s * d)
        s = brentq(h, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        step = 1e-15
        while h(s) > 0.0 and s < 1.0:
            s = min(1.0, s + step)
            step *= 4.0
        return np.clip(lo + s * d, 0.0, self.t_max)

    def project(self, t: np.ndarray) -> np.ndarray:
        t = np.clip(t, 0.0, self.t_max)
        if self.gt(t) <= 0.0:
            return t
        return self._segment_root(t, self.anchor)

    def ray_point(self, w: np.ndarray) -> np.ndarray:
        """Boundary crossing of the ray ``s * w`` inside the box."""
        top = w * (self.t_max / np.max(w))
        if self.gt(top) > 0.0:
            return self._segment_root(top, self.anchor)
        return self._segment_root(np.zeros(self.l), top)


def _merge(cands: list[tuple[float, np.ndarray]]) -> tuple[float, np.ndarray]:
    # best value, ties broken by lexicographic r
    return min(cands, key=lambda c: (c[0], tuple(t_to_r(c[1]))))


def minimize_feasible(objective: Callable[[np.ndarray], float], g: Callable[[np.ndarray], float],
                      l: int, mode: str = "boundary", config: SearchConfig | None = None,
                      target: float | None = None, t_max: float = T_MAX) -> SearchResult:
    """Minimize ``objective(r)`` over ``{0 <= r <= r_max : g(r) <= 0}``.

    ``target``, when given, stops the search as soon as a feasible point with
    value at most ``target`` is seen.  Raises :class:`InfeasibleSpec` if even
    the all-``r_max`` anchor is infeasible.
    """
    cfg = config or SearchConfig()
    pb = _Problem(objective, g, l, t_max)
    if pb.gt(pb.anchor) > 0.0:
        raise InfeasibleSpec("distortion target not attainable within the rate cap r_max")
    zero = np.zeros(l)
    if pb.gt(zero) <= 0.0 and mode == "boundary":
        return SearchResult(pb.ft(zero), zero)

    def tracked(t):
        v = pb.ft(t)
        if target is not None and v <= target:
            raise _Target(v, t)
        return v

    try:
        if mode == "boundary":
            best = _boundary_search(pb, cfg, tracked)
        elif mode == "full":
            best = _full_search(pb, cfg, tracked)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    except _Target as hit:
        return SearchResult(float(hit.value), t_to_r(hit.t))
    return SearchResult(float(best[0]), t_to_r(best[1]))


def _boundary_search(pb: _Problem, cfg: SearchConfig, f) -> tuple[float, np.ndarray]:
    l = pb.l
    if l == 1:
        t = pb.ray_point(np.ones(1))
        return f(t), t

    def at(phi):
        t = pb.ray_point(_angles_to_simplex(np.asarray(phi, dtype=float), l))
        return f(t), t

    half = 0.5 * np.pi
    if l == 2:
        grid = np.concatenate([[0.0, half], half * _halton(1, cfg.starts)[:, 0]])
        grid.sort()
        vals = [at([p])[0] for p in grid]
        order = np.argsort(vals, kind="stable")
        cands = [(vals[j], pb.ray_point(_angles_to_simplex(np.array([grid[j]]), 2))) for j in range(len(grid))]
        for j in order[: cfg.refine]:
            lo = grid[max(j - 1, 0)]
            hi = grid[min(j + 1, len(grid) - 1)]
            if hi <= lo:
                continue
            res = minimize_scalar(lambda p: at([p])[0], bounds=(lo, hi), method="bounded",
                                  options={"xatol": cfg.xatol, "maxiter": 500})
            cands.append(at([res.x]))
        return _merge(cands)

    dim = l - 1
    starts = [half * h for h in _halton(dim, cfg.starts)]
    # axis directions and the uniform direction
    for i in range(l):
        w = np.zeros(l)
        w[i] = 1.0
        starts.append(_simplex_to_angles(w))
    starts.append(_simplex_to_angles(np.full(l, 1.0 / l)))
    scored = [(at(p)[0], p) for p in starts]
    scored.sort(key=lambda c: c[0])
    cands = []
    for _, p0 in scored[: cfg.refine]:
        p = _nm(lambda p: at(p)[0], p0, cfg, 0.1)
        cands.append((at(p)[0], p))
    v, p = min(cands, key=lambda c: c[0])
    p = _nm(lambda p: at(p)[0], p, cfg, 0.01)
    cands.append((at(p)[0], p))
    return _merge([at(p) for _, p in cands])


def _simplex_to_angles(w: np.ndarray) -> np.ndarray:
    l = w.size
    phi = np.empty(l - 1)
    rest = 1.0
    for j in range(l - 1):
        c = w[j] / rest if rest > 0 else 1.0
        phi[j] = np.arccos(np.sqrt(np.clip(c, 0.0, 1.0)))
        rest -= w[j]
    return phi


def _nm(fun, x0, cfg: SearchConfig, scale: float) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0] + [x0 + scale * e for e in np.eye(x0.size)])
    res = minimize(fun, x0, method="Nelder-Mead",
                   options={"xatol": cfg.xatol, "fatol": cfg.fatol, "maxiter": cfg.maxiter,
                            "maxfev": 4 * cfg.maxiter, "initial_simplex": simplex})
    return np.asarray(res.x, dtype=float)


def _full_search(pb: _Problem, cfg: SearchConfig, f) -> tuple[float, np.ndarray]:
    l = pb.l

    def penalized(x):
        t = pb.project(x * pb.t_max)
        outside = np.sum(np.clip(-x, 0.0, None) + np.clip(x - 1.0, 0.0, None))
        return f(t) + 1e3 * outside

    starts = [pb.project(np.zeros(l)), pb.anchor.copy()]
    for h in _halton(l, cfg.starts):
        starts.append(pb.ray_point(h / h.sum()))
    scored = sorted(((f(t), t) for t in starts), key=lambda c: c[0])
    cands = list(scored)
    for _, t0 in scored[: cfg.refine]:
        x = _nm(penalized, t0 / pb.t_max, cfg, 0.05)
        t = pb.project(x * pb.t_max)
        cands.append((f(t), t))
    v, t = min(cands, key=lambda c: c[0])
    x = _nm(penalized, t / pb.t_max, cfg, 0.005)
    t = pb.project(x * pb.t_max)
    cands.append((f(t), t))
    return _merge(cands)
