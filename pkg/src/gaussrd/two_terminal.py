"""Closed-form two-encoder references.

Both sources are normalized to unit variance with correlation ``rho``.
These formulas serve as ground truth for the general machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput, OutsideD

__all__ = ["TwoTerminalInstance", "in_wagner_D", "wagner_beta", "wagner_sum_rate", "oho_bound", "oho_region_contains"]


@dataclass(frozen=True)
class TwoTerminalInstance:
    rho: float
    d1: float
    d2: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise InvalidInput(f"rho must lie in [0, 1), got {self.rho}")
        if not (self.d1 > 0 and self.d2 > 0):
            raise InvalidInput("distortions must be positive")


def in_wagner_D(inst: TwoTerminalInstance) -> bool:
    """``max(D1, D2) <= min(1, rho^2 min(D1, D2) + 1 - rho^2)``; the boundary counts as inside."""
    r2 = inst.rho ** 2
    lo, hi = min(inst.d1, inst.d2), max(inst.d1, inst.d2)
    return hi <= min(1.0, r2 * lo + 1.0 - r2)


def wagner_beta(inst: TwoTerminalInstance) -> float:
    r2 = inst.rho ** 2
    return 1.0 + math.sqrt(1.0 + 4.0 * r2 / (1.0 - r2) ** 2 * inst.d1 * inst.d2)


def wagner_sum_rate(inst: TwoTerminalInstance) -> float:
    """Optimal sum rate in nats, ``1/2 log((1 - rho^2) beta / (2 D1 D2))``."""
    if not in_wagner_D(inst):
        raise OutsideD(f"(D1, D2) = ({inst.d1}, {inst.d2}) lies outside the closed-form set for rho={inst.rho}")
    val = 0.5 * math.log((1.0 - inst.rho ** 2) * wagner_beta(inst) / (2.0 * inst.d1 * inst.d2))
    return max(val, 0.0)


def oho_bound(rho: float, d_i: float, s: float) -> float:
    """``1/2 log+((1 - rho^2) / D_i * (1 + rho^2 / (1 - rho^2) * s))``."""
    r2 = rho ** 2
    return 0.5 * max(math.log((1.0 - r2) / d_i * (1.0 + r2 / (1.0 - r2) * s)), 0.0)


def oho_region_contains(rho: float, i: int, d_i: float, rv) -> bool:
    """Membership in the region where encoder ``i`` (1 or 2) is reconstructed with distortion ``d_i``.

    The helper rate ``R_{3-i}`` fixes ``s = exp(-2 R_{3-i})``; the bound is
    increasing in ``s`` so this smallest admissible ``s`` is optimal.
    """
    if i not in (1, 2):
        raise InvalidInput("i must be 1 or 2")
    if not 0.0 <= rho < 1.0:
        raise InvalidInput(f"rho must lie in [0, 1), got {rho}")
    if not d_i > 0:
        raise InvalidInput("distortion must be positive")
    r_own, r_help = float(rv[i - 1]), float(rv[2 - i])
    if r_own < 0 or r_help < 0:
        raise InvalidInput("rates must be nonnegative")
    s = min(max(math.exp(-2.0 * r_help), math.ulp(0.0)), 1.0)
    return r_own >= oho_bound(rho, d_i, s)
