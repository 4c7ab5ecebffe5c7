"""Moderate-deviation confidence intervals and tests for the missing mass.

Both interval forms have half-width ``sqrt(-V log(alpha)) / n`` with the
natural logarithm, where ``V`` is either the exact variance constant
``b(n)`` (``oracle_b``) or its plug-in ``F1 (1 - F1/n) + 2 F2``
(``self_normalized``).  At fixed ``alpha`` these intervals are *not*
Gaussian-quantile intervals: in the Gaussian regime their coverage is
``2 Phi(sqrt(log(1/alpha))) - 1`` (about 0.917 at ``alpha = 0.05``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import AlphaOutOfRange, NonPositiveThreshold
from .sampling import OccupancySummary

ORACLE_B = "oracle_b"
SELF_NORMALIZED = "self_normalized"

FLAG_DEGENERATE = "degenerate_variance"


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def plugin_variance(f1: float, f2: float, n: int) -> float:
    """Data-only variance ``F1 (1 - F1/n) + 2 F2``."""
    return f1 * (1.0 - f1 / n) + 2.0 * f2


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    alpha: float
    kind: str
    flags: tuple = ()

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    @property
    def lo_clipped(self) -> float:
        return min(max(self.lo, 0.0), 1.0)

    @property
    def hi_clipped(self) -> float:
        return min(max(self.hi, 0.0), 1.0)

    def contains(self, q: float) -> bool:
        """Closed-interval membership on the raw endpoints."""
        return abs(q - self.center) <= self.half_width

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "half_width": self.half_width,
            "lo": self.lo,
            "hi": self.hi,
            "lo_clipped": self.lo_clipped,
            "hi_clipped": self.hi_clipped,
            "alpha": self.alpha,
            "kind": self.kind,
            "flags": list(self.flags),
        }


def oracle_ci(q_hat: float, n: int, b: float, alpha: float) -> ConfidenceInterval:
    """Interval ``q_hat ± sqrt(-b log alpha) / n`` using a known ``b(n)``."""
    alpha = _check_alpha(alpha)
    if b < 0:
        raise ValueError("b must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    return ConfidenceInterval(q_hat, math.sqrt(-b * math.log(alpha)) / n, alpha, ORACLE_B)


def self_normalized_ci(summary: OccupancySummary, alpha: float) -> ConfidenceInterval:
    """Interval centred at ``F1/n`` that needs no knowledge of ``b(n)``.

    ``F1 = F2 = 0`` gives a zero-width interval flagged ``degenerate_variance``.
    """
    alpha = _check_alpha(alpha)
    n, f1, f2 = summary.n, summary.f1, summary.f2
    if n < 1 or f1 > n:
        raise ValueError("summary needs n >= 1 and F1 <= n")
    v = plugin_variance(f1, f2, n)
    flags = (FLAG_DEGENERATE,) if f1 == 0 and f2 == 0 else ()
    return ConfidenceInterval(f1 / n, math.sqrt(-v * math.log(alpha)) / n, alpha, SELF_NORMALIZED, flags)


@dataclass(frozen=True)
class TestDecision:
    statistic: float
    threshold: float
    reject: bool
    predicted_type1_exponent: float
    kind: str
    type2_rate: Optional[str] = None
    separation_margin: Optional[float] = None
    flags: tuple = field(default=())

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "reject": self.reject,
            "predicted_type1_exponent": self.predicted_type1_exponent,
            "type2_rate": self.type2_rate,
            "separation_margin": self.separation_margin,
            "flags": list(self.flags),
        }


def _check_c(c: float) -> float:
    if not (c > 0):
        raise NonPositiveThreshold(f"threshold c must be positive, got {c!r}")
    return float(c)


def coverage_test(summary: OccupancySummary, u0: float, a, b_at_u0: float, c: float) -> TestDecision:
    """One-sided test of ``u_n <= u0``: reject when ``n (F1/n - u0) / a(b) >= c``.

    The type-I exponent ``c^2 / 2`` is in units of the speed ``a(b)^2 / b``.
    """
    c = _check_c(c)
    if not (b_at_u0 > 0):
        raise ValueError("b_at_u0 must be positive")
    n = summary.n
    stat = n * (summary.f1 / n - u0) / a(b_at_u0)
    return TestDecision(stat, c, bool(stat >= c), c * c / 2.0, "coverage")


def two_population_test(
    summary: OccupancySummary,
    u0: float,
    a,
    b0: float,
    c: float,
    u1: Optional[float] = None,
) -> TestDecision:
    """Two-sided test of ``P = P0`` against ``P = P1`` using ``T = F1/n - u0``.

    With the alternative's expected missing mass ``u1`` supplied, the finite-n
    separation margin ``|u0 - u1| - a(b0) c / n`` is attached; a positive
    margin is where the type-II error decays faster than any exponential in
    the speed.
    """
    c = _check_c(c)
    if not (b0 > 0):
        raise ValueError("b0 must be positive")
    n = summary.n
    ab = a(b0)
    stat = n * abs(summary.f1 / n - u0) / ab
    margin = None
    rate = None
    flags = ()
    if u1 is not None:
        margin = abs(u0 - u1) - ab * c / n
        if abs(u0 - u1) > 0:
            rate = "-inf"
        if margin <= 0:
            flags = ("separation_not_resolved",)
    return TestDecision(stat, c, bool(stat >= c), c * c / 2.0, "two_population", rate, margin, flags)
