"""Exact expectation functionals of the occupancy counts.

All sums are evaluated term by term (in log space where powers can
underflow) and accumulated with :func:`math.fsum`, so their order is fixed
and the result is correctly rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import BadOccupancyLevel, NonPositiveIntensity, ZeroSampleSize
from .population import SpeciesProfile


def _probs(profile) -> np.ndarray:
    if isinstance(profile, SpeciesProfile):
        return profile.probs
    return np.asarray(profile, dtype=np.float64)


def _check_n(n, minimum=1) -> int:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise ZeroSampleSize(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def _log_binom(n: int, j: int) -> float:
    if j == 0:
        return 0.0
    if j == 1:
        return math.log(n)
    if j == 2:
        return math.log(n * (n - 1) / 2.0)
    return float(gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1))


def expected_occupancy(profile, n: int, j: int) -> float:
    """``E F_j(n) = sum_k C(n, j) p_k^j (1 - p_k)^(n - j)``."""
    n = _check_n(n)
    if isinstance(j, bool) or int(j) != j or not (0 <= j <= n):
        raise BadOccupancyLevel(f"occupancy level must lie in [0, {n}], got {j!r}")
    j = int(j)
    p = _probs(profile)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_miss = np.log1p(-p) * (n - j) if n > j else np.zeros_like(p)
        log_hit = np.log(p) * j if j else np.zeros_like(p)
    terms = np.exp(_log_binom(n, j) + log_hit + log_miss)
    total = math.fsum(terms)
    # j F_j <= n holds exactly; rounding in sum(p) = 1 can overshoot by an ulp
    return min(total, n / j) if j else total


def variance_constant_b(profile, n: int) -> float:
    """``b(n) = E F1 (1 - E F1 / n) + 2 E F2``  (``E F2 = 0`` when ``n = 1``)."""
    n = _check_n(n)
    e1 = expected_occupancy(profile, n, 1)
    e2 = expected_occupancy(profile, n, 2) if n >= 2 else 0.0
    return e1 * (1.0 - e1 / n) + 2.0 * e2


def poisson_second_moment_s(profile, lam: float) -> float:
    """``s^2 = sum_k (lam p_k + (lam p_k)^2) exp(-lam p_k)``."""
    if not (lam > 0) or not math.isfinite(lam):
        raise NonPositiveIntensity(f"intensity must be positive, got {lam!r}")
    x = float(lam) * _probs(profile)
    return math.fsum((x + x * x) * np.exp(-x))


def expected_missing_mass(profile, n: int) -> float:
    """``u_n = sum_k p_k (1 - p_k)^n``; ``u_0 = 1``."""
    n = _check_n(n, minimum=0)
    p = _probs(profile)
    if n == 0:
        return math.fsum(p)
    with np.errstate(divide="ignore"):
        return math.fsum(np.exp(np.log(p) + n * np.log1p(-p)))


def poisson_moment_approx(profile, n: int, j: int) -> float:
    """Poisson approximant ``sum_k (n p_k)^j exp(-n p_k) / j!`` of ``E F_j``."""
    n = _check_n(n)
    if j not in (1, 2):
        raise BadOccupancyLevel(f"the Poisson approximant is defined for j in {{1, 2}}, got {j!r}")
    x = n * _probs(profile)
    return math.fsum(x**j * np.exp(-x)) / math.factorial(j)


@dataclass(frozen=True)
class MomentSummary:
    n: int
    e_f1: float
    e_f2: float
    b_n: float
    s_n_sq: float
    u_n: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "e_f1": self.e_f1,
            "e_f2": self.e_f2,
            "b_n": self.b_n,
            "s_n_sq": self.s_n_sq,
            "u_n": self.u_n,
        }


def moment_summary(profile, n: int) -> MomentSummary:
    n = _check_n(n)
    e1 = expected_occupancy(profile, n, 1)
    e2 = expected_occupancy(profile, n, 2) if n >= 2 else 0.0
    return MomentSummary(
        n=n,
        e_f1=e1,
        e_f2=e2,
        b_n=e1 * (1.0 - e1 / n) + 2.0 * e2,
        s_n_sq=poisson_second_moment_s(profile, n),
        u_n=expected_missing_mass(profile, n),
    )
