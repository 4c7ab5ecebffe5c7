"""Species-probability profiles.

A profile is a finite, strictly positive probability vector over species
indexed ``1..K``.  The power-law and exponential families are countably
infinite; they are truncated at the smallest ``K`` whose discarded tail
mass (as a fraction of the untruncated total) is at most ``tail_tol`` and
then renormalised.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Union

import numpy as np
from scipy.special import zeta

from .exceptions import (
    AllZeroWeights,
    BadTolerance,
    CoverageError,
    ExponentNotSummable,
    NegativeWeight,
    NonFiniteWeight,
    NonPositiveRate,
    TruncationTooLarge,
    ZeroSpecies,
)

FAMILIES = ("uniform", "power_law", "exponential", "custom")

#: Default cap on the number of retained species for truncated families.
MAX_SPECIES = 10_000_000


@dataclass(frozen=True, eq=False)
class SpeciesProfile:
    """Immutable species-probability vector.

    Attributes
    ----------
    probs : ndarray of float64, read-only
        ``probs[k - 1]`` is the probability of species ``k``.
    family_tag : str
        One of ``uniform``, ``power_law``, ``exponential``, ``custom``.
    params : dict
        Family parameters (``a``, ``b`` for the power law, ``r`` for the
        exponential family, ``K`` for uniform).
    tail_tol : float
        Upper bound on the discarded tail mass of the untruncated family.
    """

    probs: np.ndarray
    family_tag: str = "custom"
    params: dict = field(default_factory=dict)
    tail_tol: float = 0.0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ZeroSpecies("a profile needs at least one species")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
            raise CoverageError("profile probabilities must be finite and > 0")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise CoverageError("profile probabilities must sum to 1")
        if self.family_tag not in FAMILIES:
            raise CoverageError(f"unknown family {self.family_tag!r}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def n_species(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.n_species

    def __eq__(self, other):
        if not isinstance(other, SpeciesProfile):
            return NotImplemented
        return (
            self.family_tag == other.family_tag
            and self.params == other.params
            and self.tail_tol == other.tail_tol
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None

    def content_hash(self) -> str:
        """SHA-256 of the little-endian float64 bytes of ``probs``."""
        return hashlib.sha256(self.probs.astype("<f8").tobytes()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "family": self.family_tag,
            "params": dict(self.params),
            "tail_tol": self.tail_tol,
            "probs": [float(p) for p in self.probs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpeciesProfile":
        try:
            return cls(
                probs=np.asarray(data["probs"], dtype=np.float64),
                family_tag=data.get("family", "custom"),
                params=data.get("params", {}),
                tail_tol=float(data.get("tail_tol", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise CoverageError(f"malformed profile document: {exc}") from exc


def _from_unnormalised(terms: np.ndarray, family: str, params: dict, tail_tol: float):
    probs = terms / math.fsum(terms)
    return SpeciesProfile(probs=probs, family_tag=family, params=params, tail_tol=tail_tol)


def _check_tol(tail_tol: float) -> None:
    if not (0.0 < tail_tol < 1.0):
        raise BadTolerance(f"tail_tol must lie in (0, 1), got {tail_tol!r}")


def normalize_weights(weights) -> SpeciesProfile:
    """Build a ``custom`` profile from nonnegative weights.

    Zero weights are dropped, so species are renumbered over the support.

    >>> normalize_weights([3, 1]).probs.tolist()
    [0.75, 0.25]
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if not np.all(np.isfinite(w)):
        raise NonFiniteWeight("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight("weights must be nonnegative")
    w = w[w > 0]
    if w.size == 0:
        raise AllZeroWeights("at least one weight must be positive")
    return _from_unnormalised(w, "custom", {}, 0.0)


def uniform_profile(K: int) -> SpeciesProfile:
    if int(K) != K or K < 1:
        raise ZeroSpecies(f"K must be a positive integer, got {K!r}")
    K = int(K)
    return SpeciesProfile(
        probs=np.full(K, 1.0 / K), family_tag="uniform", params={"K": K}, tail_tol=0.0
    )


def power_law_tail_fraction(b: float, K: int) -> float:
    """Fraction of ``sum_{i>=1} (i+1)^-b`` carried by indices ``i > K``."""
    return float(zeta(b, K + 2) / zeta(b, 2))


def power_law_profile(
    a: float, b: float, tail_tol: float, max_species: int = MAX_SPECIES
) -> SpeciesProfile:
    """Truncated power law ``p_i ∝ a / (i + 1)^b``.

    The constant ``a`` cancels in the normalisation and is only recorded in
    ``params``.
    """
    if not (a > 0):
        raise CoverageError(f"a must be positive, got {a!r}")
    if not (b > 1):
        raise ExponentNotSummable(f"b must exceed 1 for a summable law, got {b!r}")
    _check_tol(tail_tol)
    if power_law_tail_fraction(b, max_species) > tail_tol:
        raise TruncationTooLarge(
            f"tail_tol={tail_tol:g} with b={b:g} needs more than {max_species} species"
        )
    # smallest K with tail fraction <= tail_tol; the fraction is decreasing in K
    lo, hi = 1, max_species
    if power_law_tail_fraction(b, lo) <= tail_tol:
        hi = lo
    while lo < hi:
        mid = (lo + hi) // 2
        if power_law_tail_fraction(b, mid) <= tail_tol:
            hi = mid
        else:
            lo = mid + 1
    i = np.arange(1, hi + 1, dtype=np.float64)
    terms = (i + 1.0) ** (-float(b))
    return _from_unnormalised(terms, "power_law", {"a": float(a), "b": float(b)}, tail_tol)


def exponential_profile(
    r: float, tail_tol: float, max_species: int = MAX_SPECIES
) -> SpeciesProfile:
    """Truncated exponential law ``p_i ∝ exp(-i / r)``.

    The discarded fraction after ``K`` terms is exactly ``exp(-K / r)``.
    """
    if not (r > 0) or not math.isfinite(r):
        raise NonPositiveRate(f"r must be positive and finite, got {r!r}")
    _check_tol(tail_tol)
    K = max(1, math.ceil(-r * math.log(tail_tol)))
    # guard the ceil against rounding in either direction
    while K > 1 and math.exp(-(K - 1) / r) <= tail_tol:
        K -= 1
    while math.exp(-K / r) > tail_tol:
        K += 1
    if K > max_species:
        raise TruncationTooLarge(
            f"tail_tol={tail_tol:g} with r={r:g} needs {K} > {max_species} species"
        )
    # shifted by one index; the common factor exp(-1/r) cancels
    terms = np.exp(-np.arange(K, dtype=np.float64) / r)
    return _from_unnormalised(terms, "exponential", {"r": float(r)}, tail_tol)


def build_profile(family: str, **params) -> SpeciesProfile:
    """Dispatch on a family name; used by the CLI and config files."""
    if family == "uniform":
        return uniform_profile(params["K"])
    if family == "power_law":
        return power_law_profile(params.get("a", 1.0), params["b"], params["tail_tol"])
    if family == "exponential":
        return exponential_profile(params["r"], params["tail_tol"])
    if family == "custom":
        return normalize_weights(params["weights"])
    raise CoverageError(f"unknown family {family!r}")


ProfileFamily = Union[SpeciesProfile, Callable[[int], SpeciesProfile]]


def resolve(family: ProfileFamily, n: int) -> SpeciesProfile:
    """Profile at sample size ``n``: fixed profiles are returned unchanged."""
    if isinstance(family, SpeciesProfile):
        return family
    return family(n)


def exponential_family(rate_per_n: float, tail_tol: float) -> Callable[[int], SpeciesProfile]:
    """Exponential family with ``r_n = rate_per_n * n``, rebuilt per ``n``."""

    def build(n: int) -> SpeciesProfile:
        return exponential_profile(rate_per_n * n, tail_tol)

    return build


def save_profile(profile: SpeciesProfile, path) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, json.dumps(profile.to_dict(), indent=1) + "\n")


def load_profile(path) -> SpeciesProfile:
    with open(path) as fh:
        data: Any = json.load(fh)
    return SpeciesProfile.from_dict(data)
