"""Multinomial and Poissonised occupancy samples and their statistics.

Multinomial draws use a two-stage exact scheme.  Species are ordered by
decreasing probability; the ``H`` heaviest ("head") species and one pooled
"rest" cell are drawn by conditional binomials (``Generator.multinomial``),
and the ``m`` draws that land in the rest cell are then assigned to the
light ("tail") species one at a time by inverse-CDF lookup.  The split ``H``
minimises ``H + n * tail_mass(H)``, i.e. the number of binomials plus the
expected number of individual tail draws, which keeps the cost well below
``O(K)`` for long-tailed profiles.  The joint law is exactly
multinomial(n, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as _rng
from .exceptions import DimensionMismatch, NonPositiveIntensity, WrongMode, ZeroSampleSize
from .population import SpeciesProfile

MULTINOMIAL = "multinomial"
POISSONIZED = "poissonized"


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class Occupancy:
    """Per-species counts of one sample.

    ``n_or_lambda`` is the sample size for multinomial samples and the
    Poisson intensity for Poissonised ones.
    """

    counts: np.ndarray
    n_or_lambda: float
    mode: str
    seed: int
    replication: int = 0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise DimensionMismatch("counts must be one-dimensional")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if self.mode not in (MULTINOMIAL, POISSONIZED):
            raise WrongMode(f"unknown mode {self.mode!r}")
        if self.mode == MULTINOMIAL and counts.sum() != self.n_or_lambda:
            raise ValueError("multinomial counts must sum to n")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        """Number of individuals actually observed."""
        return int(self.counts.sum())


@dataclass(frozen=True)
class OccupancySummary:
    """Frequency-of-frequencies ``F[j] = #{k : X_k = j}`` for ``j >= 1``."""

    F: dict
    n: int

    @property
    def f1(self) -> int:
        return int(self.F.get(1, 0))

    @property
    def f2(self) -> int:
        return int(self.F.get(2, 0))

    @classmethod
    def from_counts(cls, counts) -> "OccupancySummary":
        counts = np.asarray(counts, dtype=np.int64)
        levels, freq = np.unique(counts[counts > 0], return_counts=True)
        return cls(F={int(j): int(f) for j, f in zip(levels, freq)}, n=int(counts.sum()))


@dataclass(frozen=True)
class CoverageStats:
    q_true: float
    q_hat: float
    xi: float
    u_n: float


# --------------------------------------------------------------------------
# batched exact sampler


class SamplingPlan:
    """Head/tail split of a profile for a given sample size."""

    def __init__(self, profile: SpeciesProfile, n: float):
        p = profile.probs
        if np.all(np.diff(p) <= 0):
            order = np.arange(p.size)
        else:
            order = np.argsort(-p, kind="stable")
        sp = p[order]
        K = sp.size
        # suffix[h] = mass of species h.. (0-based, sorted order)
        suffix = np.concatenate([np.cumsum(sp[::-1])[::-1], [0.0]])
        cost = np.arange(K + 1) + float(n) * suffix
        H = int(np.argmin(cost))
        self.profile = profile
        self.order = order
        self.sorted_probs = sp
        self.H = H
        self.K = K
        head = sp[:H]
        tail = sp[H:]
        self.tail_probs = tail
        if tail.size:
            self.tail_total = math.fsum(tail)
            cdf = np.cumsum(tail) / self.tail_total
            cdf[-1] = 1.0
            self.tail_cdf = cdf
            self.pvals = np.concatenate([head, [self.tail_total]])
        else:
            self.tail_total = 0.0
            self.tail_cdf = np.empty(0)
            self.pvals = head

    @property
    def T(self) -> int:
        return self.K - self.H


@dataclass
class SparseBatch:
    """A batch of multinomial samples: dense head counts, sparse tail counts.

    Tail entries are sorted by ``(rep, pos)`` and unique.
    """

    head: np.ndarray  # (B, H)
    rep: np.ndarray
    pos: np.ndarray
    cnt: np.ndarray
    T: int

    @property
    def size(self) -> int:
        return self.head.shape[0]

    def merge(self, other: "SparseBatch") -> "SparseBatch":
        """Counts of the concatenated samples (row by row)."""
        T = max(self.T, 1)
        keys = np.concatenate([self.rep * T + self.pos, other.rep * T + other.pos])
        cnt = np.concatenate([self.cnt, other.cnt])
        uniq, inv = np.unique(keys, return_inverse=True)
        total = np.bincount(inv, weights=cnt, minlength=uniq.size).astype(np.int64)
        return SparseBatch(self.head + other.head, uniq // T, uniq % T, total, self.T)

    def dense_row(self, plan: SamplingPlan, i: int) -> np.ndarray:
        counts = np.zeros(plan.K, dtype=np.int64)
        counts[plan.order[: plan.H]] = self.head[i]
        sel = self.rep == i
        counts[plan.order[plan.H + self.pos[sel]]] = self.cnt[sel]
        return counts


def draw_batch(plan: SamplingPlan, gen: np.random.Generator, sizes) -> SparseBatch:
    """One multinomial sample per entry of ``sizes`` (sample sizes may differ)."""
    sizes = np.asarray(sizes, dtype=np.int64)
    B = sizes.size
    cells = gen.multinomial(sizes, plan.pvals).reshape(B, plan.pvals.size)
    head = cells[:, : plan.H]
    if plan.T == 0:
        empty = np.empty(0, dtype=np.int64)
        return SparseBatch(head, empty, empty, empty, 0)
    m = cells[:, plan.H]
    u = gen.random(int(m.sum()))
    pos = np.minimum(np.searchsorted(plan.tail_cdf, u, side="right"), plan.T - 1)
    rep = np.repeat(np.arange(B, dtype=np.int64), m)
    keys, cnt = np.unique(rep * plan.T + pos, return_counts=True)
    return SparseBatch(head, keys // plan.T, keys % plan.T, cnt.astype(np.int64), plan.T)


def batch_stats(batch: SparseBatch, plan: SamplingPlan, weights: Optional[np.ndarray] = None):
    """Per-row ``(F1, F2, unseen)`` where ``unseen = sum_k w_k [X_k = 0]``.

    ``weights`` defaults to the species probabilities, making ``unseen`` the
    missing mass.  ``weights`` is indexed in original species order.
    """
    B = batch.size
    H = plan.H
    if weights is None:
        w_sorted = plan.sorted_probs
    else:
        w_sorted = np.asarray(weights, dtype=np.float64)[plan.order]
    w_head = w_sorted[:H]
    w_tail = w_sorted[H:]
    head = batch.head
    f1 = (head == 1).sum(axis=1)
    f2 = (head == 2).sum(axis=1)
    unseen = np.where(head == 0, w_head, 0.0).sum(axis=1)
    if plan.T:
        f1 = f1 + np.bincount(batch.rep[batch.cnt == 1], minlength=B)
        f2 = f2 + np.bincount(batch.rep[batch.cnt == 2], minlength=B)
        seen = np.bincount(batch.rep, weights=w_tail[batch.pos], minlength=B)
        unseen = unseen + (math.fsum(w_tail) - seen)
    return f1.astype(np.int64), f2.astype(np.int64), np.maximum(unseen, 0.0)


# --------------------------------------------------------------------------
# public single-sample operations


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ZeroSampleSize(f"sample size must be a positive integer, got {n!r}")
    return int(n)


def draw_sample(profile: SpeciesProfile, n: int, seed: int, replication: int = 0) -> Occupancy:
    """Multinomial(n, profile.probs) counts, deterministic in ``(profile, n, seed, replication)``."""
    n = _check_n(n)
    plan = SamplingPlan(profile, n)
    gen = _rng.stream(seed, replication, _rng.BLOCK_SINGLE_MULTINOMIAL)
    batch = draw_batch(plan, gen, [n])
    return Occupancy(batch.dense_row(plan, 0), n, MULTINOMIAL, int(seed), int(replication))


def draw_poissonized(
    profile: SpeciesProfile, lam: float, seed: int, replication: int = 0
) -> Occupancy:
    """Independent Poisson(lam * p_k) counts."""
    if not (lam > 0) or not math.isfinite(lam):
        raise NonPositiveIntensity(f"intensity must be positive and finite, got {lam!r}")
    gen = _rng.stream(seed, replication, _rng.BLOCK_SINGLE_POISSON)
    counts = gen.poisson(float(lam) * profile.probs)
    return Occupancy(counts, float(lam), POISSONIZED, int(seed), int(replication))


def summarize(occ: Occupancy) -> OccupancySummary:
    return OccupancySummary.from_counts(occ.counts)


def _check_dims(occ: Occupancy, profile: SpeciesProfile) -> None:
    if occ.counts.size != profile.n_species:
        raise DimensionMismatch(
            f"sample has {occ.counts.size} species, profile has {profile.n_species}"
        )


def coverage_stats(occ: Occupancy, profile: SpeciesProfile) -> CoverageStats:
    """True missing mass, Good's estimate ``F1 / n`` and ``xi = n (q_hat - q_true)``."""
    from .moments import expected_missing_mass

    if occ.mode != MULTINOMIAL:
        raise WrongMode("coverage_stats needs a multinomial sample")
    _check_dims(occ, profile)
    n = int(occ.n_or_lambda)
    counts = occ.counts
    q_true = math.fsum(profile.probs[counts == 0])
    f1 = int(np.count_nonzero(counts == 1))
    q_hat = f1 / n
    return CoverageStats(
        q_true=q_true,
        q_hat=q_hat,
        xi=n * (q_hat - q_true),
        u_n=expected_missing_mass(profile, n),
    )


def zeta_statistic(occ: Occupancy, profile: SpeciesProfile) -> float:
    """Poissonised centred statistic ``sum_k [X_k = 1] - lam p_k [X_k = 0]``."""
    if occ.mode != POISSONIZED:
        raise WrongMode("zeta_statistic needs a Poissonised sample")
    _check_dims(occ, profile)
    counts = occ.counts
    lam = float(occ.n_or_lambda)
    return float(np.count_nonzero(counts == 1)) - lam * math.fsum(profile.probs[counts == 0])
