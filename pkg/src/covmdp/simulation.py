"""Monte Carlo experiments for the desk-scale consequences of the MDP results.

All experiments split replications into fixed batches (see :mod:`covmdp.rng`)
and aggregate only counts, sums and order statistics of the concatenated
per-replication arrays, so their output does not depend on ``workers``.

Coupling used by :func:`poissonization_gap_experiment`: each replication
draws ``N' ~ Poisson(n)`` and one arrival stream; the first ``min(n, N')``
arrivals form a multinomial sample and the next ``|n - N'|`` arrivals an
independent one.  The size-``n`` and size-``N'`` samples are the prefix and
the full stream (in the order dictated by ``N'``), which is the joint law of
``(xi_n, zeta_nn)`` obtained from a Poisson process observed at its ``n``-th
arrival and at time ``n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import rng as _rng
from .exceptions import EmptySubset, IndexOutOfRange, TooFewReps, ZeroReps
from .inference import plugin_variance
from .moments import variance_constant_b
from .population import SpeciesProfile
from .sampling import SamplingPlan, batch_stats, draw_batch
from .scaling import TailSchedule

ORACLE = "oracle"
SELF_NORMALIZED = "self_normalized"

#: Tail estimates below this many hits carry no MDP ratio.
RARE_EVENT_FLOOR = 10

#: Default Kolmogorov-Smirnov acceptance distance for the CLT check.
KS_THRESHOLD = 0.1

GAP_QUANTILES = (0.5, 0.9, 0.99)


# --------------------------------------------------------------------------
# batch execution


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_in_worker(args):
    task, unit, start, stop = args
    return task(_WORKER_CTX, unit, start, stop)


def run_batches(task, ctx, reps: int, workers: int = 1) -> dict:
    """Run ``task(ctx, unit, start, stop)`` over all batches; concatenate in unit order.

    ``task`` must be a module-level function returning a dict of 1-D arrays.
    """
    jobs = [(task, u, s, e) for u, s, e in _rng.batches(reps)]
    if workers <= 1 or len(jobs) <= 1:
        results = [task(ctx, u, s, e) for _, u, s, e in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            results = list(pool.map(_run_in_worker, jobs))
    return {k: np.concatenate([r[k] for r in results]) for k in results[0]}


def _check_reps(reps) -> int:
    if isinstance(reps, bool) or int(reps) != reps or reps < 1:
        raise ZeroReps(f"reps must be a positive integer, got {reps!r}")
    return int(reps)


@dataclass
class _MultinomialCtx:
    plan: SamplingPlan
    n: int
    seed: int
    weights: Optional[np.ndarray] = None


def _multinomial_task(ctx: _MultinomialCtx, unit, start, stop):
    gen = _rng.stream(ctx.seed, unit, _rng.BLOCK_BATCH_MULTINOMIAL)
    batch = draw_batch(ctx.plan, gen, np.full(stop - start, ctx.n))
    f1, f2, q = batch_stats(batch, ctx.plan)
    out = {"f1": f1, "f2": f2, "q": q}
    if ctx.weights is not None:
        out["unseen_w"] = batch_stats(batch, ctx.plan, ctx.weights)[2]
    return out


def replicate_stats(
    profile: SpeciesProfile, n: int, reps: int, seed: int, workers: int = 1, weights=None
) -> dict:
    """Per-replication ``f1``, ``f2``, missing mass ``q`` (and ``unseen_w`` if weighted)."""
    reps = _check_reps(reps)
    ctx = _MultinomialCtx(SamplingPlan(profile, n), int(n), _rng.check_seed(seed), weights)
    return run_batches(_multinomial_task, ctx, reps, workers)


def _xi(res: dict, n: int) -> np.ndarray:
    return res["f1"] - n * res["q"]


def _ratio(num: np.ndarray, den) -> np.ndarray:
    """``num / den`` with ``0/0 = 0`` and ``x/0 = ±inf``."""
    den = np.broadcast_to(np.asarray(den, dtype=np.float64), num.shape)
    out = np.zeros_like(num, dtype=np.float64)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    zero = ~pos & (num != 0)
    out[zero] = np.sign(num[zero]) * np.inf
    return out


def normalized_statistic(res: dict, n: int, kind: str, b: Optional[float] = None) -> np.ndarray:
    xi = _xi(res, n)
    if kind == ORACLE:
        return _ratio(xi, math.sqrt(b))
    if kind == SELF_NORMALIZED:
        return _ratio(xi, np.sqrt(np.maximum(plugin_variance(res["f1"], res["f2"], n), 0.0)))
    raise ValueError(f"unknown kind {kind!r}")


def wilson_interval(hits: int, reps: int, level: float = 0.95):
    ci = stats.binomtest(int(hits), int(reps)).proportion_ci(confidence_level=level, method="wilson")
    p = hits / reps
    return min(float(ci.low), p), max(float(ci.high), p)


# --------------------------------------------------------------------------
# tail probabilities


@dataclass(frozen=True)
class TailEstimate:
    n: int
    t: float
    kind: str
    side: str
    hits: int
    reps: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    neg_log_p: float
    mdp_ratio: Optional[float]

    CSV_HEADER = (
        "n", "t", "kind", "side", "hits", "reps", "p_hat",
        "wilson_lo", "wilson_hi", "neg_log_p", "mdp_ratio",
    )

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in self.CSV_HEADER)


def _tail_estimate(n, t, kind, side, hits, reps) -> TailEstimate:
    p = hits / reps
    lo, hi = wilson_interval(hits, reps)
    neg_log_p = -math.log(p) if hits else math.inf
    ratio = neg_log_p / (t * t / 2.0) if hits >= RARE_EVENT_FLOOR else None
    return TailEstimate(n, float(t), kind, side, int(hits), int(reps), p, lo, hi, neg_log_p, ratio)


def tail_experiment(
    profile: SpeciesProfile,
    n: int,
    schedule,
    reps: int,
    seed: int,
    kind: str = ORACLE,
    workers: int = 1,
    return_replications: bool = False,
):
    """Upper and lower tail frequencies of the normalised estimation error.

    The statistic is ``n (q_hat - Q) / sqrt(b(n))`` (``oracle``) or
    ``n (q_hat - Q) / sqrt(F1 (1 - F1/n) + 2 F2)`` (``self_normalized``); an
    upper hit is ``stat >= t`` and a lower hit ``stat <= -t``.
    """
    reps = _check_reps(reps)
    schedule = schedule if isinstance(schedule, TailSchedule) else TailSchedule(tuple(schedule))
    res = replicate_stats(profile, n, reps, seed, workers)
    b = variance_constant_b(profile, n) if kind == ORACLE else None
    stat = normalized_statistic(res, n, kind, b)
    out = []
    for t in schedule:
        out.append(_tail_estimate(n, t, kind, "upper", np.count_nonzero(stat >= t), reps))
        out.append(_tail_estimate(n, t, kind, "lower", np.count_nonzero(stat <= -t), reps))
    if return_replications:
        res = dict(res, xi=_xi(res, n), statistic=stat)
        return out, res
    return out


# --------------------------------------------------------------------------
# interval coverage


@dataclass(frozen=True)
class CoverageRecord:
    n: int
    alpha: float
    kind: str
    covered: int
    reps: int
    fraction: float
    wilson_lo: float
    wilson_hi: float

    CSV_HEADER = ("n", "alpha", "kind", "covered", "reps", "fraction", "wilson_lo", "wilson_hi")

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in self.CSV_HEADER)


def ci_coverage_experiment(
    profile: SpeciesProfile,
    n: int,
    alpha: float,
    reps: int,
    seed: int,
    kind: str = SELF_NORMALIZED,
    workers: int = 1,
) -> CoverageRecord:
    """Fraction of replications whose closed interval contains the realised ``Q_n``."""
    from .inference import _check_alpha

    alpha = _check_alpha(alpha)
    reps = _check_reps(reps)
    res = replicate_stats(profile, n, reps, seed, workers)
    if kind == ORACLE:
        var = np.full(reps, variance_constant_b(profile, n))
    elif kind == SELF_NORMALIZED:
        var = plugin_variance(res["f1"], res["f2"], n)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    # |q_hat - Q| <= sqrt(-V log alpha) / n, compared on the xi scale
    covered = int(np.count_nonzero(np.abs(_xi(res, n)) <= np.sqrt(-np.maximum(var, 0.0) * math.log(alpha))))
    lo, hi = wilson_interval(covered, reps)
    return CoverageRecord(int(n), alpha, kind, covered, reps, covered / reps, lo, hi)


# --------------------------------------------------------------------------
# Poissonisation gap


@dataclass
class _CouplingCtx:
    plan: SamplingPlan
    n: int
    seed: int


def _coupling_task(ctx: _CouplingCtx, unit, start, stop):
    n = ctx.n
    gen = _rng.stream(ctx.seed, unit, _rng.BLOCK_COUPLING)
    n_pois = gen.poisson(float(n), size=stop - start).astype(np.int64)
    base = draw_batch(ctx.plan, gen, np.minimum(n_pois, n))
    ext = draw_batch(ctx.plan, gen, np.abs(n_pois - n))
    full = base.merge(ext)
    f1_b, _, q_b = batch_stats(base, ctx.plan)
    f1_f, _, q_f = batch_stats(full, ctx.plan)
    longer = n_pois >= n
    # size-n sample is the prefix when N' >= n, the full stream otherwise
    xi = np.where(longer, f1_b - n * q_b, f1_f - n * q_f)
    zeta = np.where(longer, f1_f - n * q_f, f1_b - n * q_b)
    return {"xi": xi, "zeta": zeta, "n_pois": n_pois}


@dataclass(frozen=True)
class GapRecord:
    n: int
    reps: int
    scale: float
    q50: float
    q90: float
    q99: float
    mean: float

    CSV_HEADER = ("n", "reps", "scale", "q50", "q90", "q99", "mean")

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in self.CSV_HEADER)


def coupled_xi_zeta(profile: SpeciesProfile, n: int, reps: int, seed: int, workers: int = 1) -> dict:
    reps = _check_reps(reps)
    ctx = _CouplingCtx(SamplingPlan(profile, n), int(n), _rng.check_seed(seed))
    return run_batches(_coupling_task, ctx, reps, workers)


def poissonization_gap_experiment(
    profile: SpeciesProfile, n: int, reps: int, seed: int, a, workers: int = 1
) -> GapRecord:
    """Quantiles of ``|xi_n - zeta_nn| / a(b(n))`` under the stream coupling."""
    res = coupled_xi_zeta(profile, n, reps, seed, workers)
    scale = float(a(variance_constant_b(profile, n)))
    gap = np.abs(res["xi"] - res["zeta"]) / scale
    q50, q90, q99 = (float(v) for v in np.quantile(gap, GAP_QUANTILES))
    return GapRecord(int(n), int(reps), scale, q50, q90, q99, float(gap.mean()))


# --------------------------------------------------------------------------
# exponential-moment inequality for the missing mass of a species subset


@dataclass(frozen=True)
class NAInequalityResult:
    mc_lhs: float
    mc_stderr: float
    analytic_rhs: float
    holds: bool


def na_product_bound(profile: SpeciesProfile, n: int, subset, r: float) -> float:
    """``prod_{k in M} ((e^{r p_k} - 1)(1 - p_k)^n + 1)``."""
    p = profile.probs[np.asarray(subset, dtype=np.int64) - 1]
    with np.errstate(divide="ignore"):
        miss = np.exp(n * np.log1p(-p))
    return math.exp(math.fsum(np.log1p(np.expm1(r * p) * miss)))


def _check_subset(profile, subset) -> np.ndarray:
    idx = np.unique(np.asarray(list(subset), dtype=np.int64))
    if idx.size == 0:
        raise EmptySubset("subset must be nonempty")
    if idx[0] < 1 or idx[-1] > profile.n_species:
        raise IndexOutOfRange(f"species indices must lie in 1..{profile.n_species}")
    return idx


def na_inequality_check(
    profile: SpeciesProfile,
    n: int,
    subset,
    r: float,
    reps: int,
    seed: int,
    workers: int = 1,
) -> NAInequalityResult:
    """Monte Carlo ``E exp{r sum_{k in M} p_k [X_k = 0]}`` against the product bound."""
    reps = _check_reps(reps)
    if reps < 100:
        raise TooFewReps("the inequality check needs at least 100 replications")
    idx = _check_subset(profile, subset)
    weights = np.zeros(profile.n_species)
    weights[idx - 1] = profile.probs[idx - 1]
    res = replicate_stats(profile, n, reps, seed, workers, weights=weights)
    vals = np.exp(r * res["unseen_w"])
    lhs = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(reps))
    rhs = na_product_bound(profile, n, idx, r)
    return NAInequalityResult(lhs, se, rhs, bool(lhs <= rhs + 3.0 * se))


# --------------------------------------------------------------------------
# CLT anchor


@dataclass(frozen=True)
class KSResult:
    ks_distance: float
    passed: bool
    threshold: float
    reps: int
    flags: tuple = ()


def clt_ks_check(
    profile: SpeciesProfile,
    n: int,
    reps: int,
    seed: int,
    workers: int = 1,
    threshold: float = KS_THRESHOLD,
) -> KSResult:
    """Kolmogorov-Smirnov distance of ``n (q_hat - Q) / sqrt(b(n))`` from N(0, 1)."""
    reps = _check_reps(reps)
    if reps < 1000:
        raise TooFewReps("the KS check needs at least 1000 replications")
    res = replicate_stats(profile, n, reps, seed, workers)
    b = variance_constant_b(profile, n)
    stat = normalized_statistic(res, n, ORACLE, b)
    d = float(stats.kstest(stat, "norm").statistic)
    flags = ("degenerate",) if b == 0.0 or np.all(stat == stat[0]) else ()
    return KSResult(d, bool(d <= threshold) and not flags, threshold, reps, flags)
