"""Finite-grid evaluation of the limit conditions behind the CLT and MDP.

The conditions are statements about ``n -> infinity`` along a family of
profiles; on a finite grid the tool can only report values and their trend.
Only the intensities actually evaluated (``lambda = n`` by default) are
checked, never "every sequence with lambda_n / n -> 1".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import GridTooSmall
from .moments import expected_occupancy, poisson_second_moment_s
from .population import ProfileFamily, resolve

TREND_RTOL = 1e-3

INCREASING = "increasing"
DECREASING = "decreasing"
FLAT = "flat"
NONMONOTONE = "nonmonotone"

REPORT_NOTE = (
    "limits are reported as trends on a finite n-grid; only the listed lambda values are "
    "evaluated; results describe the truncated family (see tail_tol)"
)


def _s_sq(profile, n) -> float:
    return poisson_second_moment_s(profile, n)


def clt_lindeberg_term(profile, n: int, eps: float) -> float:
    """``(1/s_n^2) sum (n p)^2 exp(-n p) [n p > eps s_n]``."""
    if not (eps > 0):
        raise ValueError("eps must be positive")
    s2 = _s_sq(profile, n)
    if s2 == 0.0:
        return 0.0
    x = n * profile.probs
    mask = x > eps * math.sqrt(s2)
    return math.fsum((x[mask] ** 2) * np.exp(-x[mask])) / s2


def mdp_lindeberg_term(profile, n: int, lam: float, a, eps: float) -> float:
    """``(1/s_n^2) sum (lam p)^2 exp(-lam p) [lam p > eps s_n^2 / a(s_n^2)]``."""
    if not (eps > 0) or not (lam > 0):
        raise ValueError("eps and lambda must be positive")
    s2 = _s_sq(profile, n)
    if s2 == 0.0:
        return 0.0
    x = lam * profile.probs
    mask = x > eps * s2 / a(s2)
    return math.fsum((x[mask] ** 2) * np.exp(-x[mask])) / s2


def lindeberg_tail_bound(lam: float, L: float) -> float:
    """Dyadic bound ``8 lam L exp(-L)`` on ``sum (lam p)^2 exp(-lam p) [lam p > L]``, ``L >= 1``."""
    if L < 1:
        raise ValueError("the dyadic bound needs L >= 1")
    return 8.0 * lam * L * math.exp(-L)


class RemarkRatio(NamedTuple):
    value: Optional[float]
    flag: Optional[str]


LOG_DOMAIN = "LogDomain"
DEGENERATE = "degenerate"


def remark_sufficient_ratio(profile, n: int, lam: float, a) -> RemarkRatio:
    """``s_n^2 / (a(s_n^2) log(lam / s_n^2))``; its divergence implies the MDP condition.

    ``lam <= s_n^2`` leaves the log non-positive and yields ``(None, "LogDomain")``.
    ``s_n^2 < 1`` (scale function still at its floor) is flagged ``degenerate``.
    """
    s2 = _s_sq(profile, n)
    if s2 == 0.0:
        return RemarkRatio(None, DEGENERATE)
    if lam <= s2:
        return RemarkRatio(None, LOG_DOMAIN)
    value = s2 / (a(s2) * math.log(lam / s2))
    return RemarkRatio(value, DEGENERATE if s2 < 1.0 else None)


def classify_trend(values: Sequence[Optional[float]], rtol: float = TREND_RTOL) -> str:
    """Classify consecutive changes; a step within ``rtol`` (relative) counts as flat."""
    steps = []
    for u, v in zip(values, values[1:]):
        if u is None or v is None or not (math.isfinite(u) and math.isfinite(v)):
            return NONMONOTONE
        scale = max(abs(u), abs(v))
        if abs(v - u) <= rtol * scale:
            steps.append(0)
        else:
            steps.append(1 if v > u else -1)
    if all(s == 0 for s in steps):
        return FLAT
    if all(s == 1 for s in steps):
        return INCREASING
    if all(s == -1 for s in steps):
        return DECREASING
    return NONMONOTONE


@dataclass
class GridPoint:
    n: int
    lam: float
    n_species: int
    tail_tol: float
    e_f1: float
    e_f2: float
    s_n_sq: float
    ratio_f1: float
    ratio_f2: float
    sum_f1_f2: float
    clt_lindeberg: dict
    mdp_lindeberg: dict
    remark_ratio: Optional[float]
    remark_flag: Optional[str]
    remark_bound: Optional[float]


@dataclass
class ConditionReport:
    n_grid: list
    points: list
    eps_grid: list
    scaling: str
    rtol: float
    flags: list = field(default_factory=list)
    note: str = REPORT_NOTE

    def series(self, name: str, eps: Optional[float] = None) -> list:
        if name in ("clt_lindeberg", "mdp_lindeberg"):
            key = self.eps_grid[0] if eps is None else float(eps)
            return [getattr(p, name)[key] for p in self.points]
        return [getattr(p, name) for p in self.points]

    def trend(self, name: str, eps: Optional[float] = None) -> str:
        return classify_trend(self.series(name, eps), self.rtol)

    @property
    def verdicts(self) -> dict:
        out = {}
        for name in ("ratio_f1", "ratio_f2", "sum_f1_f2", "remark_ratio"):
            s = self.series(name)
            out[name] = {"trend": classify_trend(s, self.rtol), "last": s[-1]}
        for name in ("clt_lindeberg", "mdp_lindeberg"):
            for eps in self.eps_grid:
                s = self.series(name, eps)
                out[f"{name}(eps={eps:g})"] = {"trend": classify_trend(s, self.rtol), "last": s[-1]}
        return out

    @property
    def conditions(self) -> dict:
        """Whether each limit condition is supported by the grid trend."""
        r1 = self.series("ratio_f1")
        total = self.series("sum_f1_f2")

        def vanishing(name):
            ok = True
            for eps in self.eps_grid:
                s = self.series(name, eps)
                ok &= classify_trend(s, self.rtol) == DECREASING or max(s) <= 1e-12
            return bool(ok)

        return {
            "limsup_ratio_f1_below_1": bool(max(r1) < 1.0),
            "sum_f1_f2_diverging": classify_trend(total, self.rtol) == INCREASING,
            "clt_lindeberg_vanishing": vanishing("clt_lindeberg"),
            "mdp_lindeberg_vanishing": vanishing("mdp_lindeberg"),
        }

    def to_dict(self) -> dict:
        return {
            "note": self.note,
            "n_grid": self.n_grid,
            "eps_grid": self.eps_grid,
            "scaling": self.scaling,
            "trend_rtol": self.rtol,
            "flags": self.flags,
            "points": [
                {
                    **{k: v for k, v in p.__dict__.items() if k not in ("clt_lindeberg", "mdp_lindeberg")},
                    "clt_lindeberg": {f"{e:g}": v for e, v in p.clt_lindeberg.items()},
                    "mdp_lindeberg": {f"{e:g}": v for e, v in p.mdp_lindeberg.items()},
                }
                for p in self.points
            ],
            "verdicts": self.verdicts,
            "conditions": self.conditions,
        }


def limit_report(
    family: ProfileFamily,
    n_grid: Sequence[int],
    a,
    eps_grid: Sequence[float] = (1.0,),
    lam: Optional[Callable[[int], float]] = None,
    rtol: float = TREND_RTOL,
) -> ConditionReport:
    """Evaluate every condition quantity on ``n_grid``.

    ``family`` is a fixed profile or a callable rebuilding the profile per
    ``n``; ``lam`` maps ``n`` to the intensity (default ``lambda = n``).
    """
    grid = [int(n) for n in n_grid]
    if len(grid) < 3:
        raise GridTooSmall("limit_report needs at least 3 grid points")
    if any(b <= a_ for a_, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("n_grid must be positive and strictly increasing")
    eps_grid = [float(e) for e in eps_grid]
    points, flags = [], []
    for n in grid:
        prof = resolve(family, n)
        lam_n = float(lam(n)) if lam is not None else float(n)
        e1 = expected_occupancy(prof, n, 1)
        e2 = expected_occupancy(prof, n, 2) if n >= 2 else 0.0
        s2 = _s_sq(prof, n)
        if s2 == 0.0:
            flags.append(f"n={n}: s_n^2 = 0, degenerate profile")
        rr = remark_sufficient_ratio(prof, n, lam_n, a)
        if rr.flag:
            flags.append(f"n={n}: remark ratio {rr.flag}")
        bound = None
        if s2 > 0:
            L = s2 / a(s2)
            if L >= 1:
                bound = lindeberg_tail_bound(lam_n, L) / s2
        points.append(
            GridPoint(
                n=n,
                lam=lam_n,
                n_species=prof.n_species,
                tail_tol=prof.tail_tol,
                e_f1=e1,
                e_f2=e2,
                s_n_sq=s2,
                ratio_f1=e1 / n,
                ratio_f2=e2 / n,
                sum_f1_f2=e1 + e2,
                clt_lindeberg={e: clt_lindeberg_term(prof, n, e) for e in eps_grid},
                mdp_lindeberg={e: mdp_lindeberg_term(prof, n, lam_n, a, e) for e in eps_grid},
                remark_ratio=rr.value,
                remark_flag=rr.flag,
                remark_bound=bound,
            )
        )
    return ConditionReport(
        n_grid=grid,
        points=points,
        eps_grid=eps_grid,
        scaling=a.describe() if hasattr(a, "describe") else repr(a),
        rtol=rtol,
        flags=flags,
    )
