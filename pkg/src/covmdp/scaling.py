"""Moderate-deviation scale ``a(t)``, speed and rate function."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EmptyGrid,
    GammaOutOfRange,
    NonPositiveVariance,
    ScalingDomainError,
)


@dataclass(frozen=True)
class ScalingFunction:
    """Power scale ``a(t) = max(1, t ** gamma)`` with ``1/2 < gamma < 1``."""

    gamma: float
    domain_floor: float = 1.0

    def __post_init__(self):
        if not (0.5 < self.gamma < 1.0):
            raise GammaOutOfRange(f"gamma must lie strictly in (1/2, 1), got {self.gamma!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.maximum(self.domain_floor, t**self.gamma)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> str:
        return f"power(gamma={self.gamma:g})"


@dataclass(frozen=True)
class TabulatedScaling:
    """User-supplied ``a(t)`` tabulated on a strictly increasing ``t`` grid.

    Values are linearly interpolated and floored at 1; evaluating outside the
    tabulated range raises :class:`ScalingDomainError`.
    """

    t: tuple
    a_of_t: tuple
    domain_floor: float = 1.0
    source: str = field(default="", compare=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        a = np.asarray(self.a_of_t, dtype=np.float64)
        if t.ndim != 1 or t.size < 2 or t.shape != a.shape:
            raise ScalingDomainError("tabulated scaling needs two equal-length columns, >= 2 rows")
        if np.any(np.diff(t) <= 0):
            raise ScalingDomainError("tabulated t values must be strictly increasing")
        if not np.all(np.isfinite(a)):
            raise ScalingDomainError("tabulated a(t) values must be finite")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "a_of_t", tuple(a.tolist()))

    def __call__(self, t):
        x = np.asarray(t, dtype=np.float64)
        lo, hi = self.t[0], self.t[-1]
        if np.any(x < lo) or np.any(x > hi):
            raise ScalingDomainError(f"a(t) tabulated on [{lo:g}, {hi:g}] only")
        out = np.maximum(self.domain_floor, np.interp(x, self.t, self.a_of_t))
        return float(out) if out.ndim == 0 else out

    def describe(self) -> str:
        return f"tabulated({self.source or len(self.t)})"

    @classmethod
    def from_csv(cls, path) -> "TabulatedScaling":
        ts, vals = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    ts.append(float(row[0]))
                    vals.append(float(row[1]))
                except (ValueError, IndexError):
                    if ts:  # only a leading header row may be non-numeric
                        raise ScalingDomainError(f"bad row in {path}: {row}")
        return cls(tuple(ts), tuple(vals), source=str(path))


def power_scaling(gamma: float) -> ScalingFunction:
    return ScalingFunction(float(gamma))


def mdp_speed(a, b: float) -> float:
    """Speed ``a(b)^2 / b``."""
    if not (b > 0):
        raise NonPositiveVariance(f"variance constant must be positive, got {b!r}")
    return a(b) ** 2 / b


def rate_function(x):
    return np.square(x) / 2.0 if np.ndim(x) else x * x / 2.0


@dataclass(frozen=True)
class TailSchedule:
    """Strictly increasing positive thresholds, in units of the normaliser."""

    t_values: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t_values)
        if not t:
            raise EmptyGrid("schedule needs at least one threshold")
        if any(v <= 0 or not math.isfinite(v) for v in t):
            raise ValueError("thresholds must be positive and finite")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "t_values", t)

    def __iter__(self):
        return iter(self.t_values)

    def __len__(self):
        return len(self.t_values)


@dataclass
class ScalingValidation:
    t: list
    a_over_sqrt_t: list
    a_over_t: list
    in_clamp: list
    increasing_ok: bool
    decreasing_ok: bool
    flags: list

    @property
    def passed(self) -> bool:
        return self.increasing_ok and self.decreasing_ok

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "a_over_sqrt_t": self.a_over_sqrt_t,
            "a_over_t": self.a_over_t,
            "in_clamp": self.in_clamp,
            "increasing_ok": self.increasing_ok,
            "decreasing_ok": self.decreasing_ok,
            "passed": self.passed,
            "flags": self.flags,
        }


def validate_scaling(a, t_grid) -> ScalingValidation:
    """Check the growth conditions of ``a`` along a finite grid.

    ``a(t)/sqrt(t)`` must increase and ``a(t)/t`` must decrease between
    consecutive grid points outside the clamp region (where ``a`` sits at its
    floor and both conditions say nothing).
    """
    t = np.asarray(t_grid, dtype=np.float64)
    if t.size == 0:
        raise EmptyGrid("t_grid must be nonempty")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be positive and strictly increasing")
    at = np.asarray(a(t), dtype=np.float64)
    floor = getattr(a, "domain_floor", 1.0)
    raw = t ** a.gamma if isinstance(a, ScalingFunction) else at
    in_clamp = raw <= floor
    up = at / np.sqrt(t)
    down = at / t
    flags = []
    live = ~in_clamp
    if not live.any():
        flags.append("clamp region, conditions vacuous")
    inc_ok = bool(np.all(np.diff(up[live]) > 0)) if live.sum() > 1 else True
    dec_ok = bool(np.all(np.diff(down[live]) < 0)) if live.sum() > 1 else True
    if not inc_ok:
        flags.append("a(t)/sqrt(t) not increasing above the clamp")
    if not dec_ok:
        flags.append("a(t)/t not decreasing above the clamp")
    return ScalingValidation(
        t=t.tolist(),
        a_over_sqrt_t=up.tolist(),
        a_over_t=down.tolist(),
        in_clamp=in_clamp.tolist(),
        increasing_ok=inc_ok,
        decreasing_ok=dec_ok,
        flags=flags,
    )
