"""scikit-learn compatible front end for Good's coverage estimator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import AlphaOutOfRange, CoverageError
from .inference import ORACLE_B, SELF_NORMALIZED, ConfidenceInterval, oracle_ci, self_normalized_ci
from .sampling import OccupancySummary


def check_counts(X) -> np.ndarray:
    """Validate species counts as a 2-D nonnegative integer array.

    A 1-D vector is one sample; rows of a 2-D array are independent samples.
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    arr = check_array(arr, dtype=None, ensure_all_finite=True)
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise CoverageError("species counts must be integers")
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise CoverageError("species counts must be nonnegative")
    if np.any(arr.sum(axis=1) < 1):
        raise CoverageError("every sample needs at least one observation")
    return arr


class GoodCoverageEstimator(TransformerMixin, BaseEstimator):
    """Missing-mass estimate ``F1 / n`` with a moderate-deviation interval.

    Parameters
    ----------
    alpha : float, default=0.05
        Interval level is ``1 - alpha``; the half-width uses ``-log(alpha)``.
    interval : {"self_normalized", "oracle_b"}, default="self_normalized"
        Variance plug-in ``F1 (1 - F1/n) + 2 F2`` or the supplied ``b``.
    b : float, optional
        Exact variance constant, required for ``interval="oracle_b"``.

    Attributes
    ----------
    n_ : ndarray of shape (n_samples,)
    f1_, f2_ : ndarray of shape (n_samples,)
    missing_mass_ : ndarray of shape (n_samples,)
        Good's estimate for each fitted sample.
    intervals_ : list of ConfidenceInterval
    """

    def __init__(self, alpha=0.05, interval="self_normalized", b=None):
        self.alpha = alpha
        self.interval = interval
        self.b = b

    def _validate_params(self):
        if not (0.0 < self.alpha < 1.0):
            raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.interval not in (SELF_NORMALIZED, ORACLE_B):
            raise CoverageError(f"unknown interval kind {self.interval!r}")
        if self.interval == ORACLE_B and (self.b is None or self.b < 0):
            raise CoverageError("interval='oracle_b' needs a nonnegative b")

    def _intervals(self, counts) -> list[ConfidenceInterval]:
        out = []
        for row in counts:
            summary = OccupancySummary.from_counts(row)
            if self.interval == SELF_NORMALIZED:
                out.append(self_normalized_ci(summary, self.alpha))
            else:
                out.append(oracle_ci(summary.f1 / summary.n, summary.n, self.b, self.alpha))
        return out

    def fit(self, X, y=None):
        self._validate_params()
        counts = check_counts(X)
        self.n_features_in_ = counts.shape[1]
        self.n_ = counts.sum(axis=1)
        self.f1_ = (counts == 1).sum(axis=1)
        self.f2_ = (counts == 2).sum(axis=1)
        self.missing_mass_ = self.f1_ / self.n_
        self.intervals_ = self._intervals(counts)
        return self

    def predict(self, X):
        """Good's missing-mass estimate for each sample in ``X``."""
        check_is_fitted(self, "intervals_")
        counts = check_counts(X)
        return (counts == 1).sum(axis=1) / counts.sum(axis=1)

    def transform(self, X):
        """Columns ``(q_hat, lo, hi)`` per sample (raw, unclipped endpoints)."""
        check_is_fitted(self, "intervals_")
        self._validate_params()
        cis = self._intervals(check_counts(X))
        return np.array([[ci.center, ci.lo, ci.hi] for ci in cis])

    def coverage(self, X=None):
        """Estimated sample coverage ``1 - F1 / n``."""
        if X is None:
            check_is_fitted(self, "missing_mass_")
            return 1.0 - self.missing_mass_
        return 1.0 - self.predict(X)
