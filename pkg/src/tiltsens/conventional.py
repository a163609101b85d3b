"""Worst-case moments and p-value bounds for sum statistics under the
odds-ratio-bounded bias model.

For a sensitivity parameter ``gamma`` >= 1, the per-set worst case over all
confounder patterns reduces to a search over the ``n_i - 1`` splits of the
scores sorted in decreasing order: the top ``a`` units get the largest
allowed assignment odds.  The expectation maximum is taken first; among
splits tied on expectation, the one with the largest variance is used.

The worst-case expectation also solves a one-dimensional fixed-point
problem in a dispersion scale (a gamma-shrunk analogue of the mean absolute
deviation), which is what the design-sensitivity machinery consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .study import ScoreMatrix

__all__ = [
    "DegenerateVarianceError",
    "tilt_factor",
    "worst_case_expectation",
    "worst_case_variance",
    "worst_case_mad",
    "mad_residual",
    "SetMoments",
    "set_moments",
    "study_moments",
    "conventional_pvalue",
    "TestResult",
]

_TIE_RTOL = 1e-12


class DegenerateVarianceError(ValueError):
    """Raised when a test's null variance bound is exactly zero."""


def tilt_factor(gamma: float) -> float:
    """Shrinkage factor (gamma - 1) / (gamma + 1) in [0, 1)."""
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return (gamma - 1.0) / (gamma + 1.0)


def _check_set(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] < 2:
        raise ValueError("a matched set needs at least 2 unit scores")
    return q


def worst_case_expectation(q_set, gamma: float) -> tuple[float, tuple[int, ...]]:
    """Largest null expectation of the treated unit's score over bias patterns.

    Returns the maximum together with every split size ``a`` attaining it
    (ties within 1e-12 relative tolerance).
    """
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    q = _check_set(q_set)
    n = q.shape[0]
    qs = np.sort(q)[::-1]
    cs = np.cumsum(qs)
    a = np.arange(1, n)
    cand = (gamma * cs[:-1] + (cs[-1] - cs[:-1])) / (gamma * a + (n - a))
    best = float(cand.max())
    tol = _TIE_RTOL * max(1.0, abs(best))
    ties = tuple(int(ai) for ai in a[cand >= best - tol])
    return best, ties


def worst_case_variance(q_set, gamma: float, argmax_sizes) -> float:
    """Largest variance among the expectation-maximizing splits."""
    q = _check_set(q_set)
    n = q.shape[0]
    qbar = float(np.mean(q))
    qs = np.sort(q)[::-1]
    c = qs - qbar
    cs = np.cumsum(c)
    cs2 = np.cumsum(c * c)
    best = -math.inf
    for a in argmax_sizes:
        denom = gamma * a + (n - a)
        mean_c = (gamma - 1.0) * cs[a - 1] / denom
        second = (gamma * cs2[a - 1] + (cs2[-1] - cs2[a - 1])) / denom
        best = max(best, second - mean_c * mean_c)
    return max(best, 0.0)


def mad_residual(q_set, gamma: float, c: float) -> float:
    """Signed residual of the worst-case dispersion fixed point at ``c``.

    Positive iff the fixed point lies above ``c``; strictly decreasing in
    ``c`` and piecewise linear.
    """
    q = _check_set(q_set)
    n = q.shape[0]
    k = tilt_factor(gamma)
    qbar = float(np.mean(q))
    return 0.5 * float(np.sum(np.abs(q - qbar - k * c))) - 0.5 * n * c


def worst_case_mad(q_set, gamma: float, tol: float = 1e-12) -> float:
    """Dispersion scale solving ``mean |q - qbar - k*c| = c`` (k the tilt factor).

    Equals the plain mean absolute deviation at ``gamma = 1`` and is 0 for
    constant scores.  Solved by bracketing plus bisection to absolute
    tolerance ``tol``.
    """
    q = _check_set(q_set)
    n = q.shape[0]
    k = tilt_factor(gamma)
    qbar = float(np.mean(q))
    dev = np.abs(q - qbar)
    if float(dev.max()) == 0.0:
        return 0.0
    lo = 0.0
    # H(c) <= sum(dev)/2 + n*(k-1)*c/2, so the root is below mad/(1-k).
    hi = float(dev.sum()) / (n * (1.0 - k)) + 1e-9
    while mad_residual(q, gamma, hi) > 0.0:  # guard against rounding at the cap
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mad_residual(q, gamma, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SetMoments:
    """Worst-case null moments of one set's treated-score contribution."""

    mu: float
    var: float
    mad: float
    argmax_sizes: tuple[int, ...]


def set_moments(q_set, gamma: float) -> SetMoments:
    """Worst-case expectation, variance, and dispersion scale for one set."""
    mu, ties = worst_case_expectation(q_set, gamma)
    var = worst_case_variance(q_set, gamma, ties)
    mad = worst_case_mad(q_set, gamma)
    return SetMoments(mu=mu, var=var, mad=mad, argmax_sizes=ties)


def study_moments(scores: ScoreMatrix, gamma: float) -> list[SetMoments]:
    return [set_moments(s.q, gamma) for s in scores.sets]


@dataclass(frozen=True)
class TestResult:
    """One-sided normal-bound test outcome."""

    deviate: float
    pvalue: float
    reject: bool
    gamma: float
    alpha: float


def conventional_pvalue(scores: ScoreMatrix, gamma: float, alpha: float = 0.05) -> TestResult:
    """Worst-case standardized deviate and upper p-value bound.

    The observed total statistic is compared against the summed worst-case
    expectations, studentized by the summed worst-case variances.

    Raises
    ------
    DegenerateVarianceError
        If every matched set is degenerate (zero worst-case variance).
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must be in (0, 0.5], got {alpha}")
    moments = study_moments(scores, gamma)
    total = math.fsum(s.treated_score for s in scores.sets)
    mu = math.fsum(m.mu for m in moments)
    var = math.fsum(m.var for m in moments)
    if var <= 0.0:
        raise DegenerateVarianceError(
            "total worst-case variance is zero; the deviate is undefined"
        )
    dev = (total - mu) / math.sqrt(var)
    pval = float(ndtr(-dev))
    return TestResult(deviate=dev, pvalue=pval, reject=pval <= alpha,
                      gamma=gamma, alpha=alpha)
