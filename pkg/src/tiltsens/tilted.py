"""Tilted test statistics and their closed-form worst-case inference.

Tilting centers each set's scores and shrinks the part above the set mean by
the tilt factor (gamma - 1)/(gamma + 1).  Under the bias model at ``gamma``
the worst-case null expectation of the tilted contribution is exactly zero,
attained by giving every unit scoring above its set mean the largest allowed
assignment odds; the matching variance has a closed form.  Weight families
connect the tilted analysis to sign-score tests and to worst-case inverse
probability weighting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .conventional import DegenerateVarianceError, TestResult, tilt_factor
from .study import ScoreMatrix

__all__ = [
    "TiltedSet",
    "TiltedScores",
    "tilt",
    "weights",
    "worst_case_probs",
    "tilted_pvalue",
]

WEIGHT_FAMILIES = ("unit", "sign_score", "ipw")


def _above_mean(q: np.ndarray, qbar: float) -> np.ndarray:
    # Units within 1e-12*(1+|qbar|) of the mean count as below it.
    return (q - qbar) > 1e-12 * (1.0 + abs(qbar))


@dataclass(frozen=True)
class TiltedSet:
    """Tilted per-unit scores for one matched set."""

    values: np.ndarray
    n_above: int
    var: float
    treated_index: int

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def contribution(self) -> float:
        return float(self.values[self.treated_index])


@dataclass(frozen=True)
class TiltedScores:
    gamma: float
    sets: tuple[TiltedSet, ...]

    def contributions(self) -> np.ndarray:
        return np.array([s.contribution for s in self.sets])

    def variances(self) -> np.ndarray:
        return np.array([s.var for s in self.sets])


def tilt(scores: ScoreMatrix, gamma: float) -> TiltedScores:
    """Tilt every set's scores and compute the worst-case variances.

    At ``gamma = 1`` the tilted scores are simply the centered scores and the
    variance is the per-set mean squared deviation.
    """
    k = tilt_factor(gamma)
    out = []
    for s in scores.sets:
        centered = s.q - s.mean
        values = centered - k * np.abs(centered)
        above = _above_mean(s.q, s.mean)
        n_above = int(above.sum())
        denom = s.size + (gamma - 1.0) * n_above
        ssq = float(np.sum(centered * centered / np.where(above, gamma, 1.0)))
        var = (4.0 * gamma * gamma / (1.0 + gamma) ** 2) * ssq / denom
        out.append(
            TiltedSet(values=values, n_above=n_above, var=var,
                      treated_index=s.treated_index)
        )
    return TiltedScores(gamma=gamma, sets=tuple(out))


def weights(scores: ScoreMatrix, gamma: float, family: str = "unit") -> np.ndarray:
    """Per-set multipliers for the tilted statistic.

    ``unit`` leaves the tilted statistic as is.  ``sign_score`` recovers the
    conventional worst-case centering for statistics taking at most two
    distinct score values per set (e.g. Mantel-Haenszel); it requires that
    structure.  ``ipw`` normalizes by the worst-case assignment
    probabilities, giving the within-set inverse-probability-weighted
    statistic.
    """
    if family not in WEIGHT_FAMILIES:
        raise ValueError(f"unknown weight family {family!r}")
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    w = np.empty(scores.num_sets)
    for i, s in enumerate(scores.sets):
        n = s.size
        if family == "unit":
            w[i] = 1.0
            continue
        if family == "sign_score" and np.unique(s.q).size > 2:
            raise ValueError(
                f"sign_score weights need at most two distinct score values per "
                f"set; set index {i} has {np.unique(s.q).size}"
            )
        n_above = int(_above_mean(s.q, s.mean).sum())
        denom = n + (gamma - 1.0) * n_above
        if family == "sign_score":
            w[i] = 0.5 * (gamma + 1.0) * n / denom
        else:  # ipw
            w[i] = (gamma + 1.0) / (2.0 * gamma) * denom / n
    return w


def worst_case_probs(q_set, gamma: float) -> np.ndarray:
    """Assignment probabilities under the expectation-maximizing bias pattern."""
    q = np.asarray(q_set, dtype=np.float64)
    qbar = float(np.mean(q))
    above = _above_mean(q, qbar)
    raw = np.where(above, gamma, 1.0)
    return raw / raw.sum()


def tilted_pvalue(tilted: TiltedScores, set_weights=None, alpha: float = 0.05) -> TestResult:
    """One-sided p-value bound for the weighted tilted statistic.

    ``set_weights`` may be an array of per-set multipliers or ``None`` for
    unit weights.

    Raises
    ------
    DegenerateVarianceError
        If the weighted variance bound sums to zero.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must be in (0, 0.5], got {alpha}")
    w = np.ones(len(tilted.sets)) if set_weights is None else np.asarray(set_weights, float)
    if w.shape != (len(tilted.sets),) or np.any(w <= 0):
        raise ValueError("need one strictly positive weight per matched set")
    num = math.fsum(float(wi) * s.contribution for wi, s in zip(w, tilted.sets))
    var = math.fsum(float(wi) ** 2 * s.var for wi, s in zip(w, tilted.sets))
    if var <= 0.0:
        raise DegenerateVarianceError(
            "total tilted variance is zero; the deviate is undefined"
        )
    dev = num / math.sqrt(var)
    pval = float(ndtr(-dev))
    return TestResult(deviate=dev, pvalue=pval, reject=pval <= alpha,
                      gamma=tilted.gamma, alpha=alpha)
