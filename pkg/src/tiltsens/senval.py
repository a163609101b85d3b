"""Sensitivity values: the changepoint gamma at which a method stops
rejecting.

A doubling scan from gamma = 1 brackets the changepoint, followed by
bisection to the requested width.  A single crossing is assumed; for the
adaptive method (whose statistic comes from a numerical solver) the scan is
checked for a single sign change and falls back to the smallest observed
acceptance point with a warning if that fails.
"""

from __future__ import annotations

from dataclasses import dataclass

from .adaptive import game_solve
from .conventional import conventional_pvalue
from .scores import ScoreSpec, score
from .study import MatchedStudy
from .tilted import tilt, tilted_pvalue, weights

__all__ = ["SensitivityReport", "sensitivity_value", "METHODS"]

METHODS = ("conventional", "tilted", "adaptive")


@dataclass(frozen=True)
class SensitivityReport:
    """Changepoint search outcome for one method.

    ``status`` is ``"found"`` (``senval`` set), ``"not_rejected_at_gamma_one"``
    or ``"exceeds_gamma_max"``.  ``gamma_grid`` records every evaluation as
    ``(gamma, statistic, reject)`` sorted by gamma, where the statistic is
    the standardized deviate (conventional/tilted) or the game value
    (adaptive).
    """

    method: str
    weight_family: str
    alpha: float
    tol: float
    gamma_max: float
    gamma_grid: tuple[tuple[float, float, bool], ...]
    senval: float | None
    status: str
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "weight_family": self.weight_family,
            "alpha": self.alpha,
            "tol": self.tol,
            "gamma_max": self.gamma_max,
            "senval": self.senval,
            "status": self.status,
            "warning": self.warning,
            "gamma_grid": [
                {"gamma": g, "statistic": s, "reject": r}
                for g, s, r in self.gamma_grid
            ],
        }


def _evaluator(study: MatchedStudy, spec: ScoreSpec, method: str,
               alpha: float, weight_family: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    scores = score(study, spec)

    if method == "conventional":
        def ev(gamma: float):
            r = conventional_pvalue(scores, gamma, alpha)
            return r.deviate, r.reject
    elif method == "tilted":
        def ev(gamma: float):
            r = tilted_pvalue(tilt(scores, gamma),
                              weights(scores, gamma, weight_family), alpha)
            return r.deviate, r.reject
    else:
        def ev(gamma: float):
            r = game_solve(scores, gamma, weight_family, alpha)
            return r.b, r.reject
    return ev


def sensitivity_value(study: MatchedStudy, spec: ScoreSpec, method: str,
                      alpha: float = 0.05, gamma_max: float = 1000.0,
                      tol: float = 1e-4,
                      weight_family: str = "unit") -> SensitivityReport:
    """Largest gamma at which ``method`` still rejects at level ``alpha``.

    Returns a report whose ``senval`` is the bisection midpoint (width
    ``tol``), or a sentinel status when the method does not reject even at
    gamma = 1 or still rejects at ``gamma_max``.
    """
    if gamma_max < 1.0:
        raise ValueError(f"gamma_max must be >= 1, got {gamma_max}")
    if not tol > 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    ev = _evaluator(study, spec, method, alpha, weight_family)
    evaluations: dict[float, tuple[float, bool]] = {}

    def reject_at(g: float) -> bool:
        if g not in evaluations:
            evaluations[g] = ev(g)
        return evaluations[g][1]

    warning = None
    if not reject_at(1.0):
        senval, status = None, "not_rejected_at_gamma_one"
    elif reject_at(gamma_max):
        senval, status = None, "exceeds_gamma_max"
    else:
        lo = 1.0
        hi = min(2.0, gamma_max)
        while reject_at(hi):
            lo = hi
            hi = min(hi * 2.0, gamma_max)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if reject_at(mid):
                lo = mid
            else:
                hi = mid
        senval, status = 0.5 * (lo + hi), "found"

    grid = tuple(sorted((g, s, r) for g, (s, r) in evaluations.items()))

    # Guards: deviates should fall with gamma; rejections should cross once.
    if method in ("conventional", "tilted"):
        stats = [s for _, s, _ in grid]
        if any(b > a + 1e-9 for a, b in zip(stats, stats[1:])):
            warning = "deviate not monotone nonincreasing across the scan grid"
    rejects = [r for _, _, r in grid]
    crossings = sum(1 for a, b in zip(rejects, rejects[1:]) if a != b)
    if status == "found" and crossings != 1:
        warning = "multiple rejection sign changes across the scan grid"
        if method == "adaptive":
            senval = min(g for g, _, r in grid if not r)
    return SensitivityReport(
        method=method, weight_family=weight_family, alpha=alpha, tol=tol,
        gamma_max=gamma_max, gamma_grid=grid, senval=senval, status=status,
        warning=warning,
    )
