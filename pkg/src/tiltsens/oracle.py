"""Brute-force reference computations.

Everything here is deliberately exhaustive: exact assignment distributions
for small studies, exhaustive confounder searches per matched set, and a
direct Monte-Carlo estimate of the adaptive statistic's null tail.  These
are the ground truth the fast implementations are tested against, and they
fail hard (never truncate) when an instance exceeds their enumeration
guards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .study import ScoreMatrix

__all__ = [
    "ExactDistribution",
    "exact_distribution",
    "exact_tail",
    "WorstU",
    "exhaustive_worst_u",
    "chi_bar_mc",
]

_MAX_ASSIGNMENTS = 10**6
_MAX_GRID_POINTS = 4 * 10**6


@dataclass(frozen=True)
class ExactDistribution:
    """Exact distribution of the total statistic at a fixed bias pattern."""

    support: tuple[tuple[float, float], ...]
    u_config: tuple[np.ndarray, ...]

    def tail(self, threshold: float) -> float:
        return math.fsum(p for v, p in self.support if v >= threshold)


def _set_probs(n: int, gamma: float, u: np.ndarray) -> np.ndarray:
    w = np.exp(np.log(gamma) * u) if gamma > 1.0 else np.ones(n)
    return w / w.sum()


def exact_distribution(scores: ScoreMatrix, gamma: float, u) -> ExactDistribution:
    """Enumerate the assignment distribution of the total statistic.

    ``u`` gives one confounder value in [0, 1] per unit, as one array per
    matched set.  Assignments are independent across sets, so the support is
    built by exact convolution of the per-set distributions.

    Raises
    ------
    ValueError
        If the assignment space exceeds 10**6 (hard guard, no truncation).
    """
    u = [np.asarray(ui, dtype=np.float64) for ui in u]
    if len(u) != scores.num_sets:
        raise ValueError("need one confounder vector per matched set")
    space = 1
    for s in scores.sets:
        space *= s.size
        if space > _MAX_ASSIGNMENTS:
            raise ValueError(
                f"assignment space exceeds {_MAX_ASSIGNMENTS}; oracle refuses"
            )
    for s, ui in zip(scores.sets, u):
        if ui.shape != (s.size,) or np.any(ui < 0) or np.any(ui > 1):
            raise ValueError("confounder values must lie in [0, 1], one per unit")

    vals = np.array([0.0])
    probs = np.array([1.0])
    for s, ui in zip(scores.sets, u):
        p = _set_probs(s.size, gamma, ui)
        vals = (vals[:, None] + s.q[None, :]).ravel()
        probs = (probs[:, None] * p[None, :]).ravel()
        vals, inv = np.unique(vals, return_inverse=True)
        probs = np.bincount(inv, weights=probs)
    order = np.argsort(vals)
    support = tuple((float(v), float(p)) for v, p in zip(vals[order], probs[order]))
    return ExactDistribution(support=support, u_config=tuple(u))


def exact_tail(scores: ScoreMatrix, gamma: float, u, threshold: float) -> float:
    """Exact ``P(T >= threshold)`` at the bias pattern ``u``."""
    return exact_distribution(scores, gamma, u).tail(threshold)


@dataclass(frozen=True)
class WorstU:
    """Per-set exhaustive search result."""

    u: np.ndarray
    expectation: float
    variance: float


def _moments_for_u(q: np.ndarray, gamma: float, u: np.ndarray) -> tuple[float, float]:
    p = _set_probs(q.shape[0], gamma, u)
    mean = float(p @ q)
    return mean, float(p @ (q * q)) - mean * mean


def exhaustive_worst_u(q_set, gamma: float, objective: str = "expectation_then_variance",
                       grid_step: float | None = None) -> WorstU:
    """Search every confounder pattern of one matched set.

    Binary patterns are always enumerated; ``grid_step`` additionally sweeps
    a regular grid on [0, 1]^n (used to confirm that interior patterns never
    beat the binary extremes).  For ``objective="expectation"`` the pattern
    with the largest expectation wins; ``"expectation_then_variance"``
    breaks expectation ties (relative tolerance 1e-12) by the larger
    variance.
    """
    if objective not in ("expectation", "expectation_then_variance"):
        raise ValueError(f"unknown objective {objective!r}")
    q = np.asarray(q_set, dtype=np.float64)
    n = q.shape[0]
    if 2**n > _MAX_ASSIGNMENTS:
        raise ValueError("binary enumeration guard exceeded; oracle refuses")

    candidates = [np.array(bits, dtype=np.float64)
                  for bits in itertools.product((0.0, 1.0), repeat=n)]
    if grid_step is not None:
        m = int(round(1.0 / grid_step)) + 1
        if m**n > _MAX_GRID_POINTS:
            raise ValueError("grid enumeration guard exceeded; oracle refuses")
        levels = np.linspace(0.0, 1.0, m)
        candidates += [np.array(pt) for pt in itertools.product(levels, repeat=n)]

    best_u, best_e, best_v = None, -math.inf, -math.inf
    for u in candidates:
        e, v = _moments_for_u(q, gamma, u)
        tol = 1e-12 * max(1.0, abs(best_e)) if best_u is not None else 0.0
        if best_u is None or e > best_e + tol:
            best_u, best_e, best_v = u, e, v
        elif objective == "expectation_then_variance" and e >= best_e - tol and v > best_v:
            best_u, best_v = u, v
    return WorstU(u=best_u, expectation=best_e, variance=best_v)


def chi_bar_mc(rho: float, c: float, draws: int = 10**6, seed: int = 20240517) -> float:
    """Monte-Carlo tail of the cone-restricted squared deviate.

    Estimates ``P(sup over nonnegative weight vectors of the positive
    studentized combination, squared) >= c`` for a bivariate normal with
    correlation ``rho``.  The supremum is evaluated per draw by closed-form
    cone projection (interior case and the two edges).
    """
    if draws < 10**5:
        raise ValueError("oracle requires at least 1e5 draws")
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must be in [-1, 1], got {rho}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x1 = rng.standard_normal(draws)
    if rho == 1.0:
        b = np.maximum(x1, 0.0) ** 2
    elif rho == -1.0:
        b = x1**2
    else:
        x2 = rng.standard_normal(draws)
        z1 = x1
        z2 = rho * x1 + math.sqrt(1.0 - rho * rho) * x2
        # Interior stationary point lambda ~ Sigma^{-1} z, feasible when both
        # components are positive; otherwise the sup sits on an edge.
        g1 = z1 - rho * z2
        g2 = z2 - rho * z1
        interior = (g1 > 0) & (g2 > 0)
        quad = (z1 * g1 + z2 * g2) / (1.0 - rho * rho)
        edge = np.maximum(np.maximum(z1, z2), 0.0) ** 2
        b = np.where(interior, quad, edge)
    if c <= 0.0:
        return float(np.mean(b > 0.0))
    return float(np.mean(b >= c))
