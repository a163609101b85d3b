"""Superpopulation Monte-Carlo engine.

Generates matched studies from a fixed-effects-plus-error model with one
treated unit per set, estimates the limiting quantities driving design
sensitivity, compares the tilted and conventional approaches, and estimates
power curves for all three methods.

Sampling is counter-based: every replicate owns a disjoint Philox counter
block keyed by the spec seed, and all error draws come from inverse CDFs
applied to that uniform stream.  Identical specs therefore reproduce
bit-identical studies, replicates may be computed in any order (or in
parallel), and competing methods see common random numbers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri, stdtrit

from .adaptive import game_solve_arrays
from .conventional import tilt_factor
from .scores import ScoreSpec
from .study import MatchedSet, MatchedStudy
from .tilted import WEIGHT_FAMILIES

__all__ = [
    "FAMILIES",
    "GenerativeSpec",
    "simulate_study",
    "LimitEstimates",
    "estimate_limits",
    "DesignEstimate",
    "design_sensitivity_tilted",
    "design_sensitivity_conventional",
    "HeuristicResult",
    "comparison_heuristic",
    "BoundsResult",
    "mad_approximation_bounds",
    "PowerTable",
    "power_curve",
    "ControlsRow",
    "design_by_num_controls",
    "DominanceResult",
    "mad_dominance_check",
]

# Variance of a treated-minus-control error difference, per family.
_SIGMA2 = {
    "normal": 2.0,
    "t3": 6.0,
    "double_exponential": 4.0,
    "exp1_minus_1": 2.0,
    "one_minus_exp1": 2.0,
}
FAMILIES = tuple(_SIGMA2)

_MASK64 = (1 << 64) - 1
_KEY_CONST = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class GenerativeSpec:
    """Superpopulation model: set fixed effects plus iid unit errors.

    ``effect_ratio`` is the treatment effect in units of the standard
    deviation of a treated-minus-control error difference (analytic per
    family, not estimated).  ``alpha_sd`` > 0 draws iid normal set fixed
    effects; the default 0 pins them to zero (they cancel from every
    supported statistic either way).
    """

    family: str
    effect_ratio: float
    controls: int
    n_sets: int
    seed: int
    alpha_sd: float = 0.0

    def __post_init__(self):
        if self.family not in _SIGMA2:
            raise ValueError(f"unknown error family {self.family!r}")
        if self.effect_ratio < 0:
            raise ValueError("effect_ratio must be >= 0")
        if self.controls < 1 or self.n_sets < 1:
            raise ValueError("need at least 1 control and 1 matched set")

    @property
    def set_size(self) -> int:
        return self.controls + 1

    @property
    def sigma(self) -> float:
        return math.sqrt(_SIGMA2[self.family])

    @property
    def tau(self) -> float:
        return self.effect_ratio * self.sigma


def _inverse_cdf(family: str, u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 2.0**-55, 1.0 - 2.0**-53)
    if family == "normal":
        return ndtri(u)
    if family == "t3":
        return stdtrit(3, u)
    if family == "double_exponential":
        return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
    if family == "exp1_minus_1":
        return -np.log1p(-u) - 1.0
    return 1.0 + np.log1p(-u)  # one_minus_exp1


def _replicate_rng(spec: GenerativeSpec, replicate: int) -> np.random.Generator:
    bg = np.random.Philox(key=[spec.seed & _MASK64, _KEY_CONST],
                          counter=int(replicate) << 192)
    return np.random.Generator(bg)


def _simulate_matrix(spec: GenerativeSpec, replicate: int = 0):
    """One replicate as dense arrays: outcomes (I, n) and treated column."""
    rng = _replicate_rng(spec, replicate)
    n, i = spec.set_size, spec.n_sets
    alpha = spec.alpha_sd * ndtri(np.clip(rng.random(i), 2.0**-55, 1.0 - 2.0**-53))
    u = rng.random((i, n, 2))
    eps0 = _inverse_cdf(spec.family, u[:, :, 0])
    eps1 = _inverse_cdf(spec.family, u[:, :, 1])
    tcol = np.minimum((rng.random(i) * n).astype(np.int64), n - 1)
    treated = np.arange(n)[None, :] == tcol[:, None]
    y = alpha[:, None] + np.where(treated, spec.tau + eps1, eps0)
    return y, tcol


def simulate_study(spec: GenerativeSpec, replicate: int = 0) -> MatchedStudy:
    """Materialize one replicate as a validated study."""
    y, tcol = _simulate_matrix(spec, replicate)
    width = len(str(spec.n_sets))
    return MatchedStudy(tuple(
        MatchedSet(set_id=f"s{k + 1:0{width}d}", outcomes=y[k].copy(),
                   treated_index=int(tcol[k]))
        for k in range(spec.n_sets)
    ))


# ---------------------------------------------------------------------------
# batch scoring and worst-case kernels (equal set sizes)

def _score_batch(y: np.ndarray, tcol: np.ndarray, stat: ScoreSpec) -> np.ndarray:
    """Per-unit scores as an (I, n) matrix; mirrors tiltsens.scores.score."""
    if stat.kind in ("diff_means", "mantel_haenszel"):
        if stat.kind == "mantel_haenszel" and not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("mantel_haenszel requires all outcomes in {0, 1}")
        return np.array(y, dtype=np.float64)
    if stat.kind == "huber_m":
        d = y[:, :, None] - y[:, None, :]
        if math.isinf(stat.trim):
            return d.sum(axis=2)
        iu = np.triu_indices(y.shape[1], k=1)
        scale = float(np.median(np.abs(d[:, iu[0], iu[1]])))
        if scale == 0.0:
            raise ValueError("huber_m scale is zero")
        d = d / scale
        return (np.sign(d) * np.minimum(np.abs(d), stat.trim)).sum(axis=2)
    if stat.kind == "aligned_rank":
        from scipy.stats import rankdata

        aligned = y - y.mean(axis=1, keepdims=True)
        return rankdata(aligned.ravel(), method="average").reshape(y.shape)
    raise ValueError(f"statistic {stat.kind!r} not supported by the batch engine")


def _mad_batch(sorted_desc: np.ndarray, gamma: float) -> np.ndarray:
    """Worst-case dispersion scale per row of centered scores sorted
    decreasing (the exact solution of the per-set fractional program)."""
    n = sorted_desc.shape[1]
    k = tilt_factor(gamma)
    num = np.cumsum(sorted_desc, axis=1)[:, : n - 1]
    a = np.arange(1, n)
    den = 0.5 * n + k * (a - 0.5 * n)
    return np.maximum((num / den).max(axis=1), 0.0)


def _worst_mu_var_batch(sorted_desc: np.ndarray, gamma: float):
    """Worst-case centered expectation and (tie-resolved) variance per row."""
    n = sorted_desc.shape[1]
    cs = np.cumsum(sorted_desc, axis=1)
    cs2 = np.cumsum(sorted_desc * sorted_desc, axis=1)
    a = np.arange(1, n)
    denom = gamma * a + (n - a)
    e = (gamma - 1.0) * cs[:, : n - 1] / denom
    v = (gamma * cs2[:, : n - 1] + (cs2[:, -1:] - cs2[:, : n - 1])) / denom - e * e
    best = e.max(axis=1, keepdims=True)
    tol = 1e-12 * np.maximum(1.0, np.abs(best))
    var = np.where(e >= best - tol, v, -np.inf).max(axis=1)
    return best[:, 0], np.maximum(var, 0.0)


def _tilt_batch(centered: np.ndarray, qbar: np.ndarray, gamma: float):
    """Tilted score matrix, worst-case variance, and above-mean counts."""
    k = tilt_factor(gamma)
    above = centered > 1e-12 * (1.0 + np.abs(qbar))[:, None]
    n_above = above.sum(axis=1)
    values = centered - k * np.abs(centered)
    n = centered.shape[1]
    ssq = (centered * centered / np.where(above, gamma, 1.0)).sum(axis=1)
    var = (4.0 * gamma * gamma / (1.0 + gamma) ** 2) * ssq / (n + (gamma - 1.0) * n_above)
    return values, var, n_above


def _batch_weights(family: str, n: int, n_above: np.ndarray, gamma: float) -> np.ndarray:
    if family not in WEIGHT_FAMILIES:
        raise ValueError(f"unknown weight family {family!r}")
    if family == "unit":
        return np.ones(n_above.shape[0])
    denom = n + (gamma - 1.0) * n_above
    if family == "sign_score":
        return 0.5 * (gamma + 1.0) * n / denom
    return (gamma + 1.0) / (2.0 * gamma) * denom / n


# ---------------------------------------------------------------------------
# limit estimates

@dataclass(frozen=True)
class LimitEstimates:
    """Monte-Carlo estimates of the limiting design-sensitivity quantities.

    ``mean_dev`` estimates the limit of the average centered treated score,
    ``mean_abs_dev`` the limit of its absolute counterpart, and
    ``mad_by_gamma`` tabulates the average worst-case dispersion scale at the
    requested gammas.  The underlying replicate pool is retained so that the
    conventional design sensitivity can re-evaluate the dispersion curve on
    common random numbers.
    """

    spec: GenerativeSpec
    stat_label: str
    mean_dev: float
    se_mean_dev: float
    mean_abs_dev: float
    se_mean_abs_dev: float
    mad_by_gamma: tuple[tuple[float, float, float], ...]
    cov_dev_abs: float
    _treated_dev: np.ndarray
    _centered: np.ndarray
    _sorted_desc: np.ndarray

    @property
    def n_sets(self) -> int:
        return self._treated_dev.shape[0]

    def mad_mean(self, gamma: float) -> float:
        """Average worst-case dispersion scale at ``gamma`` on this pool."""
        return float(math.fsum(_mad_batch(self._sorted_desc, gamma)) / self.n_sets)

    def g_hat(self, t) -> np.ndarray:
        """Per-set empirical CDF of centered scores evaluated at ``t``."""
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (self.n_sets,))
        return (self._centered <= t[:, None]).mean(axis=1)


def estimate_limits(spec: GenerativeSpec, stat: ScoreSpec,
                    gamma_list=()) -> LimitEstimates:
    """Estimate the limiting quantities from one simulated pool of sets.

    Scores are recomputed from the simulated observed outcomes, including
    any pooled scale or rank steps.
    """
    y, tcol = _simulate_matrix(spec, replicate=0)
    q = _score_batch(y, tcol, stat)
    return _limits_from_scores(spec, stat, q, tcol, gamma_list)


def _limits_from_scores(spec: GenerativeSpec, stat: ScoreSpec, q: np.ndarray,
                        tcol: np.ndarray, gamma_list=()) -> LimitEstimates:
    qbar = q.mean(axis=1)
    centered = q - qbar[:, None]
    tdev = centered[np.arange(q.shape[0]), tcol]
    sorted_desc = -np.sort(-centered, axis=1)
    i = q.shape[0]
    mean_dev = math.fsum(tdev) / i
    abs_dev = np.abs(tdev)
    mean_abs = math.fsum(abs_dev) / i
    cov = float(np.cov(tdev, abs_dev, ddof=1)[0, 1]) if i > 1 else 0.0
    table = []
    for g in gamma_list:
        m = _mad_batch(sorted_desc, g)
        table.append((float(g), math.fsum(m) / i, float(np.std(m, ddof=1) / math.sqrt(i))))
    return LimitEstimates(
        spec=spec,
        stat_label=stat.label(),
        mean_dev=mean_dev,
        se_mean_dev=float(np.std(tdev, ddof=1) / math.sqrt(i)),
        mean_abs_dev=mean_abs,
        se_mean_abs_dev=float(np.std(abs_dev, ddof=1) / math.sqrt(i)),
        mad_by_gamma=tuple(table),
        cov_dev_abs=cov,
        _treated_dev=tdev,
        _centered=centered,
        _sorted_desc=sorted_desc,
    )


@dataclass(frozen=True)
class DesignEstimate:
    """Design sensitivity estimate with a delta-method standard error.

    ``status`` is ``"ok"``, ``"le_one"`` (no favorable effect: the design
    sensitivity is at most 1) or ``"infinite"`` (the crossing lies beyond
    every finite gamma probed).
    """

    value: float | None
    se: float | None
    status: str


def design_sensitivity_tilted(est: LimitEstimates) -> DesignEstimate:
    """Closed-form design sensitivity of the tilted analysis."""
    th, eta = est.mean_dev, est.mean_abs_dev
    if th <= 0.0:
        return DesignEstimate(None, None, "le_one")
    if eta <= th:
        return DesignEstimate(None, None, "infinite")
    value = (eta + th) / (eta - th)
    gap2 = (eta - th) ** 2
    g_th, g_eta = 2.0 * eta / gap2, -2.0 * th / gap2
    i = est.n_sets
    var = (
        g_th * g_th * est.se_mean_dev**2
        + g_eta * g_eta * est.se_mean_abs_dev**2
        + 2.0 * g_th * g_eta * est.cov_dev_abs / i
    )
    return DesignEstimate(value, math.sqrt(max(var, 0.0)), "ok")


def design_sensitivity_conventional(est: LimitEstimates,
                                    gamma_cap: float = 1000.0) -> DesignEstimate:
    """Design sensitivity of the conventional analysis by root finding.

    Solves for the gamma at which the estimated effect equals the shrunken
    worst-case dispersion mean, re-estimating that mean on the same
    replicate pool at every probe.
    """
    th = est.mean_dev
    if th <= 0.0:
        return DesignEstimate(None, None, "le_one")

    def g(gamma: float) -> float:
        return th - tilt_factor(gamma) * est.mad_mean(gamma)

    if g(gamma_cap) > 0.0:
        return DesignEstimate(None, None, "infinite")
    lo, hi = 1.0, gamma_cap
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    k = tilt_factor(root)
    resid = est._treated_dev - k * _mad_batch(est._sorted_desc, root)
    se_g = float(np.std(resid, ddof=1) / math.sqrt(est.n_sets))
    h = 1e-4 * root
    slope = (g(root + h) - g(max(root - h, 1.0))) / (root + h - max(root - h, 1.0))
    se = se_g / abs(slope) if slope != 0.0 else None
    return DesignEstimate(root, se, "ok")


@dataclass(frozen=True)
class HeuristicResult:
    """Pooled-dispersion heuristic for the tilted-vs-conventional ordering.

    A positive value predicts that the tilted analysis has the larger design
    sensitivity (the pooled mean absolute deviation about the effect
    estimate approximates the worst-case dispersion mean at the crossing,
    and the tilted analysis wins exactly when that mean exceeds the average
    absolute centered treated score).
    """

    value: float
    se: float
    predicts_tilted_better: bool


def comparison_heuristic(est: LimitEstimates) -> HeuristicResult:
    per_set = np.abs(est._centered - est.mean_dev).mean(axis=1) - np.abs(est._treated_dev)
    value = math.fsum(per_set) / est.n_sets
    se = float(np.std(per_set, ddof=1) / math.sqrt(est.n_sets))
    return HeuristicResult(value=value, se=se, predicts_tilted_better=value > 0.0)


@dataclass(frozen=True)
class BoundsResult:
    """Subgradient bounds on the gap between the average worst-case
    dispersion scale and the pooled mean absolute deviation about ``t``."""

    lb: float
    mid: float
    ub: float
    se_lb: float
    se_mid: float
    se_ub: float


def mad_approximation_bounds(q_matrix: np.ndarray, gamma: float, t) -> BoundsResult:
    """Evaluate the bounds at ``t`` (scalar or one value per set)."""
    q = np.asarray(q_matrix, dtype=np.float64)
    i, _ = q.shape
    centered = q - q.mean(axis=1, keepdims=True)
    sorted_desc = -np.sort(-centered, axis=1)
    m = _mad_batch(sorted_desc, gamma)
    k = tilt_factor(gamma)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (i,))
    g_t = (centered <= t[:, None]).mean(axis=1)
    g_km = (centered <= (k * m)[:, None]).mean(axis=1)
    lb_terms = (k * m - t) * (2.0 * g_t - 1.0)
    mid_terms = m - np.abs(centered - t[:, None]).mean(axis=1)
    ub_terms = (k * m - t) * (2.0 * g_km - 1.0)

    def agg(x):
        return math.fsum(x) / i, float(np.std(x, ddof=1) / math.sqrt(i))

    lb, se_lb = agg(lb_terms)
    mid, se_mid = agg(mid_terms)
    ub, se_ub = agg(ub_terms)
    return BoundsResult(lb=lb, mid=mid, ub=ub, se_lb=se_lb, se_mid=se_mid, se_ub=se_ub)


# ---------------------------------------------------------------------------
# power curves

@dataclass(frozen=True)
class PowerTable:
    """Rejection rates (with MC standard errors) per gamma and method."""

    spec: GenerativeSpec
    stat_label: str
    alpha: float
    reps: int
    gammas: tuple[float, ...]
    methods: tuple[str, ...]
    rates: np.ndarray
    ses: np.ndarray

    def rows(self):
        for gi, g in enumerate(self.gammas):
            for mi, m in enumerate(self.methods):
                yield {"gamma": g, "method": m,
                       "rate": float(self.rates[gi, mi]),
                       "se": float(self.ses[gi, mi])}

    def rate_of(self, method: str) -> np.ndarray:
        return self.rates[:, self.methods.index(method)]


def _power_counts(spec: GenerativeSpec, stat: ScoreSpec, methods, alpha: float,
                  gammas, rep_lo: int, rep_hi: int, weight_family: str) -> np.ndarray:
    z = float(ndtri(1.0 - alpha))
    counts = np.zeros((len(gammas), len(methods)), dtype=np.int64)
    for rep in range(rep_lo, rep_hi):
        y, tcol = _simulate_matrix(spec, replicate=rep)
        q = _score_batch(y, tcol, stat)
        qbar = q.mean(axis=1)
        centered = q - qbar[:, None]
        rows = np.arange(q.shape[0])
        tdev = centered[rows, tcol]
        sorted_desc = -np.sort(-centered, axis=1)
        sum_tdev = float(tdev.sum())
        for gi, gamma in enumerate(gammas):
            k = tilt_factor(gamma)
            tilted_vals, tilted_var, n_above = _tilt_batch(centered, qbar, gamma)
            w = _batch_weights(weight_family, q.shape[1], n_above, gamma)
            for mi, method in enumerate(methods):
                if method == "conventional":
                    mu_c, var = _worst_mu_var_batch(sorted_desc, gamma)
                    tot_var = float(var.sum())
                    if tot_var <= 0.0:
                        continue
                    dev = (sum_tdev - float(mu_c.sum())) / math.sqrt(tot_var)
                    counts[gi, mi] += dev >= z
                elif method == "tilted":
                    num = float((w * tilted_vals[rows, tcol]).sum())
                    tot_var = float((w * w * tilted_var).sum())
                    if tot_var <= 0.0:
                        continue
                    counts[gi, mi] += num / math.sqrt(tot_var) >= z
                elif method == "adaptive":
                    res = game_solve_arrays(q, w[:, None] * tilted_vals, tcol,
                                            gamma, alpha)
                    counts[gi, mi] += res.reject
                else:
                    raise ValueError(f"unknown method {method!r}")
    return counts


def _resolve_jobs(n_jobs) -> int:
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get("TILTSENS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def power_curve(spec: GenerativeSpec, stat: ScoreSpec,
                methods=("conventional", "tilted", "adaptive"),
                alpha: float = 0.05, gamma_grid=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0),
                reps: int = 1000, weight_family: str = "unit",
                n_jobs=None, progress=None) -> PowerTable:
    """Estimate rejection rates per method over a gamma grid.

    Each replicate simulates a fresh study from ``spec`` (with its own
    counter block, so results are independent of scheduling), applies every
    method at every gamma, and the rates aggregate the rejection indicators.
    ``progress`` (optional) is called as ``progress(done, total)`` after each
    block of replicates.
    """
    gammas = tuple(float(g) for g in gamma_grid)
    methods = tuple(methods)
    jobs = _resolve_jobs(n_jobs)
    blocks = max(jobs, min(20, reps))
    bounds = np.unique(np.linspace(0, reps, blocks + 1).astype(int))
    chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    counts = np.zeros((len(gammas), len(methods)), dtype=np.int64)
    if jobs <= 1 or reps < 4 * jobs:
        done = 0
        for lo, hi in chunks:
            counts += _power_counts(spec, stat, methods, alpha, gammas, lo, hi,
                                    weight_family)
            done = hi
            if progress is not None:
                progress(done, reps)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_power_counts, spec, stat, methods, alpha,
                                   gammas, lo, hi, weight_family)
                       for lo, hi in chunks]
            done = 0
            for (lo, hi), fut in zip(chunks, futures):
                counts += fut.result()
                done += hi - lo
                if progress is not None:
                    progress(done, reps)
    rates = counts / reps
    ses = np.sqrt(rates * (1.0 - rates) / reps)
    return PowerTable(spec=spec, stat_label=stat.label(), alpha=alpha, reps=reps,
                      gammas=gammas, methods=methods, rates=rates, ses=ses)


# ---------------------------------------------------------------------------
# number-of-controls sweep and dominance diagnostics

@dataclass(frozen=True)
class ControlsRow:
    controls: int
    theta: float
    se_theta: float
    eta: float
    se_eta: float
    design: DesignEstimate


def design_by_num_controls(family: str, stat: ScoreSpec, effect_ratio: float,
                           controls_list, n_sets: int, seed: int) -> list[ControlsRow]:
    """Tilted design sensitivity as the number of matched controls grows.

    Only statistics with per-set mean-zero scores qualify (the per-control
    scaling below relies on it); the effect estimate should not move with
    the number of controls, while its absolute counterpart shrinks.
    """
    out = []
    for j in controls_list:
        spec = GenerativeSpec(family=family, effect_ratio=effect_ratio,
                              controls=int(j), n_sets=n_sets, seed=seed)
        y, tcol = _simulate_matrix(spec, replicate=0)
        q = _score_batch(y, tcol, stat)
        if np.abs(q.mean(axis=1)).max() > 1e-8 * (np.abs(q).max() + 1.0):
            raise ValueError("statistic is not per-set mean zero; "
                             "the per-control scaling does not apply")
        est = _limits_from_scores(spec, stat, q, tcol)
        out.append(ControlsRow(
            controls=int(j),
            theta=est.mean_dev / j,
            se_theta=est.se_mean_dev / j,
            eta=est.mean_abs_dev / j,
            se_eta=est.se_mean_abs_dev / j,
            design=design_sensitivity_tilted(est),
        ))
    return out


@dataclass(frozen=True)
class DominanceResult:
    """Empirical-CDF stochastic-dominance check of the worst-case dispersion
    scale over the per-set mean absolute deviation."""

    dominated: bool
    max_cdf_gap: float
    dkw_band: float


def mad_dominance_check(n: int, rho: float, gamma: float, reps: int,
                        seed: int = 0) -> DominanceResult:
    """Monte-Carlo dominance check under an exchangeable-normal score model."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("exchangeable correlation must lie in [0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(77,)))
    shared = rng.standard_normal((reps, 1))
    x = math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * rng.standard_normal((reps, n))
    centered = x - x.mean(axis=1, keepdims=True)
    m = _mad_batch(-np.sort(-centered, axis=1), gamma)
    mean_abs = np.abs(centered).mean(axis=1)
    grid = np.sort(np.concatenate([m, mean_abs]))
    cdf_m = np.searchsorted(np.sort(m), grid, side="right") / reps
    cdf_a = np.searchsorted(np.sort(mean_abs), grid, side="right") / reps
    gap = float(np.max(cdf_m - cdf_a))
    band = math.sqrt(math.log(2.0 / 0.01) / (2.0 * reps))
    return DominanceResult(dominated=gap <= band, max_cdf_gap=gap, dkw_band=band)
