"""Score construction for the supported test statistics.

Each statistic maps observed outcomes to per-unit scores under the sharp
null of no effect; downstream inference sees only the resulting
:class:`~tiltsens.study.ScoreMatrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .study import MatchedStudy, ScoreMatrix, ScoreSet

__all__ = ["ScoreSpec", "score", "parse_score_spec", "DIFF_MEANS", "MANTEL_HAENSZEL"]

_KINDS = ("diff_means", "huber_m", "aligned_rank", "mantel_haenszel", "weighted_rank_u868")


@dataclass(frozen=True)
class ScoreSpec:
    """Choice of test statistic.

    Parameters
    ----------
    kind : str
        One of ``diff_means``, ``huber_m``, ``aligned_rank``,
        ``mantel_haenszel``, ``weighted_rank_u868``.
    trim : float
        Trimming constant for ``huber_m`` (must be > 0; ``math.inf`` turns the
        kernel into the identity with no scale estimate, i.e. n_i - 1 times
        the treated-minus-control mean difference).
    score_fn : callable, optional
        Plug-in scorer for ``weighted_rank_u868``; receives the study and must
        return one score array per matched set.  The statistic is experimental:
        without a callback it raises.
    """

    kind: str
    trim: float = 2.5
    score_fn: Optional[Callable[[MatchedStudy], Sequence[np.ndarray]]] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if self.kind == "huber_m" and not self.trim > 0:
            raise ValueError(f"huber_m trim must be > 0, got {self.trim}")

    def label(self) -> str:
        if self.kind == "huber_m":
            return f"huber:{self.trim:g}"
        return {
            "diff_means": "diff",
            "aligned_rank": "arank",
            "mantel_haenszel": "mh",
            "weighted_rank_u868": "u868",
        }[self.kind]


DIFF_MEANS = ScoreSpec("diff_means")
MANTEL_HAENSZEL = ScoreSpec("mantel_haenszel")


def parse_score_spec(token: str) -> ScoreSpec:
    """Parse a CLI statistic token: ``diff | huber[:trim] | arank | mh | u868``."""
    tok = token.strip().lower()
    if tok == "diff":
        return ScoreSpec("diff_means")
    if tok == "arank":
        return ScoreSpec("aligned_rank")
    if tok == "mh":
        return ScoreSpec("mantel_haenszel")
    if tok == "u868":
        return ScoreSpec("weighted_rank_u868")
    if tok == "huber":
        return ScoreSpec("huber_m", trim=2.5)
    if tok.startswith("huber:"):
        return ScoreSpec("huber_m", trim=float(tok.split(":", 1)[1]))
    raise ValueError(f"unknown statistic token {token!r}")


def _pooled_pair_scale(study: MatchedStudy) -> float:
    """Median of all within-set pairwise absolute outcome differences."""
    diffs = []
    for s in study.sets:
        y = s.outcomes
        d = np.abs(y[:, None] - y[None, :])
        iu = np.triu_indices(len(y), k=1)
        diffs.append(d[iu])
    return float(np.median(np.concatenate(diffs)))


def _huber_scores(study: MatchedStudy, trim: float) -> list[np.ndarray]:
    if math.isinf(trim):
        scale = 1.0
    else:
        scale = _pooled_pair_scale(study)
        if scale == 0.0:
            raise ValueError(
                "huber_m scale is zero: all within-set outcomes are identical"
            )
    out = []
    for s in study.sets:
        y = s.outcomes
        d = (y[:, None] - y[None, :]) / scale
        if not math.isinf(trim):
            d = np.sign(d) * np.minimum(np.abs(d), trim)
        out.append(d.sum(axis=1))
    return out


def _aligned_rank_scores(study: MatchedStudy) -> list[np.ndarray]:
    aligned = np.concatenate([s.outcomes - s.outcomes.mean() for s in study.sets])
    ranks = rankdata(aligned, method="average")
    out, pos = [], 0
    for s in study.sets:
        out.append(ranks[pos : pos + s.size])
        pos += s.size
    return out


def score(study: MatchedStudy, spec: ScoreSpec) -> ScoreMatrix:
    """Compute per-unit scores for every matched set.

    Set means are carried alongside the scores; they are the reference point
    for all worst-case calculations downstream.

    Raises
    ------
    ValueError
        For ``mantel_haenszel`` on non-binary outcomes, for ``huber_m`` when
        every within-set pair of outcomes is tied (zero scale), and for
        ``weighted_rank_u868`` without a plug-in scorer.
    """
    if spec.kind in ("diff_means", "mantel_haenszel"):
        if spec.kind == "mantel_haenszel" and not study.outcomes_binary():
            raise ValueError("mantel_haenszel requires all outcomes in {0, 1}")
        per_set = [s.outcomes.astype(np.float64) for s in study.sets]
    elif spec.kind == "huber_m":
        per_set = _huber_scores(study, spec.trim)
    elif spec.kind == "aligned_rank":
        per_set = _aligned_rank_scores(study)
    else:  # weighted_rank_u868
        if spec.score_fn is None:
            raise ValueError(
                "weighted_rank_u868 is experimental: its score definition is not "
                "bundled; supply ScoreSpec(score_fn=...) returning one score "
                "array per matched set"
            )
        per_set = [np.asarray(q, dtype=np.float64) for q in spec.score_fn(study)]
        if len(per_set) != study.num_sets:
            raise ValueError("plug-in scorer returned the wrong number of sets")
        for s, q in zip(study.sets, per_set):
            if q.shape != s.outcomes.shape:
                raise ValueError(f"plug-in scorer: wrong score length for set {s.set_id!r}")

    return ScoreMatrix(
        tuple(
            ScoreSet(q=np.array(q, dtype=np.float64), mean=float(np.mean(q)),
                     treated_index=s.treated_index)
            for s, q in zip(study.sets, per_set)
        )
    )
