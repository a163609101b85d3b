"""Matched-study data model, validation, and file ingestion.

A matched study is an ordered collection of matched sets, each holding one
treated unit and at least one control.  Files come in two mirror formats:

* CSV with header ``set_id,treated,outcome`` (``#`` comment lines skipped),
* JSON with the same schema (``{"sets": [{"set_id", "units": [...]}]}``).

Units keep file order; sets are ordered by first appearance.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StudyValidationError",
    "MatchedSet",
    "MatchedStudy",
    "ScoreSet",
    "ScoreMatrix",
    "load_csv",
    "load_json",
    "write_csv",
    "write_json",
    "statistic_total",
]


class StudyValidationError(ValueError):
    """Raised when a matched study violates a structural invariant."""


@dataclass(frozen=True)
class MatchedSet:
    """One matched set: outcomes in file order plus the treated position."""

    set_id: str
    outcomes: np.ndarray
    treated_index: int

    @property
    def size(self) -> int:
        return self.outcomes.shape[0]


@dataclass(frozen=True)
class MatchedStudy:
    """A validated sequence of matched sets (immutable after construction)."""

    sets: tuple[MatchedSet, ...]

    def __post_init__(self):
        seen = set()
        for s in self.sets:
            if s.set_id in seen:
                raise StudyValidationError(f"duplicate set_id {s.set_id!r}")
            seen.add(s.set_id)
            if s.size < 2:
                raise StudyValidationError(
                    f"set {s.set_id!r} has {s.size} unit(s); need at least 2"
                )
            if not (0 <= s.treated_index < s.size):
                raise StudyValidationError(
                    f"set {s.set_id!r}: treated_index {s.treated_index} out of range"
                )
            if not np.all(np.isfinite(s.outcomes)):
                raise StudyValidationError(
                    f"set {s.set_id!r} has a non-finite outcome"
                )
            s.outcomes.flags.writeable = False

    @property
    def num_sets(self) -> int:
        return len(self.sets)

    def set_sizes(self) -> list[int]:
        return [s.size for s in self.sets]

    def outcomes_binary(self) -> bool:
        """True when every outcome is 0 or 1 (checked, never inferred silently)."""
        return all(np.isin(s.outcomes, (0.0, 1.0)).all() for s in self.sets)


@dataclass(frozen=True)
class ScoreSet:
    """Per-set unit scores for a fixed statistic, with their mean."""

    q: np.ndarray
    mean: float
    treated_index: int

    def __post_init__(self):
        n = self.q.shape[0]
        if not (0 <= self.treated_index < n):
            raise ValueError(f"treated_index {self.treated_index} out of range")
        m = float(np.mean(self.q))
        if abs(self.mean - m) > 1e-12 * (1.0 + abs(m)):
            raise ValueError(
                f"stored set mean {self.mean!r} does not match score mean {m!r}"
            )
        self.q.flags.writeable = False

    @property
    def size(self) -> int:
        return self.q.shape[0]

    @property
    def treated_score(self) -> float:
        return float(self.q[self.treated_index])


@dataclass(frozen=True)
class ScoreMatrix:
    """Scores for all matched sets of a study, in study order."""

    sets: tuple[ScoreSet, ...]

    @property
    def num_sets(self) -> int:
        return len(self.sets)


def _make_set(set_id: str, rows: list[tuple[bool, float]]) -> MatchedSet:
    treated = [k for k, (t, _) in enumerate(rows) if t]
    if len(treated) != 1:
        raise StudyValidationError(
            f"set {set_id!r} has {len(treated)} treated units; exactly 1 required"
        )
    outcomes = np.array([y for _, y in rows], dtype=np.float64)
    return MatchedSet(set_id=set_id, outcomes=outcomes, treated_index=treated[0])


def _build_study(order: list[str], rows_by_set: dict[str, list]) -> MatchedStudy:
    return MatchedStudy(tuple(_make_set(sid, rows_by_set[sid]) for sid in order))


def load_csv(path: str | os.PathLike) -> MatchedStudy:
    """Load a matched study from a CSV file.

    Expected header is ``set_id,treated,outcome`` with ``treated`` in {0, 1}
    and a finite real ``outcome``.  Lines beginning with ``#`` are skipped.
    Rows with a repeated ``set_id`` append to that set in file order.

    Raises
    ------
    StudyValidationError
        On malformed rows (with the offending line number) or on structural
        violations (missing/multiple treated units, sets smaller than 2).
    """
    order: list[str] = []
    rows_by_set: dict[str, list] = {}
    with open(path, encoding="utf-8") as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                if header != ["set_id", "treated", "outcome"]:
                    raise StudyValidationError(
                        f"line {lineno}: header must be 'set_id,treated,outcome', got {line!r}"
                    )
                continue
            parts = [c.strip() for c in line.split(",")]
            if len(parts) != 3:
                raise StudyValidationError(
                    f"line {lineno}: expected 3 comma-separated fields, got {len(parts)}"
                )
            sid, treated_s, outcome_s = parts
            if treated_s not in ("0", "1"):
                raise StudyValidationError(
                    f"line {lineno}: treated must be 0 or 1, got {treated_s!r}"
                )
            try:
                y = float(outcome_s)
            except ValueError:
                raise StudyValidationError(
                    f"line {lineno}: outcome {outcome_s!r} is not a real number"
                ) from None
            if not math.isfinite(y):
                raise StudyValidationError(
                    f"line {lineno}: outcome must be finite, got {outcome_s!r}"
                )
            if sid not in rows_by_set:
                order.append(sid)
                rows_by_set[sid] = []
            rows_by_set[sid].append((treated_s == "1", y))
    if header is None:
        raise StudyValidationError("empty file: no header found")
    return _build_study(order, rows_by_set)


def write_csv(study: MatchedStudy, path: str | os.PathLike) -> None:
    """Write a study as CSV, with outcomes at 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("set_id,treated,outcome\n")
        for s in study.sets:
            for j, y in enumerate(s.outcomes):
                t = 1 if j == s.treated_index else 0
                fh.write(f"{s.set_id},{t},{float(y):.17g}\n")


def load_json(path: str | os.PathLike) -> MatchedStudy:
    """Load a matched study from the JSON mirror of the CSV schema."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "sets" not in doc:
        raise StudyValidationError("JSON study must be an object with a 'sets' array")
    order: list[str] = []
    rows_by_set: dict[str, list] = {}
    for k, entry in enumerate(doc["sets"]):
        sid = entry.get("set_id")
        units = entry.get("units")
        if not isinstance(sid, str) or not isinstance(units, list):
            raise StudyValidationError(f"sets[{k}]: need 'set_id' string and 'units' list")
        if sid not in rows_by_set:
            order.append(sid)
            rows_by_set[sid] = []
        for u in units:
            treated = u.get("treated")
            y = u.get("outcome")
            if treated not in (0, 1, True, False):
                raise StudyValidationError(f"sets[{k}] ({sid!r}): treated must be 0/1")
            if not isinstance(y, (int, float)) or not math.isfinite(float(y)):
                raise StudyValidationError(f"sets[{k}] ({sid!r}): outcome must be finite")
            rows_by_set[sid].append((bool(treated), float(y)))
    return _build_study(order, rows_by_set)


def write_json(study: MatchedStudy, path: str | os.PathLike) -> None:
    """Write the JSON mirror format (floats keep full round-trip precision)."""
    doc = {
        "sets": [
            {
                "set_id": s.set_id,
                "units": [
                    {"treated": int(j == s.treated_index), "outcome": float(y)}
                    for j, y in enumerate(s.outcomes)
                ],
            }
            for s in study.sets
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def statistic_total(scores: ScoreMatrix) -> float:
    """Total statistic: sum over sets of the treated unit's score."""
    return math.fsum(s.treated_score for s in scores.sets)
