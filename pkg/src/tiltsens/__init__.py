"""Sensitivity analysis for matched observational studies under an
odds-ratio-bounded hidden-bias model: conventional separable worst-case
bounds, tilted statistics with closed-form worst cases, their adaptive
combination, sensitivity values, and Monte-Carlo design-sensitivity and
power tools."""

from .adaptive import GameResult, chi_bar_critical, chi_bar_tail, game_solve
from .conventional import (
    DegenerateVarianceError,
    SetMoments,
    TestResult,
    conventional_pvalue,
    mad_residual,
    set_moments,
    study_moments,
    tilt_factor,
    worst_case_expectation,
    worst_case_mad,
    worst_case_variance,
)
from .scores import ScoreSpec, parse_score_spec, score
from .senval import SensitivityReport, sensitivity_value
from .simulation import (
    DesignEstimate,
    GenerativeSpec,
    LimitEstimates,
    comparison_heuristic,
    design_by_num_controls,
    design_sensitivity_conventional,
    design_sensitivity_tilted,
    estimate_limits,
    mad_approximation_bounds,
    mad_dominance_check,
    power_curve,
    simulate_study,
)
from .study import (
    MatchedSet,
    MatchedStudy,
    ScoreMatrix,
    ScoreSet,
    StudyValidationError,
    load_csv,
    load_json,
    statistic_total,
    write_csv,
    write_json,
)
from .tilted import TiltedScores, tilt, tilted_pvalue, weights, worst_case_probs

__version__ = "0.1.0"

__all__ = [
    "GameResult", "chi_bar_critical", "chi_bar_tail", "game_solve",
    "DegenerateVarianceError", "SetMoments", "TestResult",
    "conventional_pvalue", "mad_residual", "set_moments", "study_moments",
    "tilt_factor", "worst_case_expectation", "worst_case_mad",
    "worst_case_variance",
    "ScoreSpec", "parse_score_spec", "score",
    "SensitivityReport", "sensitivity_value",
    "DesignEstimate", "GenerativeSpec", "LimitEstimates",
    "comparison_heuristic", "design_by_num_controls",
    "design_sensitivity_conventional", "design_sensitivity_tilted",
    "estimate_limits", "mad_approximation_bounds", "mad_dominance_check",
    "power_curve", "simulate_study",
    "MatchedSet", "MatchedStudy", "ScoreMatrix", "ScoreSet",
    "StudyValidationError", "load_csv", "load_json", "statistic_total",
    "write_csv", "write_json",
    "TiltedScores", "tilt", "tilted_pvalue", "weights", "worst_case_probs",
    "__version__",
]
