"""Multi-objective design-space exploration for expensive black boxes.

Prior-guided warm-up sampling, per-objective random-forest surrogates, a
random-forest feasibility filter, and an active-learning loop that peels
successive predicted Pareto layers while never re-evaluating a point.
"""

__version__ = "0.1.0"

from .forest import (
    Forest,
    ForestHyperparams,
    feature_importance,
    fit_classifier,
    fit_regressor,
    kfold_recall,
    predict_feasible_prob,
    predict_regression,
)
from .pareto import (
    EvaluationRecord,
    ParetoArchive,
    constrained_front,
    dominates,
    hvi,
    hypervolume_2d,
    objective_stddevs,
    pareto_front,
    reference_front,
)
from .priors import beta_pdf, sample_beta, sample_parameter, warmup_sample
from .rng import RngState
from .space import (
    Configuration,
    DesignSpace,
    DomainError,
    EnumerationError,
    Parameter,
    Prior,
    Scenario,
    ValidationError,
    encode,
    enumerate_space,
    parse_scenario,
    serialize_scenario,
)
from .evaluators import (
    EvaluationError,
    EvaluatorSpec,
    brute_force_front,
    evaluate_batch,
    toy_fpga,
)
from .optimizer import (
    SurrogateBundle,
    candidate_pool,
    mono_objective_best,
    predict_pareto,
    run,
    select_batch,
)

__all__ = [
    "Configuration", "DesignSpace", "DomainError", "EnumerationError",
    "EvaluationError", "EvaluationRecord", "EvaluatorSpec", "Forest",
    "ForestHyperparams", "ParetoArchive", "Parameter", "Prior", "RngState",
    "Scenario", "SurrogateBundle", "ValidationError", "beta_pdf",
    "brute_force_front", "candidate_pool", "constrained_front", "dominates",
    "encode", "enumerate_space", "evaluate_batch", "feature_importance",
    "fit_classifier", "fit_regressor", "hvi", "hypervolume_2d",
    "kfold_recall", "mono_objective_best", "objective_stddevs",
    "parse_scenario", "pareto_front", "predict_feasible_prob",
    "predict_pareto", "predict_regression", "reference_front", "run",
    "sample_beta", "sample_parameter", "select_batch", "serialize_scenario",
    "toy_fpga", "warmup_sample",
]
