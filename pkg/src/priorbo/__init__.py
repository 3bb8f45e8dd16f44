"""Multi-objective Bayesian optimization guided by priors over the optimum.

The package couples per-objective Gaussian-process surrogates with a
randomly scalarized, prior-weighted noisy-EI acquisition, plus three
analytic robot-task benchmarks and a CLI harness for repeated, seeded
experiment campaigns.
"""

from .acquisition import (
    expected_improvement,
    maximize_acquisition,
    noisy_expected_improvement,
    prior_weighted,
    sample_scalarization,
    scalarized_acquisition,
)
from .errors import DegeneratePriorError, NumericError, ValidationError
from .optimizer import (
    ExperimentSpec,
    IterationEntry,
    RunRecord,
    bo_step,
    read_record,
    run_doe,
    run_experiment,
    write_record,
)
from .param_space import Parameter, ParameterSpace
from .pareto import (
    ParetoFront,
    dominates,
    hypervolume_2d,
    hypervolume_inclusion_exclusion,
    hypervolume_monte_carlo,
    pareto_front,
)
from .priors import (
    KdeMixturePrior,
    PriorDensity,
    TruncatedGaussianPrior,
    UniformPrior,
    build_kde_prior,
    build_operator_prior,
    prior_from_dict,
)
from .surrogate import GpHyperparameters, GpModel, log_marginal_likelihood, matern52
from .tasks import (
    EpisodeOutcome,
    TaskDefinition,
    eval_obstacle,
    eval_peg,
    eval_push,
    get_task,
    oracle_front,
    suggest_reference_point,
)

__version__ = "0.1.0"

__all__ = [
    "DegeneratePriorError",
    "EpisodeOutcome",
    "ExperimentSpec",
    "GpHyperparameters",
    "GpModel",
    "IterationEntry",
    "KdeMixturePrior",
    "NumericError",
    "Parameter",
    "ParameterSpace",
    "ParetoFront",
    "PriorDensity",
    "RunRecord",
    "TaskDefinition",
    "TruncatedGaussianPrior",
    "UniformPrior",
    "ValidationError",
    "bo_step",
    "build_kde_prior",
    "build_operator_prior",
    "dominates",
    "eval_obstacle",
    "eval_peg",
    "eval_push",
    "expected_improvement",
    "get_task",
    "hypervolume_2d",
    "hypervolume_inclusion_exclusion",
    "hypervolume_monte_carlo",
    "log_marginal_likelihood",
    "matern52",
    "maximize_acquisition",
    "noisy_expected_improvement",
    "oracle_front",
    "pareto_front",
    "prior_from_dict",
    "prior_weighted",
    "read_record",
    "run_doe",
    "run_experiment",
    "sample_scalarization",
    "scalarized_acquisition",
    "suggest_reference_point",
    "write_record",
]
