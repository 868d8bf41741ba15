"""Separability bounds, Monte Carlo census experiments, and one-shot
correctors for high-dimensional data."""

from .bounds import (
    BoundResult,
    CapacityResult,
    DomainError,
    SeparationRegime,
    UnreachableTargetError,
    cap_exclusion_bound,
    cap_radius,
    extreme_points_bound,
    extreme_points_bound_max,
    extreme_points_capacity,
    extreme_points_union_bound,
    point_separation_approx,
    point_separation_bound,
    point_separation_bound_max,
    separation_capacity,
    two_neuron_bound,
    two_neuron_bound_max,
    two_neuron_union_bound,
)
from .corrector import (
    CorrectorModel,
    IllConditionedError,
    LabeledDataset,
    Metrics,
    SvmConfig,
    WhiteningModel,
    assemble_cascade,
    broken_stick_count,
    build_whitening,
    evaluate,
    fisher_corrector_multi,
    fisher_corrector_single,
    fit_pca,
    kaiser_count,
    spherical_cap_corrector,
    svm_baseline,
    two_neuron_corrector,
)
from .sampling import DistributionSpec, SeedSpec, derive_stream, sample
from .separability import (
    CascadePredicate,
    CensusResult,
    ConjunctionClause,
    ExperimentConfig,
    ExperimentReport,
    LinearPredicate,
    SeparationFailure,
    build_conjunction_separator,
    build_two_neuron,
    cap_functional,
    census,
    mc_experiment,
)

__version__ = "0.1.0"
