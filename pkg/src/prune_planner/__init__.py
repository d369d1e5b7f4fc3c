"""Budget-constrained model-scaling planner.

Fits a low-rank separable accuracy surface over (depth, width, resolution)
ratios, maximizes it on the compute-budget shell ``d * w**2 * r**2 = T``, and
schedules the per-dimension prune-and-finetune rounds that produce the
regression samples in the first place.
"""

from .collection import (
    DIMENSIONS,
    PROTOCOL_VERSION,
    CollectionConfig,
    PartialCollectionWarning,
    ProtocolError,
    Schedule,
    SimulatedTrainer,
    SubprocessTrainer,
    Transcript,
    budget_floors,
    collect,
    make_schedule,
)
from .dataset import Dataset, DatasetFormatError, load_samples, save_samples
from .estimators import (
    FullPolynomialRegressor,
    PruningPlanner,
    SeparableMapRegressor,
)
from .maps import (
    AccuracySample,
    DimTriple,
    FactorTriple,
    FullTensorMap,
    SeparableMap,
    canonicalize,
    cost,
    eval_full,
    eval_poly,
    eval_separable,
    frr,
    gradient,
    load_map,
    map_from_json_dict,
    map_to_json_dict,
    poly_derivative,
    predict,
    predict_many,
    prr_estimate,
    save_map,
    separable_to_full,
)
from .planner import Budget, PlanResult, brute_force, kkt_residual, solve
from .regression import (
    FitConfig,
    FitReport,
    fit_full_tensor,
    fit_separable,
    fit_separable_with_history,
    mae,
    split,
)
from .separability import (
    InsufficientGridError,
    SeparabilityReport,
    analyze_separability,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracySample",
    "Budget",
    "CollectionConfig",
    "Dataset",
    "DatasetFormatError",
    "DimTriple",
    "DIMENSIONS",
    "FactorTriple",
    "FitConfig",
    "FitReport",
    "FullPolynomialRegressor",
    "FullTensorMap",
    "InsufficientGridError",
    "PartialCollectionWarning",
    "PlanResult",
    "PROTOCOL_VERSION",
    "ProtocolError",
    "PruningPlanner",
    "Schedule",
    "SeparabilityReport",
    "SeparableMap",
    "SeparableMapRegressor",
    "SimulatedTrainer",
    "SubprocessTrainer",
    "Transcript",
    "analyze_separability",
    "brute_force",
    "budget_floors",
    "canonicalize",
    "collect",
    "cost",
    "eval_full",
    "eval_poly",
    "eval_separable",
    "fit_full_tensor",
    "fit_separable",
    "fit_separable_with_history",
    "frr",
    "gradient",
    "kkt_residual",
    "load_map",
    "load_samples",
    "mae",
    "make_schedule",
    "map_from_json_dict",
    "map_to_json_dict",
    "poly_derivative",
    "predict",
    "predict_many",
    "prr_estimate",
    "save_map",
    "save_samples",
    "separable_to_full",
    "solve",
    "split",
]
