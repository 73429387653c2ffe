"""Risk-aware grid path planning from stochastic per-pixel classification.

Pipeline: stacks of per-pixel softmax samples (dropout passes, bootstrap
ensemble members, or a synthetic corruption model) are aggregated into a
predicted-class cost map and a per-pixel uncertainty map; the planning cost
adds the uncertainty weighted by a risk factor; A* plans on the result; the
surprise factor scores how far the plan's expected cost landed from its
ground-truth cost.
"""

from .confidence import ConfidenceMaps, deterministic_baseline, estimate_confidence
from .planner import (
    ACTIVE_CORE,
    PixelCoord,
    PlannedPath,
    UnreachableError,
    path_cost_under,
    plan,
    read_path,
    write_path,
)
from .riskmap import (
    DEFAULT_LAMBDA,
    RiskConfig,
    RiskCostMap,
    build_risk_cost_map,
    ground_truth_cost_map,
    read_risk_cost_map,
    write_risk_cost_map,
)
from .surprise import SurpriseReport, evaluate_surprise, run_scenario, surprise_factor
from .taxonomy import (
    ClassEntry,
    CostTable,
    TaxonomyError,
    builtin_aeroscapes_table,
    cost_of,
    load_cost_table,
    save_cost_table,
)
from .tensorio import (
    FormatError,
    LabelMap,
    ScalarMap,
    SoftmaxStack,
    read_label_map,
    read_scalar_map,
    read_softmax_stack,
    write_label_map,
    write_scalar_map,
    write_softmax_stack,
)
from .toy_perception import (
    SamplerConfig,
    Scene,
    TinyClassifier,
    TrainingError,
    classification_accuracy,
    generate_scene,
    load_classifier,
    load_ensemble,
    sample_bootstrap_stack,
    sample_dropout_stack,
    sample_synthetic_stack,
    save_classifier,
    save_ensemble,
    train_bootstrap_ensemble,
    train_classifier,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_CORE",
    "ClassEntry",
    "ConfidenceMaps",
    "CostTable",
    "DEFAULT_LAMBDA",
    "FormatError",
    "LabelMap",
    "PixelCoord",
    "PlannedPath",
    "RiskConfig",
    "RiskCostMap",
    "SamplerConfig",
    "ScalarMap",
    "Scene",
    "SoftmaxStack",
    "SurpriseReport",
    "TaxonomyError",
    "TinyClassifier",
    "TrainingError",
    "UnreachableError",
    "builtin_aeroscapes_table",
    "build_risk_cost_map",
    "classification_accuracy",
    "cost_of",
    "deterministic_baseline",
    "estimate_confidence",
    "evaluate_surprise",
    "generate_scene",
    "ground_truth_cost_map",
    "load_classifier",
    "load_cost_table",
    "load_ensemble",
    "path_cost_under",
    "plan",
    "read_label_map",
    "read_path",
    "read_risk_cost_map",
    "read_scalar_map",
    "read_softmax_stack",
    "run_scenario",
    "sample_bootstrap_stack",
    "sample_dropout_stack",
    "sample_synthetic_stack",
    "save_classifier",
    "save_cost_table",
    "save_ensemble",
    "surprise_factor",
    "train_bootstrap_ensemble",
    "train_classifier",
    "write_label_map",
    "write_path",
    "write_risk_cost_map",
    "write_scalar_map",
    "write_softmax_stack",
]
