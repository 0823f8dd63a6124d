"""knnids: nonparametric streaming intrusion detection.

Sequential anomaly detection from k-nearest-neighbor distances with
closed-form threshold calibration, post-alarm attack localization, synthetic
attack scenarios, parametric baselines, and a benchmark harness.
"""

from .baselines import GaussianCusumSpec, GaussianCusumState, data_filter, gcusum_run, gcusum_step
from .bench import BenchResult, export_results, run_bench
from .calibrate import (
    Calibration,
    lambert_w,
    lebesgue_constant,
    moment_integral,
    solve_omega0,
    threshold_for_far,
    validate_moment_condition,
)
from .core import DataInstance, NormalizationBounds, Partition, fit_bounds, normalize, partition
from .detector import (
    DetectionReport,
    DetectorState,
    Hyperparams,
    SequentialKnnDetector,
    TrainedModel,
    evidence,
    evidence_batch,
    fit,
    run_stream,
    step,
    train,
)
from .exceptions import KnnidsError
from .knn import batch_total_distance, total_distance
from .localize import LocalizationReport, localize, nominal_contribution_quantile, roc_sweep
from .streams import (
    AttackSpec,
    GaussianMixture,
    GaussianRates,
    NegativeBinomialRates,
    ScenarioSpec,
    UniformBox,
    generate,
    ingest,
    load_model,
    save_model,
    to_instances,
)

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "BenchResult",
    "Calibration",
    "DataInstance",
    "DetectionReport",
    "DetectorState",
    "GaussianCusumSpec",
    "GaussianCusumState",
    "GaussianMixture",
    "GaussianRates",
    "Hyperparams",
    "KnnidsError",
    "LocalizationReport",
    "NegativeBinomialRates",
    "NormalizationBounds",
    "Partition",
    "ScenarioSpec",
    "SequentialKnnDetector",
    "TrainedModel",
    "UniformBox",
    "batch_total_distance",
    "data_filter",
    "evidence",
    "evidence_batch",
    "export_results",
    "fit",
    "fit_bounds",
    "gcusum_run",
    "gcusum_step",
    "generate",
    "ingest",
    "lambert_w",
    "lebesgue_constant",
    "load_model",
    "localize",
    "moment_integral",
    "nominal_contribution_quantile",
    "normalize",
    "partition",
    "roc_sweep",
    "run_bench",
    "run_stream",
    "save_model",
    "solve_omega0",
    "step",
    "threshold_for_far",
    "to_instances",
    "total_distance",
    "train",
    "validate_moment_condition",
]
