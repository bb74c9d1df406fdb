"""Fairness-aware demonstration selection and transformation for tabular
in-context learning, plus the evaluation harness around it."""

__version__ = "0.1.0"

from .tabular import Dataset, SplitPlan, SynthSpec, generate_synthetic, holdout_split, kfold, load_csv
from .metrics import (
    MetricReport,
    accuracy,
    compute_report,
    demographic_parity_diff,
    equal_opportunity_diff,
    equalized_odds_diff,
    f1,
    rate_diff,
)
from .correlation import CRModel
from .conformal import ConformalModel, PredictionSet, calibrate, prediction_set, uncertainty_mask
from .selection import SelectionResult, cap_random, select_balanced, select_uncertain
from .predictors import KnnPredictor, LogRegIclPredictor, knn_predict, logreg_fit, threshold_labels
from .harness import EvalRecord, ParetoPoint, RunConfig, aggregate, pareto_front, run_pipeline

__all__ = [
    "__version__",
    "Dataset", "SplitPlan", "SynthSpec", "generate_synthetic", "holdout_split", "kfold", "load_csv",
    "MetricReport", "accuracy", "compute_report", "demographic_parity_diff",
    "equal_opportunity_diff", "equalized_odds_diff", "f1", "rate_diff",
    "CRModel",
    "ConformalModel", "PredictionSet", "calibrate", "prediction_set", "uncertainty_mask",
    "SelectionResult", "cap_random", "select_balanced", "select_uncertain",
    "KnnPredictor", "LogRegIclPredictor", "knn_predict", "logreg_fit", "threshold_labels",
    "EvalRecord", "ParetoPoint", "RunConfig", "aggregate", "pareto_front", "run_pipeline",
]
