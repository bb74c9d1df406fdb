"""Split conformal prediction over a probabilistic group classifier.

Calibration computes nonconformity scores ``c_i = |s_i - p_i|`` on held-out
rows and sets the threshold ``tau`` to the k-th smallest score with
``k = min(ceil((n+1)*(1-epsilon)), n)`` — the finite-sample-corrected
empirical quantile that makes the coverage guarantee hold. A test point's
prediction set contains each label within distance tau of its predicted
probability; a two-label set marks the point "uncertain".

Note the knob direction that falls out of the math: smaller epsilon gives a
LARGER tau, hence wider sets and MORE points flagged uncertain (and kept by
uncertainty-based selection).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import EmptyCalibration
from .tabular import STREAM_CONFORMAL_SPLIT, Dataset, holdout_split


class ProbClassifier(Protocol):
    """Anything that maps a feature matrix to P(group=1) per row."""

    def predict_proba(self, features: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ConformalModel:
    tau: float
    epsilon: float
    n_calib: int
    classifier: ProbClassifier

    def metadata(self) -> dict:
        return {"tau": self.tau, "epsilon": self.epsilon, "n_calib": self.n_calib}


@dataclass(frozen=True)
class PredictionSet:
    contains_zero: bool
    contains_one: bool

    @property
    def size(self) -> int:
        return int(self.contains_zero) + int(self.contains_one)

    @property
    def uncertain(self) -> bool:
        return self.size == 2


def quantile_threshold(scores: np.ndarray, epsilon: float) -> float:
    """k-th smallest calibration score, k = min(ceil((n+1)(1-eps)), n).

    Order statistics on the sorted multiset — no interpolation, which would
    void the finite-sample coverage argument.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if n < 1:
        raise EmptyCalibration("no calibration scores")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    k = min(math.ceil((n + 1) * (1.0 - epsilon)), n)
    return float(np.sort(scores)[k - 1])


def calibrate(classifier: ProbClassifier, calib_features: np.ndarray,
              calib_s: np.ndarray, epsilon: float) -> ConformalModel:
    """Calibrate the prediction-set threshold on rows the classifier never saw."""
    calib_features = np.asarray(calib_features, dtype=np.float64)
    calib_s = np.asarray(calib_s, dtype=np.float64)
    if calib_features.shape[0] == 0:
        raise EmptyCalibration("empty calibration set")
    p_hat = np.asarray(classifier.predict_proba(calib_features), dtype=np.float64)
    scores = np.abs(calib_s - p_hat)
    tau = quantile_threshold(scores, epsilon)
    return ConformalModel(tau=tau, epsilon=float(epsilon),
                          n_calib=int(calib_s.shape[0]), classifier=classifier)


def prediction_set(model: ConformalModel, p_hat: float) -> PredictionSet:
    """Labels within distance tau of p_hat; may be empty when tau is small."""
    return PredictionSet(contains_zero=p_hat <= model.tau,
                         contains_one=(1.0 - p_hat) <= model.tau)


def uncertainty_mask(model: ConformalModel, features: np.ndarray) -> np.ndarray:
    """Boolean vector: True where the prediction set holds both labels."""
    p_hat = np.asarray(model.classifier.predict_proba(np.asarray(features)), dtype=np.float64)
    return (p_hat <= model.tau) & ((1.0 - p_hat) <= model.tau)


def split_sensitive_holdout(holdout: Dataset, seed: int):
    """Stratified 50/50 split of the holdout into (proper_train, calibration)."""
    return holdout_split(holdout, 0.5, seed)


__all__ = [
    "ProbClassifier", "ConformalModel", "PredictionSet", "quantile_threshold",
    "calibrate", "prediction_set", "uncertainty_mask", "split_sensitive_holdout",
    "STREAM_CONFORMAL_SPLIT",
]
