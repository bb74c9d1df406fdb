"""Least-squares removal of linear feature/group correlation.

For each feature column z_j the fitted weight w*_j minimizes
``|| z_j - (s - s_mean) * w_j ||^2`` on the training rows; the transform
subtracts ``(s_i - s_mean) * w*_j`` from every entry and interpolates with
the original by ``alpha`` (alpha=1 removes all linear correlation, alpha=0
is the identity). Two application modes exist: "s1" transforms train and
test, "s2" transforms the training side only.

Transforming a row requires that row's OWN sensitive value; under "s1" the
test rows' group labels therefore flow into the test features. That is the
leakage channel the reconstruction probe in :mod:`fair_context.harness`
measures, and the reason "s2" exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConstantSensitive, DimensionMismatch
from .tabular import Dataset

MODES = ("s1", "s2")


@dataclass(frozen=True)
class CRModel:
    w_star: np.ndarray   # (m_z,) one weight per feature column
    s_mean: float
    alpha: float
    mode: str

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        w = np.asarray(self.w_star, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "w_star", w)

    def to_json(self) -> str:
        return json.dumps({
            "w_star": [float(v) for v in self.w_star],
            "s_mean": self.s_mean,
            "alpha": self.alpha,
            "mode": self.mode,
        })

    @classmethod
    def from_json(cls, text: str) -> "CRModel":
        doc = json.loads(text)
        return cls(w_star=np.asarray(doc["w_star"], dtype=np.float64),
                   s_mean=float(doc["s_mean"]), alpha=float(doc["alpha"]),
                   mode=str(doc["mode"]))


def fit(train: Dataset, alpha: float = 1.0, mode: str = "s1") -> CRModel:
    """Fit per-feature least-squares weights on the training rows.

    Solved with a QR-based least-squares call; for a single binary sensitive
    column the solution coincides with cov(z_j, s)/var(s) (tested against
    that closed form).
    """
    s = train.sensitive.astype(np.float64)
    s_mean = float(s.mean())
    centered = s - s_mean
    if not np.any(centered):
        raise ConstantSensitive("sensitive attribute is constant on the training data")
    w, *_ = np.linalg.lstsq(centered[:, None], train.features, rcond=None)
    return CRModel(w_star=w[0], s_mean=s_mean, alpha=float(alpha), mode=mode)


def transform(model: CRModel, features: np.ndarray, sensitive: np.ndarray) -> np.ndarray:
    """alpha-interpolated decorrelated features.

    Computed as ``alpha * residual + (1 - alpha) * original`` so that the
    output is exactly linear in alpha (bitwise identity at alpha in {0, 1}).
    """
    features = np.asarray(features, dtype=np.float64)
    sensitive = np.asarray(sensitive, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.w_star.shape[0]:
        raise DimensionMismatch(
            f"expected {model.w_star.shape[0]} feature columns, got {features.shape}")
    if sensitive.shape[0] != features.shape[0]:
        raise DimensionMismatch("sensitive vector length must match feature rows")
    residual = features - np.outer(sensitive - model.s_mean, model.w_star)
    return model.alpha * residual + (1.0 - model.alpha) * features


def apply_mode(model: CRModel, train: Dataset, test: Dataset):
    """Apply the fitted transform per the model's mode.

    "s1": transform both sides (test rows use their own sensitive values with
    the train-fitted weights). "s2": transform the training side only; the
    test dataset is returned unchanged (same object).
    """
    train_out = train.with_features(transform(model, train.features, train.sensitive))
    if model.mode == "s2":
        return train_out, test
    test_out = test.with_features(transform(model, test.features, test.sensitive))
    return train_out, test_out
