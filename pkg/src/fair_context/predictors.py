"""In-context predictors and the group-attribute classifiers built on them.

The in-context contract: ``predict_proba(context_X, context_y, query_X)``
returns P(label=1) per query row, with no state carried between calls.
Implementations here are a standardized-feature k-NN (the desk-scale
stand-in for a tabular foundation model), a from-scratch logistic
regression, and a client for external predictors spoken to over the
adapter wire protocol (see :mod:`fair_context.adapter_client`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import _kernels
from .errors import EmptyContext, NonFiniteLoss

DEFAULT_KNN_K = 16


class InContextPredictor(Protocol):
    def predict_proba(self, context_X: np.ndarray, context_y: np.ndarray,
                      query_X: np.ndarray) -> np.ndarray: ...


def _standardize_pair(context_X: np.ndarray, query_X: np.ndarray):
    """Scale both matrices by context mean/sd; zero-variance columns are
    dropped from the distance computation entirely."""
    mean = context_X.mean(axis=0)
    sd = context_X.std(axis=0)
    keep = sd != 0.0
    if not keep.any():
        # all-constant context: every query is equidistant from every row
        return (np.zeros((context_X.shape[0], 1)), np.zeros((query_X.shape[0], 1)))
    ctx = (context_X[:, keep] - mean[keep]) / sd[keep]
    qry = (query_X[:, keep] - mean[keep]) / sd[keep]
    return ctx, qry


def knn_predict(context_X, context_y, query_X, k: int = DEFAULT_KNN_K) -> np.ndarray:
    """P(label=1) as the positive fraction among the k nearest context rows.

    Euclidean distance on context-standardized features, k capped at the
    context size, distance ties broken toward the lower context index.
    """
    context_X = np.asarray(context_X, dtype=np.float64)
    query_X = np.asarray(query_X, dtype=np.float64)
    context_y = np.asarray(context_y, dtype=np.float64)
    if context_X.ndim != 2 or query_X.ndim != 2:
        raise ValueError("feature inputs must be 2-D matrices")
    if context_X.shape[0] == 0:
        raise EmptyContext("k-NN needs a non-empty context")
    if k < 1:
        raise ValueError("k must be >= 1")
    ctx, qry = _standardize_pair(context_X, query_X)
    return _kernels.knn_vote(ctx, context_y, qry, k)


@dataclass(frozen=True)
class KnnPredictor:
    k: int = DEFAULT_KNN_K

    def predict_proba(self, context_X, context_y, query_X):
        return knn_predict(context_X, context_y, query_X, self.k)


# --- logistic regression ------------------------------------------------------

@dataclass(frozen=True)
class LogRegConfig:
    l2: float = 1e-4
    learning_rate: float = 0.1
    max_iters: int = 500
    tol: float = 1e-6


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray
    intercept: float
    feat_mean: np.ndarray
    feat_sd: np.ndarray
    config: LogRegConfig
    constant_prior: float | None = None   # set when fit data had a single class
    n_iters: int = 0


def logreg_fit(X, y, config: LogRegConfig = LogRegConfig()) -> LogRegModel:
    """Full-batch gradient descent on mean log-loss + (l2/2)*||w||^2.

    Weights start at zero on standardized features; the intercept is not
    regularized. Single-class data yields a constant class-prior model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mean = X.mean(axis=0) if X.size else np.zeros(X.shape[1])
    sd = X.std(axis=0) if X.size else np.ones(X.shape[1])
    sd = np.where(sd == 0.0, 1.0, sd)
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        return LogRegModel(weights=np.zeros(X.shape[1]), intercept=0.0,
                           feat_mean=mean, feat_sd=sd, config=config,
                           constant_prior=float(y.mean()))
    Xs = (X - mean) / sd
    w, b, iters = _kernels.logreg_gd(Xs, y, config.l2, config.learning_rate,
                                     config.max_iters, config.tol)
    if iters < 0 or not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise NonFiniteLoss(f"gradient descent diverged after {abs(iters)} iterations")
    return LogRegModel(weights=w, intercept=float(b), feat_mean=mean, feat_sd=sd,
                       config=config, n_iters=iters)


def logreg_predict_proba(model: LogRegModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if model.constant_prior is not None:
        return np.full(X.shape[0], model.constant_prior)
    z = (X - model.feat_mean) / model.feat_sd @ model.weights + model.intercept
    return 1.0 / (1.0 + np.exp(-z))


def logreg_loss(model: LogRegModel, X, y, weights=None, intercept=None) -> float:
    """The exact objective the fit minimizes, for gradient checks."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = model.weights if weights is None else weights
    b = model.intercept if intercept is None else intercept
    z = (X - model.feat_mean) / model.feat_sd @ w + b
    # log(1+exp(-|z|)) form keeps the loss finite for large |z|
    ce = np.logaddexp(0.0, z) - y * z
    return float(ce.mean() + 0.5 * model.config.l2 * np.dot(w, w))


@dataclass(frozen=True)
class LogRegIclPredictor:
    """Fits a fresh logistic regression on the context for every call."""

    config: LogRegConfig = LogRegConfig()

    def predict_proba(self, context_X, context_y, query_X):
        if np.asarray(context_X).shape[0] == 0:
            raise EmptyContext("logistic regression needs a non-empty context")
        model = logreg_fit(context_X, context_y, self.config)
        return logreg_predict_proba(model, query_X)


# --- decision rule --------------------------------------------------------------

def threshold_labels(probabilities) -> np.ndarray:
    """Binarize at 0.5, ties going to class 1."""
    return (np.asarray(probabilities, dtype=np.float64) >= 0.5).astype(np.int64)


# --- group-attribute classifiers (the conformal ProbClassifier side) ------------

@dataclass(frozen=True)
class FittedLogReg:
    model: LogRegModel

    def predict_proba(self, features):
        return logreg_predict_proba(self.model, features)


@dataclass(frozen=True)
class FittedIcl:
    """Freezes (training features, training labels) into a plain classifier."""

    predictor: InContextPredictor
    train_X: np.ndarray
    train_y: np.ndarray

    def predict_proba(self, features):
        return self.predictor.predict_proba(self.train_X, self.train_y, features)


def fit_group_classifier(kind: str, train_X, train_s,
                         predictor: InContextPredictor | None = None):
    """Train the P(group=1|x) model used for conformal calibration.

    kind "logreg" fits the from-scratch logistic regression; kind "strong"
    conditions the strongest available in-context predictor (the external
    adapter when configured, else k-NN) on the training rows.
    """
    if kind == "logreg":
        return FittedLogReg(logreg_fit(train_X, train_s))
    if kind == "strong":
        strong = predictor if predictor is not None else KnnPredictor()
        return FittedIcl(predictor=strong,
                         train_X=np.asarray(train_X, dtype=np.float64),
                         train_y=np.asarray(train_s, dtype=np.float64))
    raise ValueError(f"unknown group classifier kind {kind!r}")
