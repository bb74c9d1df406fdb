"""Tabular data model: CSV ingestion, stratified splits, synthetic generation.

All randomness flows through numpy's PCG64 generator. Derived streams are
computed as ``base_seed XOR (seed_index * 100003 + purpose)`` (masked to 64
bits), purposes 0..n_folds-1 are reserved for per-fold streams; see
:data:`STREAM_HOLDOUT` for the per-seed stage constants.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateStratum,
    DegenerateStratumWarning,
    EmptyDataset,
    MissingColumn,
    NonBinaryColumn,
    TooFewRows,
)

# reserved purpose constants for per-seed (not per-fold) streams; chosen below
# the 100003 multiplier so (seed_index, purpose) pairs never collide with folds
STREAM_HOLDOUT = 100000
STREAM_CONFORMAL_SPLIT = 100001
STREAM_KFOLD = 100002

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}
_MASK64 = (1 << 64) - 1


def derive_stream_seed(base_seed: int, seed_index: int, purpose: int) -> int:
    """Deterministic 64-bit seed for the (run seed, purpose) cell."""
    return (base_seed ^ (seed_index * 100003 + purpose)) & _MASK64


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus binary sensitive attribute and binary target.

    Arrays are made read-only at construction; all operations that "modify"
    a dataset return a new one, so instances are safe to share across threads.
    """

    features: np.ndarray          # (n, m_z) float64
    sensitive: np.ndarray         # (n,) values in {0, 1}
    target: np.ndarray            # (n,) values in {0, 1}
    feature_names: tuple[str, ...]
    row_ids: tuple = ()

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        sens = np.asarray(self.sensitive, dtype=np.int64)
        targ = np.asarray(self.target, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n = feats.shape[0]
        if n < 1:
            raise EmptyDataset("dataset has no rows")
        row_ids = self.row_ids if self.row_ids else tuple(range(n))
        if not (len(sens) == len(targ) == len(row_ids) == n):
            raise ValueError("features, sensitive, target and row_ids must share length")
        if feats.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length must match feature columns")
        for name, vec in (("sensitive", sens), ("target", targ)):
            bad = set(np.unique(vec)) - {0, 1}
            if bad:
                raise ValueError(f"{name} must contain only 0/1, got extra values {bad}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain NaN or Inf")
        for arr in (feats, sens, targ):
            arr.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "sensitive", sens)
        object.__setattr__(self, "target", targ)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m_z(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            sensitive=self.sensitive[idx],
            target=self.target[idx],
            feature_names=self.feature_names,
            row_ids=tuple(self.row_ids[i] for i in idx),
        )

    def with_features(self, features: np.ndarray,
                      feature_names: Sequence[str] | None = None) -> "Dataset":
        return Dataset(
            features=features,
            sensitive=self.sensitive,
            target=self.target,
            feature_names=tuple(feature_names) if feature_names else self.feature_names,
            row_ids=self.row_ids,
        )

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(self.sensitive.tobytes())
        h.update(self.target.tobytes())
        h.update("\x1f".join(self.feature_names).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitPlan:
    """Holdout fraction, fold count and the base seed for derived streams."""

    holdout_fraction: float = 0.2
    n_folds: int = 5
    base_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must be in (0, 1)")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")

    def stream(self, seed_index: int, purpose: int) -> int:
        return derive_stream_seed(self.base_seed, seed_index, purpose)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the planted-bias synthetic generator.

    ``mean_shift`` scales how strongly each feature encodes the group
    (feature j = mean_shift[j]*(2S-1) + noise); ``label_bias`` is the direct
    group effect on the target log-odds.
    """

    n: int
    m_z: int
    group_rate: float = 0.5
    mean_shift: tuple[float, ...] | float = 0.0
    label_bias: float = 0.0
    label_weights: tuple[float, ...] | float = 0.0
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m_z < 1:
            raise ValueError("n and m_z must be positive")
        if not 0.0 < self.group_rate < 1.0:
            raise ValueError("group_rate must be in (0, 1)")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")
        object.__setattr__(self, "mean_shift", _expand(self.mean_shift, self.m_z))
        object.__setattr__(self, "label_weights", _expand(self.label_weights, self.m_z))


def _expand(value, m: int) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return tuple(float(value) for _ in range(m))
    out = tuple(float(v) for v in value)
    if len(out) != m:
        raise ValueError(f"expected {m} per-feature values, got {len(out)}")
    return out


# --- CSV ingestion -----------------------------------------------------------

def _is_missing(token: str) -> bool:
    return token.strip().lower() in _MISSING_TOKENS


def _to_binary(column: list[str], name: str, positive: str) -> np.ndarray:
    distinct = set(column)
    if len(distinct) > 2:
        raise NonBinaryColumn(name, distinct)
    return np.fromiter((1 if v == positive else 0 for v in column), dtype=np.int64)


def load_csv(path, target_col: str, sensitive_col: str,
             positive_target: str = "1", positive_sensitive: str = "1"):
    """Load an RFC-4180 CSV into a Dataset.

    Non-numeric columns are one-hot expanded into indicator columns named
    ``col=value`` in lexicographic value order. Rows with a missing or
    non-finite value in any used column are dropped.

    Returns (dataset, n_rows_dropped).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} has no header row")
        rows = [row for row in reader if row]

    for col in (target_col, sensitive_col):
        if col not in header:
            raise MissingColumn(col)
    col_index = {name: i for i, name in enumerate(header)}
    feature_cols = [c for c in header if c not in (target_col, sensitive_col)]

    # drop rows with any missing value in a used column
    used = [col_index[c] for c in feature_cols + [target_col, sensitive_col]]
    kept_ids, kept = [], []
    for rid, row in enumerate(rows):
        if len(row) != len(header):
            raise EmptyDataset(f"{path} row {rid + 2} has {len(row)} fields, expected {len(header)}")
        if any(_is_missing(row[i]) for i in used):
            continue
        kept_ids.append(rid)
        kept.append(row)

    # column typing: numeric if every kept value parses to a finite float
    def numeric_or_none(col: str):
        vals = []
        for row in kept:
            try:
                x = float(row[col_index[col]])
            except ValueError:
                return None
            if not math.isfinite(x):
                return None
            vals.append(x)
        return vals

    columns: list[tuple[str, list[float]]] = []
    for col in feature_cols:
        vals = numeric_or_none(col)
        if vals is not None:
            columns.append((col, vals))
        else:
            raw = [row[col_index[col]] for row in kept]
            for level in sorted(set(raw)):
                columns.append((f"{col}={level}", [1.0 if v == level else 0.0 for v in raw]))

    n_dropped = len(rows) - len(kept)
    if not kept:
        raise EmptyDataset(f"{path}: all {len(rows)} rows dropped")

    target = _to_binary([row[col_index[target_col]] for row in kept], target_col, positive_target)
    sensitive = _to_binary([row[col_index[sensitive_col]] for row in kept],
                           sensitive_col, positive_sensitive)
    features = np.array([vals for _, vals in columns], dtype=np.float64).T
    if features.size == 0:
        features = features.reshape(len(kept), 0)
    ds = Dataset(
        features=features,
        sensitive=sensitive,
        target=target,
        feature_names=tuple(name for name, _ in columns),
        row_ids=tuple(kept_ids),
    )
    return ds, n_dropped


def save_csv(ds: Dataset, path) -> None:
    """Write a dataset as CSV with feature columns, then sensitive, target."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["sensitive", "target"])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.features[i]]
                            + [int(ds.sensitive[i]), int(ds.target[i])])


# --- stratified splits -------------------------------------------------------

def _cells(ds: Dataset):
    """Row indices per (target, sensitive) cell, in fixed cell order."""
    out = []
    for y in (0, 1):
        for s in (0, 1):
            idx = np.flatnonzero((ds.target == y) & (ds.sensitive == s))
            if idx.size == 0:
                warnings.warn(f"(target={y}, sensitive={s}) cell is empty",
                              DegenerateStratumWarning, stacklevel=3)
            out.append(idx)
    return out


def holdout_split(ds: Dataset, fraction: float, seed: int):
    """Stratified holdout split on the joint (target, sensitive) cell.

    Returns (main, holdout) datasets that partition the rows; per-cell holdout
    counts are round(fraction * cell size).
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    hold_parts, main_parts = [], []
    for idx in _cells(ds):
        if idx.size == 0:
            continue
        perm = idx[rng.permutation(idx.size)]
        k = int(math.floor(fraction * idx.size + 0.5))
        hold_parts.append(perm[:k])
        main_parts.append(perm[k:])
    hold_idx = np.sort(np.concatenate(hold_parts))
    main_idx = np.sort(np.concatenate(main_parts))
    if hold_idx.size == 0 or main_idx.size == 0:
        raise DegenerateStratum(
            f"split fraction {fraction} leaves an empty part (n={ds.n})")
    return ds.subset(main_idx), ds.subset(hold_idx)


def kfold(ds: Dataset, k: int, seed: int):
    """Stratified k-fold assignment; returns k (train_indices, test_indices) pairs.

    Test sets partition the rows; per-cell fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if ds.n < k:
        raise TooFewRows(f"need at least k={k} rows, got {ds.n}")
    rng = np.random.default_rng(seed)
    fold_members = [[] for _ in range(k)]
    offset = 0   # keep dealing around the circle across cells so folds stay even
    for idx in _cells(ds):
        if idx.size == 0:
            continue
        perm = idx[rng.permutation(idx.size)]
        for pos, row in enumerate(perm):
            fold_members[(offset + pos) % k].append(row)
        offset += idx.size
    all_rows = np.arange(ds.n)
    folds = []
    for members in fold_members:
        test = np.sort(np.asarray(members, dtype=np.int64))
        train = np.setdiff1d(all_rows, test, assume_unique=True)
        folds.append((train, test))
    return folds


# --- synthetic generation ----------------------------------------------------

def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Draw a dataset from the planted-bias generative law.

    S ~ Bernoulli(group_rate); feature j = mean_shift[j]*(2S-1) + N(0, noise_sd);
    Y ~ Bernoulli(sigmoid(label_weights . z + label_bias*(2S-1))). The draw
    order (S, noise, Y) is fixed, so outputs are deterministic in the seed.
    """
    rng = np.random.default_rng(spec.seed)
    s = (rng.random(spec.n) < spec.group_rate).astype(np.int64)
    sign = (2 * s - 1).astype(np.float64)
    shift = np.asarray(spec.mean_shift)
    z = sign[:, None] * shift[None, :] + rng.normal(0.0, spec.noise_sd, size=(spec.n, spec.m_z))
    weights = np.asarray(spec.label_weights)
    logits = z @ weights + spec.label_bias * sign
    p = 1.0 / (1.0 + np.exp(-logits))
    y = (rng.random(spec.n) < p).astype(np.int64)
    names = tuple(f"z{j}" for j in range(spec.m_z))
    return Dataset(features=z, sensitive=s, target=y, feature_names=names)
