"""Demonstration-set construction: balanced, uncertainty-based, and capping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalModel, uncertainty_mask
from .errors import EmptyGroup, EmptySelection
from .tabular import Dataset


@dataclass(frozen=True)
class SelectionResult:
    """Chosen row indices plus the provenance needed to reproduce them."""

    indices: np.ndarray           # sorted ascending, unique
    method: str                   # vanilla | balanced | uncertain
    params: dict = field(default_factory=dict)
    source_size: int = 0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly ascending")
            if idx[0] < 0 or idx[-1] >= self.source_size:
                raise ValueError("indices out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def to_json(self) -> str:
        return json.dumps({
            "indices": [int(i) for i in self.indices],
            "method": self.method,
            "params": self.params,
            "source_size": self.source_size,
        }, sort_keys=True)


def select_all(ds: Dataset) -> SelectionResult:
    return SelectionResult(indices=np.arange(ds.n), method="vanilla",
                           params={}, source_size=ds.n)


def select_balanced(ds: Dataset, budget: int | None, seed: int) -> SelectionResult:
    """Equal-count uniform sample from each group, without replacement.

    Per-group count is min(minority group size, budget // 2); with an odd
    budget the leftover slot stays unused so the two groups always match
    exactly.
    """
    groups = [np.flatnonzero(ds.sensitive == g) for g in (0, 1)]
    for g, idx in enumerate(groups):
        if idx.size == 0:
            raise EmptyGroup(g)
    per_group = min(len(groups[0]), len(groups[1]))
    if budget is not None:
        per_group = min(per_group, budget // 2)
    rng = np.random.default_rng(seed)
    chosen = [idx[rng.choice(idx.size, size=per_group, replace=False)] for idx in groups]
    return SelectionResult(
        indices=np.sort(np.concatenate(chosen)),
        method="balanced",
        params={"budget": budget, "seed": seed},
        source_size=ds.n,
    )


def select_uncertain(ds: Dataset, model: ConformalModel,
                     fallback_m: int | None = None) -> SelectionResult:
    """Rows whose conformal prediction set contains both group labels.

    An all-false mask raises EmptySelection unless ``fallback_m`` is given, in
    which case the m rows with the smallest certainty margin |p_hat - 0.5|
    are kept instead (margin ties resolved by lower row index).
    """
    mask = uncertainty_mask(model, ds.features)
    indices = np.flatnonzero(mask)
    params = {"epsilon": model.epsilon, "tau": model.tau, "n_calib": model.n_calib}
    if indices.size == 0:
        if fallback_m is None:
            raise EmptySelection(
                f"no uncertain rows at epsilon={model.epsilon} (tau={model.tau})")
        p_hat = np.asarray(model.classifier.predict_proba(ds.features), dtype=np.float64)
        margin = np.abs(p_hat - 0.5)
        order = np.argsort(margin, kind="stable")
        indices = np.sort(order[:min(fallback_m, ds.n)])
        params["fallback_m"] = fallback_m
    return SelectionResult(indices=indices, method="uncertain",
                           params=params, source_size=ds.n)


def cap_random(sel: SelectionResult, max_context: int, seed: int) -> SelectionResult:
    """Uniform subsample down to max_context rows; a no-op when already under."""
    if max_context < 1:
        raise ValueError("max_context must be >= 1")
    if sel.size <= max_context:
        return sel
    rng = np.random.default_rng(seed)
    keep = rng.choice(sel.size, size=max_context, replace=False)
    return SelectionResult(
        indices=np.sort(sel.indices[keep]),
        method=sel.method,
        params={**sel.params, "cap": max_context, "cap_seed": seed},
        source_size=sel.source_size,
    )
