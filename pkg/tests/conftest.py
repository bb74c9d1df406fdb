import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fair_context.tabular import Dataset, SynthSpec, generate_synthetic


@dataclass(frozen=True)
class FixedProbClassifier:
    """Maps each feature row to a pre-set probability (row order)."""

    probs: tuple

    def predict_proba(self, features):
        n = np.asarray(features).shape[0]
        if n != len(self.probs):
            raise AssertionError("fixture probs do not match feature rows")
        return np.asarray(self.probs, dtype=np.float64)


@pytest.fixture
def tiny_dataset():
    return Dataset(
        features=np.array([[1.0], [2.0], [3.0], [4.0]]),
        sensitive=[0, 0, 1, 1],
        target=[0, 1, 0, 1],
        feature_names=("z0",),
    )


@pytest.fixture
def biased_dataset():
    """Group-separable features plus a direct group effect on the target."""
    return generate_synthetic(SynthSpec(
        n=1200, m_z=3, group_rate=0.5, mean_shift=1.0,
        label_bias=1.0, label_weights=1.0, noise_sd=1.0, seed=11))


@pytest.fixture
def ambiguous_dataset():
    """Weak group signal: the group classifier keeps real uncertainty, so the
    conformal band stays non-empty for epsilons up to ~0.2."""
    return generate_synthetic(SynthSpec(
        n=1200, m_z=2, group_rate=0.5, mean_shift=0.4,
        label_bias=1.0, label_weights=1.0, noise_sd=1.0, seed=11))


def balanced_cells_dataset(per_cell: int, m_z: int = 2, seed: int = 0) -> Dataset:
    """Exactly per_cell rows in each (target, sensitive) cell."""
    rng = np.random.default_rng(seed)
    y, s = [], []
    for yv in (0, 1):
        for sv in (0, 1):
            y += [yv] * per_cell
            s += [sv] * per_cell
    n = 4 * per_cell
    return Dataset(
        features=rng.normal(size=(n, m_z)),
        sensitive=s,
        target=y,
        feature_names=tuple(f"z{j}" for j in range(m_z)),
    )
