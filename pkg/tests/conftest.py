import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make the oracles module importable

from activepool.classifier import PosteriorMatrix
from activepool.dataset import SyntheticSpec, generate_synthetic


def posterior(rows, ids=None) -> PosteriorMatrix:
    rows = np.asarray(rows, dtype=np.float64)
    if ids is None:
        ids = tuple(f"x{i}" for i in range(rows.shape[0]))
    return PosteriorMatrix(rows, tuple(ids))


def random_posterior(rng, n, m) -> PosteriorMatrix:
    raw = rng.random((n, m)) + 1e-6
    return posterior(raw / raw.sum(axis=1, keepdims=True))


@pytest.fixture
def worked_example():
    """The two three-class instances used throughout the strategy goldens."""
    return posterior([[0.9, 0.09, 0.01], [0.2, 0.5, 0.3]], ids=("D1", "D2"))


@pytest.fixture(scope="session")
def small_dataset():
    """3 classes, 4 dims, small counts, some irrelevant pool items."""
    return generate_synthetic(
        SyntheticSpec(
            num_classes=3,
            dimensionality=4,
            seed_per_class=6,
            pool_per_class=15,
            irrelevant_count=10,
            test_per_class=10,
            cluster_separation=3.0,
            rng_seed=123,
        )
    )
