"""Shared fixtures: seeded random images and small synthetic datasets."""

from __future__ import annotations

import numpy as np
import pytest

from leafgate.synthetic import synthetic_distortion_dataset, synthetic_leaf_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_planar(rng, h=8, w=8, low=0.1, high=0.9):
    """A small random 3×H×W image comfortably inside [0, 1]."""
    return rng.uniform(low, high, size=(3, h, w))


@pytest.fixture(scope="session")
def leaf_set_small():
    """48 synthetic leaves (12 per class) at 32×32 for fast structural tests."""
    return synthetic_leaf_dataset(n=48, size=32, seed=11)


@pytest.fixture(scope="session")
def distortion_set_small():
    """40 scored synthetic textures at 32×32 for fast structural tests."""
    return synthetic_distortion_dataset(n=40, size=32, seed=11)
