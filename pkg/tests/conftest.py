"""Shared fixtures: small hand-built datasets and seeded synthetic corpora."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Make the project root importable as in `python cli.py`
ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.arff_io import CorpusEntry, SyntheticSpec, load_corpus  # noqa: E402
from src.mldata import Labelset, MultilabelDataset  # noqa: E402


def make_dataset(points, labelsets, L=None):
    """Dataset from nested lists; L defaults to one past the largest label index."""
    labelsets = [Labelset.from_iterable(ls) for ls in labelsets]
    if L is None:
        L = max([ls.max_index() for ls in labelsets] + [0]) + 1
    return MultilabelDataset(np.asarray(points, dtype=np.float64).reshape(len(labelsets), -1), tuple(labelsets), L)


def random_dataset(rng, n, f, L, label_rate=0.4, distinct_points=True):
    """Random dataset; continuous features make every point distinct almost surely."""
    features = rng.normal(size=(n, f)) if distinct_points else rng.integers(0, 3, size=(n, f)).astype(float)
    labelsets = [Labelset.from_iterable(np.flatnonzero(rng.random(L) < label_rate)) for _ in range(n)]
    return MultilabelDataset(features, tuple(labelsets), L)


@pytest.fixture
def line_points():
    """Three points on a line: (0,0), (1,0), (5,0)."""
    return make_dataset([[0, 0], [1, 0], [5, 0]], [[0], [0, 1], [1]], L=2)


@pytest.fixture
def separable_blobs():
    """Four far-apart blobs on a line, one labelset each; neighbouring blobs share a labelset."""
    centers = ((0.0, 0.0), (100.0, 0.0), (1000.0, 0.0), (1100.0, 0.0))
    labelsets = (Labelset((0,)), Labelset((0,)), Labelset((1, 2)), Labelset((1, 2)))
    spec = SyntheticSpec(
        n=120, f=2, L=4, clusters=4, labelset_per_cluster=labelsets,
        noise_sigma=1.0, seed=11, centers=centers,
    )
    return load_corpus(CorpusEntry("blobs", synthetic=spec, test_n=40))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
