"""Tests for the dataset model and corpus descriptors."""

import numpy as np
import pytest

from conftest import make_dataset, random_dataset
from src.errors import DatasetError
from src.mldata import CorpusSplit, Labelset, MultilabelDataset, describe, describe_split, subset


def test_labelset_requires_increasing_indices():
    with pytest.raises(DatasetError):
        Labelset((2, 1))
    with pytest.raises(DatasetError):
        Labelset((1, 1))
    with pytest.raises(DatasetError):
        Labelset((-1,))


def test_labelset_helpers():
    ls = Labelset.from_iterable([3, 0, 3])
    assert ls.labels == (0, 3)
    assert 3 in ls and 1 not in ls
    assert ls.complement(5) == Labelset((1, 2, 4))
    assert ls.symmetric_difference_size(Labelset((0, 1))) == 2
    assert str(ls) == "{0,3}"
    assert Labelset().max_index() == -1


def test_dataset_validation():
    with pytest.raises(DatasetError):
        make_dataset([[0.0], [np.nan]], [[0], [0]])
    with pytest.raises(DatasetError):
        make_dataset([[0.0], [1.0]], [[0], [2]], L=2)
    with pytest.raises(DatasetError):
        MultilabelDataset(np.zeros((2, 1)), (Labelset((0,)),), 1)
    with pytest.raises(DatasetError):
        MultilabelDataset(np.zeros((1, 1)), (Labelset(),), 0)
    with pytest.raises(DatasetError):
        MultilabelDataset(np.zeros((1, 1)), (Labelset(),), 2, ("only-one",))


def test_features_are_read_only():
    ds = make_dataset([[1.0, 2.0]], [[0]])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0


def test_label_matrix_and_ids():
    ds = make_dataset([[0], [1], [2]], [[0, 2], [1], [0, 2]], L=3)
    assert ds.label_matrix.tolist() == [[True, False, True], [False, True, False], [True, False, True]]
    assert ds.labelset_ids.tolist() == [0, 1, 0]


def test_describe_forced_arithmetic():
    d = describe(make_dataset([[0], [1], [2]], [[0], [0, 1], [0, 1, 2]], L=3))
    assert d.cardinality == pytest.approx(2.0)
    assert d.density == pytest.approx(2.0 / 3.0)
    assert d.distinct_labelsets == 3


def test_describe_empty_labelset():
    d = describe(make_dataset([[0.0]], [[]], L=5))
    assert d.cardinality == 0.0
    assert d.density == 0.0


def test_describe_emotions_like_statistics():
    # 391 instances over 6 labels carrying 730 labels in total
    labelsets = [[0, 1]] * 339 + [[2]] * 52
    ds = make_dataset(np.zeros((391, 72)), labelsets, L=6)
    d = describe(ds)
    assert (d.n, d.f, d.L) == (391, 72, 6)
    assert d.cardinality == pytest.approx(1.87, abs=0.005)
    assert d.density == pytest.approx(0.311, abs=0.001)
    assert d.density * d.L == pytest.approx(d.cardinality, rel=1e-15)


def test_describe_empty_corpus():
    ds = MultilabelDataset(np.zeros((0, 3)), (), 2)
    with pytest.raises(DatasetError, match="empty corpus"):
        describe(ds)


def test_describe_is_permutation_invariant(rng):
    ds = random_dataset(rng, 40, 3, 5)
    permuted = subset(ds, rng.permutation(ds.n))
    assert describe(permuted).as_dict() == pytest.approx(describe(ds).as_dict())


def test_subset_identity_and_empty():
    ds = make_dataset([[0], [1], [2]], [[0], [1], []], L=2)
    assert subset(ds, [0, 1, 2]) is ds
    empty = subset(ds, [])
    assert (empty.n, empty.f, empty.label_count) == (0, 1, 2)


def test_subset_order_and_range():
    ds = make_dataset([[0], [1], [2]], [[0], [1], []], L=2)
    picked = ds.subset([2, 0])
    assert picked.features[:, 0].tolist() == [2.0, 0.0]
    assert picked.labelsets == (Labelset(), Labelset((0,)))
    with pytest.raises(DatasetError):
        subset(ds, [3])


def test_equality_compares_content():
    a = make_dataset([[0.5, 1.0]], [[1]], L=2)
    b = make_dataset([[0.5, 1.0]], [[1]], L=2)
    c = make_dataset([[0.5, 1.0]], [[0]], L=2)
    assert a == b
    assert a != c


def test_corpus_split_checks_shapes():
    train = make_dataset([[0, 0]], [[0]], L=2)
    with pytest.raises(DatasetError):
        CorpusSplit("x", train, make_dataset([[0]], [[0]], L=2))
    with pytest.raises(DatasetError):
        CorpusSplit("x", train, make_dataset([[0, 0]], [[0]], L=3))
    split = CorpusSplit("x", train, train)
    assert describe_split(split)[0] == describe(train)
