"""Tests for neighbour search and the BRkNN, LP-kNN and ML-kNN classifiers."""

from collections import Counter

import numpy as np
import pytest

from conftest import make_dataset, random_dataset
from src.classifiers import (
    ClassifierKind,
    knn_indices,
    mlknn_fit,
    mlknn_predict,
    neighbour_matrix,
    predict_all,
    predict_br,
    predict_lp,
)
from src.errors import ClassifierError
from src.mldata import Labelset


def _sorted_neighbours(points, q, exclude=None):
    distances = np.sqrt(((points - q) ** 2).sum(axis=1))
    order = sorted(range(len(points)), key=lambda i: (distances[i], i))
    return [i for i in order if i != exclude]


def test_knn_exact_match_and_full_k(line_points):
    assert knn_indices([1, 0], line_points, 1).tolist() == [1]
    assert sorted(knn_indices([0, 0], line_points, 3).tolist()) == [0, 1, 2]
    with pytest.raises(ClassifierError):
        knn_indices([0, 0], line_points, 4)
    with pytest.raises(ClassifierError):
        knn_indices([0, 0], line_points, 0)


def test_knn_ties_go_to_lower_index():
    ds = make_dataset([[1, 0], [-1, 0], [0, 1], [1, 0]], [[0]] * 4)
    assert knn_indices([0, 0], ds, 4).tolist() == [0, 1, 2, 3]
    assert knn_indices([1, 0], ds, 2).tolist() == [0, 3]


def test_knn_matches_full_sort(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        ds = random_dataset(rng, n, 3, 2)
        k = int(rng.integers(1, n + 1))
        q = rng.normal(size=3)
        assert knn_indices(q, ds, k).tolist() == _sorted_neighbours(ds.features, q)[:k]


def test_neighbour_matrix_spans_query_blocks(monkeypatch, rng):
    import src.classifiers as classifiers

    monkeypatch.setattr(classifiers, "QUERY_BLOCK", 5)
    ds = random_dataset(rng, 30, 2, 2)
    queries = rng.normal(size=(23, 2))
    matrix = neighbour_matrix(queries, ds, 4)
    for q, row in zip(queries, matrix):
        assert row.tolist() == _sorted_neighbours(ds.features, q)[:4]


def test_br_majority():
    ds = make_dataset([[0], [1], [2], [10]], [[0, 1], [0], [1, 2], [2]], L=3)
    assert predict_br([0], ds, 1) == Labelset((0, 1))
    # neighbours 0, 1, 2: label 0 twice, label 1 twice, label 2 once
    assert predict_br([0.9], ds, 3) == Labelset((0, 1))
    # even k: two of four is not a strict majority
    assert predict_br([0.9], ds, 4) == Labelset()


def test_lp_mode_and_tie_rule():
    ds = make_dataset([[0], [1], [2], [3]], [[0], [0], [1], [1]])
    assert predict_lp([0.1], ds, 3) == Labelset((0,))
    # {1} at distance 0.1 and 0.9, {0} at 1.1 and 2.1: tie broken by the nearest carrier
    assert predict_lp([2.1], ds, 4) == Labelset((1,))
    assert predict_lp([0.9], ds, 1) == Labelset((0,))


def test_br_and_lp_copy_the_nearest_neighbour_at_k1(rng):
    for _ in range(100):
        ds = random_dataset(rng, 15, 2, 4)
        q = rng.normal(size=2)
        nearest = ds.labelsets[_sorted_neighbours(ds.features, q)[0]]
        assert predict_br(q, ds, 1) == nearest == predict_lp(q, ds, 1)


def test_votes_match_brute_force(rng):
    for _ in range(200):
        ds = random_dataset(rng, 20, 2, 5, label_rate=0.5)
        k = int(rng.choice([1, 3, 5, 7]))
        q = rng.normal(size=2)
        neighbours = _sorted_neighbours(ds.features, q)[:k]
        votes = Counter(label for i in neighbours for label in ds.labelsets[i])
        assert predict_br(q, ds, k) == Labelset.from_iterable(l for l, c in votes.items() if c > k / 2)
        tally = Counter(ds.labelsets[i] for i in neighbours)
        best = max(tally.values())
        expected = next(ds.labelsets[i] for i in neighbours if tally[ds.labelsets[i]] == best)
        assert predict_lp(q, ds, k) == expected


def test_mlknn_prior_for_universal_label():
    ds = make_dataset(np.arange(6.0), [[0]] * 3 + [[0, 1]] * 3, L=2)
    model = mlknn_fit(ds, 3)
    assert model.priors[0] == pytest.approx(7 / 8)
    assert model.priors[1] == pytest.approx(4 / 8)
    assert mlknn_predict(model, [2.5]).labels[:1] == (0,)


def test_mlknn_posteriors_are_normalised(rng):
    ds = random_dataset(rng, 40, 3, 6)
    model = mlknn_fit(ds, 5)
    assert np.allclose(model.posterior_with.sum(axis=1), 1.0)
    assert np.allclose(model.posterior_without.sum(axis=1), 1.0)
    assert np.all((model.priors > 0) & (model.priors < 1))


def test_mlknn_counts_match_leave_one_out_enumeration(rng):
    s = 1.0
    for _ in range(20):
        ds = random_dataset(rng, 8, 2, 3, label_rate=0.5)
        k = 2
        model = mlknn_fit(ds, k, s)
        Y = ds.label_matrix
        with_counts = np.zeros((3, k + 1))
        without_counts = np.zeros((3, k + 1))
        for i in range(8):
            neighbours = _sorted_neighbours(ds.features, ds.features[i], exclude=i)[:k]
            for label in range(3):
                c = sum(Y[j, label] for j in neighbours)
                (with_counts if Y[i, label] else without_counts)[label, c] += 1
        expected_with = (s + with_counts) / ((k + 1) * s + with_counts.sum(axis=1, keepdims=True))
        expected_without = (s + without_counts) / ((k + 1) * s + without_counts.sum(axis=1, keepdims=True))
        assert np.allclose(model.posterior_with, expected_with, rtol=1e-12)
        assert np.allclose(model.posterior_without, expected_without, rtol=1e-12)
        assert np.allclose(model.priors, (s + Y.sum(axis=0)) / (2 * s + 8), rtol=1e-12)


def test_mlknn_decisions_match_map_rule(rng):
    ds = random_dataset(rng, 30, 2, 4, label_rate=0.5)
    model = mlknn_fit(ds, 3)
    for _ in range(50):
        q = rng.normal(size=2)
        neighbours = _sorted_neighbours(ds.features, q)[:3]
        expected = []
        for label in range(4):
            c = int(ds.label_matrix[neighbours, label].sum())
            p1 = model.priors[label] * model.posterior_with[label, c]
            p0 = (1 - model.priors[label]) * model.posterior_without[label, c]
            if p1 > p0:
                expected.append(label)
        assert mlknn_predict(model, q) == Labelset(tuple(expected))


def test_mlknn_tie_excludes_label():
    # label 0 on exactly half the corpus and no neighbour evidence: equal posteriors
    ds = make_dataset([[0], [1], [2], [3]], [[0], [0], [], []], L=1)
    model = mlknn_fit(ds, 0)
    assert model.priors[0] == pytest.approx(0.5)
    assert mlknn_predict(model, [0]) == Labelset()


def test_mlknn_needs_more_instances_than_k(line_points):
    with pytest.raises(ClassifierError):
        mlknn_fit(line_points, 3)


def test_empty_labelset_prototypes_vote_absent():
    ds = make_dataset([[0], [1], [2]], [[], [], [0]], L=1)
    assert predict_br([0], ds, 3) == Labelset()
    assert predict_lp([0], ds, 3) == Labelset()


@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_predict_all_matches_per_query(rng, kind):
    ds = random_dataset(rng, 25, 3, 4, label_rate=0.5)
    queries = rng.normal(size=(12, 3))
    k = 3
    batch = predict_all(kind, ds, queries, k)
    if kind is ClassifierKind.BR:
        single = [predict_br(q, ds, k) for q in queries]
    elif kind is ClassifierKind.LP:
        single = [predict_lp(q, ds, k) for q in queries]
    else:
        model = mlknn_fit(ds, k)
        single = [mlknn_predict(model, q) for q in queries]
    assert batch == single
    wide = neighbour_matrix(queries, ds, 7)
    assert predict_all(kind.value, ds, queries, k, neighbours=wide) == single


def test_predictions_stay_in_label_space(rng):
    ds = random_dataset(rng, 20, 2, 3, label_rate=0.6)
    for kind in ClassifierKind:
        for labelset in predict_all(kind, ds, rng.normal(size=(10, 2)), 5):
            assert labelset.max_index() < 3
