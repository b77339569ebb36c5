"""Tests for label-swap noise induction."""

from collections import Counter

import numpy as np
import pytest

from conftest import make_dataset, random_dataset
from src.errors import DatasetError
from src.mldata import describe
from src.noise import NoiseSpec, induce_noise, swap_count


def test_theta_zero_is_identity(rng):
    ds = random_dataset(rng, 30, 2, 4)
    assert induce_noise(ds, NoiseSpec(0.0, seed=3)) is ds


def test_theta_one_on_two_instances_swaps():
    ds = make_dataset([[0.0], [1.0]], [[0], [1]])
    noisy = induce_noise(ds, NoiseSpec(1.0, seed=0))
    assert noisy.labelsets == (ds.labelsets[1], ds.labelsets[0])
    assert np.array_equal(noisy.features, ds.features)


@pytest.mark.parametrize("theta, n, expected", [(0.4, 100, 40), (0.2, 391, 78), (0.2, 7, 0), (0.3, 11, 2), (1.0, 5, 4)])
def test_swap_count(theta, n, expected):
    assert swap_count(theta, n) == expected


def test_theta_validation():
    with pytest.raises(DatasetError):
        NoiseSpec(1.5)
    with pytest.raises(DatasetError):
        NoiseSpec(-0.1)


@pytest.mark.parametrize("theta", [0.2, 0.4])
def test_noise_invariants(theta):
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 120))
        ds = random_dataset(rng, n, 3, 5)
        noisy = induce_noise(ds, NoiseSpec(theta, seed=seed))
        assert np.array_equal(noisy.features, ds.features)
        assert Counter(noisy.labelsets) == Counter(ds.labelsets)
        changed = sum(1 for a, b in zip(ds.labelsets, noisy.labelsets) if a != b)
        count = swap_count(theta, n)
        sample = np.random.default_rng(seed).choice(n, size=count, replace=False)
        differing = sum(1 for i in range(count // 2) if ds.labelsets[sample[i]] != ds.labelsets[sample[count - 1 - i]])
        assert changed == 2 * differing <= count
        assert describe(noisy).cardinality == pytest.approx(describe(ds).cardinality)


def test_exactly_the_sampled_rows_change_when_labelsets_are_unique():
    n = 100
    ds = make_dataset(np.arange(float(n)), [[i] for i in range(n)], L=n)
    noisy = induce_noise(ds, NoiseSpec(0.4, seed=17))
    changed = sum(1 for a, b in zip(ds.labelsets, noisy.labelsets) if a != b)
    assert changed == 40


def test_noise_is_deterministic(rng):
    ds = random_dataset(rng, 60, 2, 4)
    assert induce_noise(ds, NoiseSpec(0.4, seed=5)) == induce_noise(ds, NoiseSpec(0.4, seed=5))
