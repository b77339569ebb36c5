"""Multilabel kNN classifiers over a (possibly reduced) reference set.

BRkNN votes every label independently, LP-kNN takes the most frequent
labelset among the neighbours, ML-kNN applies a per-label MAP rule estimated
from leave-one-out neighbourhoods of the reference set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import ClassifierError, DatasetError
from src.mldata import Labelset, MultilabelDataset

logger = logging.getLogger(__name__)

QUERY_BLOCK = 256
DEFAULT_SMOOTHING = 1.0


class ClassifierKind(Enum):
    BR = "br"
    LP = "lp"
    MLKNN = "mlknn"


DISPLAY_NAMES = {ClassifierKind.BR: "BRkNN", ClassifierKind.LP: "LP-kNN", ClassifierKind.MLKNN: "ML-kNN"}


def _check_k(k: int, ref: MultilabelDataset) -> None:
    if k < 1:
        raise ClassifierError(f"k must be positive, got {k}")
    if k > ref.n:
        raise ClassifierError(f"k={k} exceeds reference size {ref.n}")


def _queries(queries, ref: MultilabelDataset) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != ref.f:
        raise DatasetError(f"Query dimensionality {queries.shape[1]} != reference {ref.f}")
    return queries


def neighbour_matrix(queries, ref: MultilabelDataset, k: int) -> np.ndarray:
    """k nearest reference indices per query row, nearest first, ties to lower index."""
    _check_k(k, ref)
    queries = _queries(queries, ref)
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for start in range(0, queries.shape[0], QUERY_BLOCK):
        block = cdist(queries[start:start + QUERY_BLOCK], ref.features)
        out[start:start + block.shape[0]] = np.argsort(block, axis=1, kind="stable")[:, :k]
    return out


def knn_indices(q: Sequence[float], ref: MultilabelDataset, k: int) -> np.ndarray:
    return neighbour_matrix(q, ref, k)[0]


def _vote_br(ref: MultilabelDataset, neighbours: np.ndarray) -> Labelset:
    counts = ref.label_matrix[neighbours].sum(axis=0)
    return Labelset(tuple(np.flatnonzero(2 * counts > neighbours.size).tolist()))


def _vote_lp(ref: MultilabelDataset, neighbours: np.ndarray) -> Labelset:
    tally = {}
    for index in neighbours:
        labelset = ref.labelsets[index]
        tally[labelset] = tally.get(labelset, 0) + 1
    # dict order is nearest-first, so max() keeps the nearest tied labelset
    return max(tally, key=tally.get)


def predict_br(q: Sequence[float], ref: MultilabelDataset, k: int) -> Labelset:
    """Labels carried by strictly more than half of the k neighbours."""
    return _vote_br(ref, knn_indices(q, ref, k))


def predict_lp(q: Sequence[float], ref: MultilabelDataset, k: int) -> Labelset:
    """Most frequent labelset among the k neighbours."""
    return _vote_lp(ref, knn_indices(q, ref, k))


@dataclass(frozen=True)
class MlknnModel:
    k: int
    smoothing: float
    priors: np.ndarray
    posterior_with: np.ndarray
    posterior_without: np.ndarray
    reference: MultilabelDataset


def _loo_neighbours(T: MultilabelDataset, k: int) -> np.ndarray:
    out = np.empty((T.n, k), dtype=np.int64)
    for start in range(0, T.n, QUERY_BLOCK):
        block = cdist(T.features[start:start + QUERY_BLOCK], T.features)
        rows = np.arange(block.shape[0])
        block[rows, start + rows] = np.inf
        out[start:start + block.shape[0]] = np.argsort(block, axis=1, kind="stable")[:, :k]
    return out


def mlknn_fit(T: MultilabelDataset, k: int, s: float = DEFAULT_SMOOTHING) -> MlknnModel:
    """Estimate label priors and neighbour-count likelihoods with smoothing ``s``."""
    if k < 0:
        raise ClassifierError(f"k must be non-negative, got {k}")
    if T.n <= k:
        raise ClassifierError(f"ML-kNN needs more than k={k} training instances, got {T.n}")
    Y = T.label_matrix
    n, L = Y.shape
    priors = (s + Y.sum(axis=0)) / (2 * s + n)

    counts = Y[_loo_neighbours(T, k)].sum(axis=1) if k > 0 else np.zeros((n, L), dtype=np.int64)
    kappa_with = np.zeros((L, k + 1), dtype=np.int64)
    kappa_without = np.zeros((L, k + 1), dtype=np.int64)
    label_idx = np.broadcast_to(np.arange(L), (n, L))
    np.add.at(kappa_with, (label_idx[Y], counts[Y]), 1)
    np.add.at(kappa_without, (label_idx[~Y], counts[~Y]), 1)

    posterior_with = (s + kappa_with) / ((k + 1) * s + kappa_with.sum(axis=1, keepdims=True))
    posterior_without = (s + kappa_without) / ((k + 1) * s + kappa_without.sum(axis=1, keepdims=True))
    logger.debug(f"ML-kNN fitted: n={n}, L={L}, k={k}, s={s}")
    return MlknnModel(k, s, priors, posterior_with, posterior_without, T)


def _decide_mlknn(model: MlknnModel, counts: np.ndarray) -> Labelset:
    labels = np.arange(model.priors.size)
    p1 = model.priors * model.posterior_with[labels, counts]
    p0 = (1.0 - model.priors) * model.posterior_without[labels, counts]
    return Labelset(tuple(np.flatnonzero(p1 > p0).tolist()))


def mlknn_predict(model: MlknnModel, q: Sequence[float]) -> Labelset:
    """Include a label iff its posterior with the label beats the posterior without."""
    ref = model.reference
    if model.k == 0:
        return _decide_mlknn(model, np.zeros(ref.label_count, dtype=np.int64))
    neighbours = knn_indices(q, ref, model.k)
    return _decide_mlknn(model, ref.label_matrix[neighbours].sum(axis=0))


def predict_all(
    kind: ClassifierKind,
    ref: MultilabelDataset,
    queries,
    k: int,
    *,
    neighbours: Optional[np.ndarray] = None,
    model: Optional[MlknnModel] = None,
    smoothing: float = DEFAULT_SMOOTHING,
) -> List[Labelset]:
    """Predict every query row; ``neighbours`` may carry a precomputed (m x >=k) matrix."""
    kind = kind if isinstance(kind, ClassifierKind) else ClassifierKind(str(kind))
    if kind is ClassifierKind.MLKNN:
        model = model or mlknn_fit(ref, k, smoothing)
        if k == 0:
            rows = _queries(queries, ref).shape[0]
            return [_decide_mlknn(model, np.zeros(ref.label_count, dtype=np.int64)) for _ in range(rows)]
        if neighbours is None:
            neighbours = neighbour_matrix(queries, ref, k)
        counts = ref.label_matrix[neighbours[:, :k]].sum(axis=1)
        return [_decide_mlknn(model, row) for row in counts]
    _check_k(k, ref)
    if neighbours is None:
        neighbours = neighbour_matrix(queries, ref, k)
    if kind is ClassifierKind.BR:
        return [_vote_br(ref, row[:k]) for row in neighbours]
    return [_vote_lp(ref, row[:k]) for row in neighbours]
