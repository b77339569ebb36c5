"""Euclidean distance and cluster geometry shared by the reducers.

Pairwise scans run over row blocks of ``scipy.spatial.distance.cdist`` so
clusters of a few thousand high-dimensional points stay within memory.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import DatasetError
from src.mldata import MultilabelDataset

BLOCK_ROWS = 512


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean norm of ``a - b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DatasetError(f"Dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(math.sqrt(float(np.dot(diff, diff))))


def _members(cluster) -> np.ndarray:
    indices = getattr(cluster, "indices", cluster)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise DatasetError("Empty cluster")
    return indices


def _upper_blocks(points: np.ndarray) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (row offset, block of distances) with entries j <= i masked to -1."""
    count = points.shape[0]
    for start in range(0, count, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, count)
        block = cdist(points[start:stop], points)
        rows = np.arange(start, stop)[:, None]
        block[np.arange(count)[None, :] <= rows] = -1.0
        yield start, block


def farthest_pair(ds: MultilabelDataset, cluster) -> Tuple[int, int, float]:
    """Exact farthest pair (dataset indices) and the cluster diameter.

    Among equal-diameter pairs the lexicographically smallest position pair
    wins; members are expected in ascending index order.
    """
    indices = _members(cluster)
    if indices.size == 1:
        return int(indices[0]), int(indices[0]), 0.0
    points = ds.features[indices]
    best = -1.0
    best_pair = (0, 0)
    for start, block in _upper_blocks(points):
        flat = int(np.argmax(block))
        value = float(block.flat[flat])
        if value > best:
            best = value
            row, col = divmod(flat, block.shape[1])
            best_pair = (start + row, col)
    if best <= 0.0:
        return int(indices[0]), int(indices[0]), 0.0
    return int(indices[best_pair[0]]), int(indices[best_pair[1]]), best


def coord_median(ds: MultilabelDataset, cluster) -> np.ndarray:
    """Per-coordinate median; even counts average the two middle values."""
    indices = _members(cluster)
    return np.median(ds.features[indices], axis=0)


def overlap_degree(ds: MultilabelDataset, cluster) -> float:
    """Ratio of mean different-labelset distance to mean same-labelset distance.

    Degenerate cases: no different-labelset pair gives 0.0; no same-labelset
    pair, or same-labelset pairs that are all duplicates, give +inf.
    """
    indices = _members(cluster)
    if indices.size == 1:
        return 0.0
    points = ds.features[indices]
    ids = ds.labelset_ids[indices]
    sum_eq = sum_neq = 0.0
    count_eq = count_neq = 0
    for start, block in _upper_blocks(points):
        upper = block >= 0.0
        same = ids[start:start + block.shape[0], None] == ids[None, :]
        eq_mask = upper & same
        neq_mask = upper & ~same
        sum_eq += float(block[eq_mask].sum())
        sum_neq += float(block[neq_mask].sum())
        count_eq += int(eq_mask.sum())
        count_neq += int(neq_mask.sum())
    if count_neq == 0:
        return 0.0
    if count_eq == 0 or sum_eq == 0.0:
        return math.inf
    return (sum_neq / sum_eq) * (count_eq / count_neq)
