"""Prototype generation strategies mapping a training set to a reduced reference set.

Methods:
    all    -- identity, no reduction
    mchen  -- diameter partition into n_d clusters, one majority-label prototype each
    mrsp1  -- diameter partition into n_d clusters, one prototype per labelset
    mrsp2  -- overlap-degree partition into n_d clusters, one prototype per labelset
    mrsp3  -- diameter partition until every cluster shares a label, majority merge
    mrhc   -- recursive homogeneous clustering around label means, majority merge
"""

from __future__ import annotations

import logging
import math
import re
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import ConfigError, DatasetError
from src.geometry import coord_median
from src.mldata import Labelset, MultilabelDataset
from src.splitter import (
    Cluster,
    Heterogeneity,
    SelectionRule,
    StoppingRule,
    partition,
    split_cluster,
)

logger = logging.getLogger(__name__)

M_GRID = (10, 30, 50, 70, 90)


class Method(Enum):
    ALL = "all"
    MRHC = "mrhc"
    MCHEN = "mchen"
    MRSP1 = "mrsp1"
    MRSP2 = "mrsp2"
    MRSP3 = "mrsp3"


PARAMETERIZED = {Method.MCHEN, Method.MRSP1, Method.MRSP2}
DISPLAY_NAMES = {
    Method.ALL: "ALL",
    Method.MRHC: "MRHC",
    Method.MCHEN: "MChen",
    Method.MRSP1: "MRSP1",
    Method.MRSP2: "MRSP2",
    Method.MRSP3: "MRSP3",
}
_METHOD_ORDER = {method: rank for rank, method in enumerate(Method)}


def scaled_count(m: float, n: int) -> int:
    """round(m * n / 100) with halves rounded away from zero, clamped to [1, n]."""
    exact = Fraction(str(m)) * n / 100
    rounded = math.floor(exact + Fraction(1, 2))
    return max(1, min(n, rounded))


@dataclass(frozen=True)
class ReducerSpec:
    method: Method
    m: Optional[float] = None

    def __post_init__(self):
        method = self.method if isinstance(self.method, Method) else Method(str(self.method).lower())
        object.__setattr__(self, "method", method)
        if method in PARAMETERIZED:
            if self.m is None:
                raise ConfigError(f"Method '{method.value}' needs the percent parameter m")
            if not 0 < float(self.m) <= 100:
                raise ConfigError(f"m must lie in (0, 100], got {self.m}")
            m = float(self.m)
            object.__setattr__(self, "m", int(m) if m.is_integer() else m)
        elif self.m is not None:
            raise ConfigError(f"Method '{method.value}' takes no m parameter")

    def n_d(self, n: int) -> int:
        if self.m is None:
            raise ConfigError(f"Method '{self.method.value}' has no n_d")
        return scaled_count(self.m, n)

    @property
    def label(self) -> str:
        name = DISPLAY_NAMES[self.method]
        return f"{name}_{self.m}" if self.m is not None else name

    @property
    def sort_key(self) -> Tuple[int, float]:
        return _METHOD_ORDER[self.method], float(self.m or 0)


_METHOD_PATTERN = re.compile(
    r"^\s*(" + "|".join(sorted((m.value for m in Method), key=len, reverse=True)) + r")"
    r"(?:[_\-\s]*(\d+(?:\.\d+)?))?\s*$",
    re.IGNORECASE,
)


def parse_method(text: str, m: Optional[float] = None) -> ReducerSpec:
    """Parse ``mchen_10``, ``MRSP1_30``, ``mrsp3``, ``ALL`` and similar tags.

    An explicit ``m`` replaces the percent suffix of the tag, so ``("mchen", 10)``
    and ``"mchen_10"`` give the same spec.
    """
    match = _METHOD_PATTERN.match(str(text))
    if not match:
        raise ConfigError(
            f"Unknown method '{text}' (expected one of {[x.value for x in Method]}, optionally _<m>)"
        )
    method, suffix = Method(match.group(1).lower()), match.group(2)
    if m is None and suffix is not None:
        m = float(suffix)
    return ReducerSpec(method, m)


def method_sort_key(label: str) -> Tuple[int, float]:
    """Table order (ALL, MRHC, MChen, MRSP1, MRSP2, MRSP3) for a method label."""
    try:
        return parse_method(label).sort_key
    except ConfigError:
        return len(_METHOD_ORDER), 0.0


@dataclass(frozen=True)
class ReductionResult:
    reduced: MultilabelDataset
    size_pct: float
    method: str = ""
    clusters: int = 0
    elapsed_s: float = 0.0


# ---------------------------------------------------------------------------
# Prototype merging
# ---------------------------------------------------------------------------

def _indices(cluster) -> np.ndarray:
    return np.asarray(getattr(cluster, "indices", cluster), dtype=np.int64)


def merge_majority(ds: MultilabelDataset, c) -> Tuple[np.ndarray, Labelset]:
    """Median features; keep labels carried by at least half of the members."""
    indices = _indices(c)
    counts = ds.label_matrix[indices].sum(axis=0)
    keep = np.flatnonzero(2 * counts >= indices.size)
    return coord_median(ds, indices), Labelset(tuple(keep.tolist()))


def merge_per_labelset(ds: MultilabelDataset, c) -> List[Tuple[np.ndarray, Labelset]]:
    """One median prototype per distinct labelset, in first-occurrence order."""
    indices = _indices(c)
    groups = {}
    for index in indices:
        groups.setdefault(ds.labelsets[index], []).append(index)
    return [(coord_median(ds, members), labelset) for labelset, members in groups.items()]


# ---------------------------------------------------------------------------
# MRHC
# ---------------------------------------------------------------------------

def _label_mean_groups(ds: MultilabelDataset, indices: np.ndarray) -> List[np.ndarray]:
    """Assign members to their nearest per-label mean; empty groups dropped."""
    labels = ds.label_matrix[indices]
    present = np.flatnonzero(labels.any(axis=0))
    if present.size == 0:
        return [indices]
    points = ds.features[indices]
    means = np.vstack([points[labels[:, label]].mean(axis=0) for label in present])
    nearest = np.argmin(cdist(points, means), axis=1)
    return [indices[nearest == g] for g in range(present.size) if np.any(nearest == g)]


def homogeneous_clusters(ds: MultilabelDataset) -> List[Cluster]:
    """Recursive homogeneous clustering; final clusters in creation order."""
    created = 0
    queue = deque([Cluster.build(ds, np.arange(ds.n), created)])
    final: List[Cluster] = []
    while queue:
        c = queue.popleft()
        if c.has_common_label or c.terminal:
            final.append(c)
            continue
        groups = _label_mean_groups(ds, c.indices)
        if len(groups) > 1:
            children = []
            for group in groups:
                created += 1
                children.append(Cluster.build(ds, group, created))
        else:
            children = list(split_cluster(ds, c, (created + 1, created + 2)))
            created += 2
        queue.extend(children)
    final.sort(key=lambda c: c.order)
    return final


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------

def _assemble(ds: MultilabelDataset, prototypes: List[Tuple[np.ndarray, Labelset]]) -> MultilabelDataset:
    features = np.vstack([p[0] for p in prototypes]) if prototypes else np.zeros((0, ds.f))
    return MultilabelDataset(features, tuple(p[1] for p in prototypes), ds.label_count, ds.label_names)


def reduce(
    spec: ReducerSpec,
    T: MultilabelDataset,
    heterogeneity: Heterogeneity = Heterogeneity.DISTINCT_LABELSETS,
) -> ReductionResult:
    """Apply the reduction strategy described by ``spec`` to the training set ``T``."""
    if T.n == 0:
        raise DatasetError("Cannot reduce an empty corpus")
    started = time.perf_counter()
    method = spec.method

    if method is Method.ALL:
        return ReductionResult(T, 100.0, spec.label, T.n, time.perf_counter() - started)

    if method is Method.MRHC:
        clusters = homogeneous_clusters(T)
    elif method is Method.MRSP3:
        clusters = partition(T, SelectionRule.DIAMETER, StoppingRule.homogeneity(), heterogeneity)
    else:
        select = SelectionRule.OVERLAP if method is Method.MRSP2 else SelectionRule.DIAMETER
        clusters = partition(T, select, StoppingRule.count(spec.n_d(T.n)), heterogeneity)

    prototypes: List[Tuple[np.ndarray, Labelset]] = []
    if method in (Method.MRSP1, Method.MRSP2):
        for c in clusters:
            prototypes.extend(merge_per_labelset(T, c))
    else:
        prototypes = [merge_majority(T, c) for c in clusters]

    reduced = _assemble(T, prototypes)
    elapsed = time.perf_counter() - started
    size_pct = 100.0 * reduced.n / T.n
    logger.info(
        f"{spec.label}: |T|={T.n} -> |R|={reduced.n} ({size_pct:.2f}%), "
        f"{len(clusters)} clusters in {elapsed:.3f}s"
    )
    return ReductionResult(reduced, size_pct, spec.label, len(clusters), elapsed)
