"""Space partitioning engine: repeatedly halve a cluster around its farthest pair.

The loop is parameterized by which cluster to divide next (largest diameter or
largest overlap degree) and when to stop (a target cluster count or label
homogeneity of every cluster).
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import PartitionError, TerminalClusterError
from src.geometry import farthest_pair, overlap_degree
from src.mldata import MultilabelDataset

logger = logging.getLogger(__name__)


class SelectionRule(Enum):
    DIAMETER = "diameter"
    OVERLAP = "overlap"


class Heterogeneity(Enum):
    """When a cluster counts as mixed for the split preference.

    DISTINCT_LABELSETS: members carry more than one distinct labelset.
    NO_COMMON_LABEL: no single label is shared by every member.
    """

    DISTINCT_LABELSETS = "distinct_labelsets"
    NO_COMMON_LABEL = "no_common_label"


@dataclass(frozen=True)
class StoppingRule:
    kind: str  # "count" | "homogeneity"
    n_d: int = 0

    def __post_init__(self):
        if self.kind not in ("count", "homogeneity"):
            raise PartitionError(f"Unknown stopping rule '{self.kind}'")
        if self.kind == "count" and self.n_d < 1:
            raise PartitionError(f"Count stopping rule needs n_d >= 1, got {self.n_d}")

    @classmethod
    def count(cls, n_d: int) -> "StoppingRule":
        return cls("count", int(n_d))

    @classmethod
    def homogeneity(cls) -> "StoppingRule":
        return cls("homogeneity")


@dataclass(eq=False)
class Cluster:
    """Member indices (ascending) with cached farthest pair and diameter."""

    indices: np.ndarray
    order: int
    q1: int
    q2: int
    diameter: float
    distinct_labelsets: int
    has_common_label: bool
    _overlap: Optional[float] = field(default=None, repr=False)

    @classmethod
    def build(cls, ds: MultilabelDataset, indices, order: int = 0) -> "Cluster":
        indices = np.unique(np.asarray(indices, dtype=np.int64))
        if indices.size == 0:
            raise PartitionError("Clusters cannot be empty")
        q1, q2, diameter = farthest_pair(ds, indices)
        labels = ds.label_matrix[indices]
        return cls(
            indices=indices,
            order=order,
            q1=q1,
            q2=q2,
            diameter=diameter,
            distinct_labelsets=int(np.unique(ds.labelset_ids[indices]).size),
            has_common_label=bool(labels.all(axis=0).any()),
        )

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def terminal(self) -> bool:
        return self.diameter <= 0.0

    def overlap(self, ds: MultilabelDataset) -> float:
        if self._overlap is None:
            self._overlap = overlap_degree(ds, self.indices)
        return self._overlap

    def is_heterogeneous(self, rule: Heterogeneity) -> bool:
        if rule is Heterogeneity.NO_COMMON_LABEL:
            return not self.has_common_label
        return self.distinct_labelsets > 1


def split_cluster(
    ds: MultilabelDataset, c: Cluster, orders: Tuple[int, int] = (1, 2)
) -> Tuple[Cluster, Cluster]:
    """Divide ``c`` by proximity to its farthest pair; ties go to the first half."""
    if len(c) < 2 or c.terminal:
        raise TerminalClusterError(f"Cluster {c.order} has zero diameter and cannot be split")
    points = ds.features[c.indices]
    anchors = ds.features[[c.q1, c.q2]]
    distances = cdist(points, anchors)
    first = distances[:, 0] <= distances[:, 1]
    b1 = Cluster.build(ds, c.indices[first], orders[0])
    b2 = Cluster.build(ds, c.indices[~first], orders[1])
    return b1, b2


def _score(ds: MultilabelDataset, c: Cluster, select: SelectionRule) -> float:
    return c.overlap(ds) if select is SelectionRule.OVERLAP else c.diameter


def _eligible(c: Cluster, stop: StoppingRule) -> bool:
    if c.terminal:
        return False
    if stop.kind == "homogeneity":
        return not c.has_common_label
    return True


def partition(
    ds: MultilabelDataset,
    select: SelectionRule,
    stop: StoppingRule,
    heterogeneity: Heterogeneity = Heterogeneity.DISTINCT_LABELSETS,
) -> List[Cluster]:
    """Partition ``ds`` into disjoint clusters, returned in creation order.

    Heterogeneous clusters are preferred for splitting; among the preferred
    set the largest score wins, ties going to the oldest cluster.
    """
    if ds.n == 0:
        raise PartitionError("Cannot partition an empty corpus")
    if stop.kind == "count" and stop.n_d > ds.n:
        raise PartitionError(
            f"partition count exceeds corpus size (n_d={stop.n_d}, n={ds.n})"
        )

    created = 0
    root = Cluster.build(ds, np.arange(ds.n), created)
    clusters = {root.order: root}
    mixed: List[Tuple[float, int]] = []
    pure: List[Tuple[float, int]] = []

    def push(c: Cluster) -> None:
        if not _eligible(c, stop):
            return
        entry = (-_score(ds, c, select), c.order)
        heapq.heappush(mixed if c.is_heterogeneous(heterogeneity) else pure, entry)

    push(root)
    while True:
        if stop.kind == "count" and len(clusters) >= stop.n_d:
            break
        heap = mixed if mixed else pure
        if not heap:
            break
        _, order = heapq.heappop(heap)
        parent = clusters.pop(order)
        b1, b2 = split_cluster(ds, parent, (created + 1, created + 2))
        created += 2
        for child in (b1, b2):
            clusters[child.order] = child
            push(child)

    result = [clusters[order] for order in sorted(clusters)]
    covered = np.sort(np.concatenate([c.indices for c in result]))
    assert np.array_equal(covered, np.arange(ds.n)), "clusters must partition the corpus"

    terminal = sum(1 for c in result if c.terminal and len(c) > 1)
    if stop.kind == "count" and len(result) < stop.n_d:
        logger.warning(
            f"Partitioning stopped at {len(result)} of {stop.n_d} clusters: "
            f"{terminal} clusters hold only duplicated points"
        )
    logger.debug(
        f"Partitioned n={ds.n} into {len(result)} clusters "
        f"(select={select.value}, stop={stop.kind}, terminal={terminal})"
    )
    return result

