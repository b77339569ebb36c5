"""Multilabel dataset model and corpus-level descriptors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from src.errors import DatasetError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Labelset:
    """Ordered set of 0-based label indices assigned to one instance."""

    labels: Tuple[int, ...] = ()

    def __post_init__(self):
        labels = tuple(int(label) for label in self.labels)
        for previous, current in zip(labels, labels[1:]):
            if current <= previous:
                raise DatasetError(f"Labelset indices must be strictly increasing: {labels}")
        if labels and labels[0] < 0:
            raise DatasetError(f"Negative label index in labelset: {labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_iterable(cls, labels: Iterable[int]) -> "Labelset":
        """Build a labelset from any iterable, sorting and dropping duplicates."""
        return cls(tuple(sorted({int(label) for label in labels})))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[int]:
        return iter(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def max_index(self) -> int:
        return self.labels[-1] if self.labels else -1

    def symmetric_difference_size(self, other: "Labelset") -> int:
        return len(set(self.labels).symmetric_difference(other.labels))

    def complement(self, label_count: int) -> "Labelset":
        present = set(self.labels)
        return Labelset(tuple(label for label in range(label_count) if label not in present))

    def __str__(self) -> str:
        return "{" + ",".join(str(label) for label in self.labels) + "}"


@dataclass(frozen=True, eq=False)
class MultilabelDataset:
    """Feature matrix paired with one labelset per row.

    Instances are immutable after construction: the feature matrix is stored
    as a read-only float64 array and labelsets as a tuple.
    """

    features: np.ndarray
    labelsets: Tuple[Labelset, ...]
    label_count: int
    label_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, copy=True)
        labelsets = tuple(
            ls if isinstance(ls, Labelset) else Labelset.from_iterable(ls) for ls in self.labelsets
        )
        if features.ndim == 1 and features.size == 0:
            features = features.reshape(0, 0)
        if features.ndim != 2:
            raise DatasetError(f"Features must be a 2-D matrix, got shape {features.shape}")
        if features.shape[0] != len(labelsets):
            raise DatasetError(
                f"Row count mismatch: {features.shape[0]} feature rows vs {len(labelsets)} labelsets"
            )
        if not np.all(np.isfinite(features)):
            raise DatasetError("Features contain NaN or infinite values")
        label_count = int(self.label_count)
        if label_count < 1:
            raise DatasetError(f"Label count must be at least 1, got {label_count}")
        for row, labelset in enumerate(labelsets):
            if labelset.max_index() >= label_count:
                raise DatasetError(
                    f"Row {row}: label index {labelset.max_index()} out of range for L={label_count}"
                )
        names = None
        if self.label_names is not None:
            names = tuple(str(name) for name in self.label_names)
            if len(names) != label_count:
                raise DatasetError(f"Expected {label_count} label names, got {len(names)}")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labelsets", labelsets)
        object.__setattr__(self, "label_count", label_count)
        object.__setattr__(self, "label_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def f(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n

    @cached_property
    def label_matrix(self) -> np.ndarray:
        """n x L boolean indicator matrix of the labelsets."""
        matrix = np.zeros((self.n, self.label_count), dtype=bool)
        for row, labelset in enumerate(self.labelsets):
            matrix[row, list(labelset.labels)] = True
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def labelset_ids(self) -> np.ndarray:
        """Integer id per row; equal ids iff equal labelsets (ids in first-occurrence order)."""
        ids = {}
        out = np.empty(self.n, dtype=np.int64)
        for row, labelset in enumerate(self.labelsets):
            out[row] = ids.setdefault(labelset, len(ids))
        out.setflags(write=False)
        return out

    def subset(self, indices: Sequence[int]) -> "MultilabelDataset":
        return subset(self, indices)

    def with_labelsets(self, labelsets: Sequence[Labelset]) -> "MultilabelDataset":
        """Same features and label space, new labelsets."""
        return MultilabelDataset(self.features, tuple(labelsets), self.label_count, self.label_names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultilabelDataset):
            return NotImplemented
        return (
            self.label_count == other.label_count
            and self.label_names == other.label_names
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and self.labelsets == other.labelsets
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"MultilabelDataset(n={self.n}, f={self.f}, L={self.label_count})"


@dataclass(frozen=True)
class CorpusDescriptor:
    """Size, dimensionality and label statistics of a corpus."""

    n: int
    f: int
    L: int
    cardinality: float
    density: float
    distinct_labelsets: int = 0

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "f": self.f,
            "L": self.L,
            "cardinality": self.cardinality,
            "density": self.density,
            "distinct_labelsets": self.distinct_labelsets,
        }


@dataclass(frozen=True)
class CorpusSplit:
    """A named corpus with its fixed train and test partitions."""

    name: str
    train: MultilabelDataset
    test: MultilabelDataset
    domain: Optional[str] = field(default=None)

    def __post_init__(self):
        if self.train.f != self.test.f:
            raise DatasetError(
                f"{self.name}: train has {self.train.f} features but test has {self.test.f}"
            )
        if self.train.label_count != self.test.label_count:
            raise DatasetError(
                f"{self.name}: train has L={self.train.label_count} but test has L={self.test.label_count}"
            )


def describe(ds: MultilabelDataset) -> CorpusDescriptor:
    """Cardinality (mean labels per instance) and density (cardinality / L)."""
    if ds.n == 0:
        raise DatasetError("empty corpus")
    total = sum(len(labelset) for labelset in ds.labelsets)
    cardinality = total / ds.n
    return CorpusDescriptor(
        n=ds.n,
        f=ds.f,
        L=ds.label_count,
        cardinality=cardinality,
        density=cardinality / ds.label_count,
        distinct_labelsets=len(set(ds.labelsets)),
    )


def describe_split(split: CorpusSplit) -> Tuple[CorpusDescriptor, CorpusDescriptor]:
    return describe(split.train), describe(split.test)


def subset(ds: MultilabelDataset, indices: Sequence[int]) -> MultilabelDataset:
    """Rows and labelsets at ``indices``, in the given order."""
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= ds.n):
        bad = idx[(idx < 0) | (idx >= ds.n)][0]
        raise DatasetError(f"Index {bad} out of range for dataset of size {ds.n}")
    if idx.size == ds.n and np.array_equal(idx, np.arange(ds.n)):
        return ds
    features = ds.features[idx] if idx.size else np.zeros((0, ds.f))
    return MultilabelDataset(
        features,
        tuple(ds.labelsets[i] for i in idx),
        ds.label_count,
        ds.label_names,
    )
