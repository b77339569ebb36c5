"""Label noise induction by swapping the labelsets of random instance pairs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from src.errors import DatasetError
from src.mldata import MultilabelDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSpec:
    theta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.theta) <= 1.0:
            raise DatasetError(f"Noise rate must lie in [0, 1], got {self.theta}")


def swap_count(theta: float, n: int) -> int:
    """floor(theta * n), truncated to an even number so every sampled row has a partner."""
    count = math.floor(Fraction(str(theta)) * n)
    return count - count % 2


def induce_noise(T: MultilabelDataset, spec: NoiseSpec) -> MultilabelDataset:
    """Sample floor(theta*|T|) rows and exchange labelsets between mirrored sample positions.

    Element i of the sample swaps with element len-1-i. Features are untouched.
    """
    count = swap_count(spec.theta, T.n)
    if count == 0:
        return T
    if math.floor(Fraction(str(spec.theta)) * T.n) != count:
        logger.debug(f"Noise sample of {count + 1} rows truncated to {count} for exact pairing")
    rng = np.random.default_rng(spec.seed)
    sample = rng.choice(T.n, size=count, replace=False)
    labelsets = list(T.labelsets)
    for i in range(count // 2):
        a, b = sample[i], sample[count - 1 - i]
        labelsets[a], labelsets[b] = labelsets[b], labelsets[a]
    logger.debug(f"Swapped labelsets of {count} of {T.n} rows (theta={spec.theta}, seed={spec.seed})")
    return T.with_labelsets(labelsets)
