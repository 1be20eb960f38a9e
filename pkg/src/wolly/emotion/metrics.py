"""Evaluation arithmetic for the emotion predictor.

The training objective is a weighted sum of a category loss and a
continuous (VAD) loss; evaluation reports per-category average precision
with its 26-way mean, and per-dimension mean absolute VAD error with its
3-way mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .wire import CATEGORIES, DimensionMismatch


class NoPositives(ValueError):
    pass


@dataclass(frozen=True)
class LossWeights:
    w_cat: float = 0.5
    w_cont: float = 0.5

    def __post_init__(self) -> None:
        if self.w_cat < 0 or self.w_cont < 0:
            raise ValueError("loss weights must be non-negative")
        if self.w_cat == 0 and self.w_cont == 0:
            raise ValueError("loss weights must not both be zero")


def combined_loss(cat_loss: float, cont_loss: float, w: LossWeights = LossWeights()) -> float:
    """w_cat * cat_loss + w_cont * cont_loss; linear in each argument."""
    if cat_loss < 0 or cont_loss < 0:
        raise ValueError("losses must be non-negative")
    return w.w_cat * cat_loss + w.w_cont * cont_loss


def average_precision(labels: Sequence[int], scores: Sequence[float]) -> float:
    """AP of a binary ranking: rank by descending score (stable on ties),
    then average precision-at-rank over the positive items.
    """
    if len(labels) != len(scores):
        raise DimensionMismatch(f"labels ({len(labels)}) and scores ({len(scores)}) differ")
    if not labels:
        raise DimensionMismatch("need at least one item")
    for y in labels:
        if y not in (0, 1):
            raise ValueError(f"labels must be binary, got {y!r}")
    positives = sum(labels)
    if positives == 0:
        raise NoPositives("no positive labels")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    total = 0.0
    for rank, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            total += hits / rank
    return total / positives


def mean_ap(aps: Sequence[float]) -> float:
    """Arithmetic mean of the 26 per-category AP values."""
    if len(aps) != len(CATEGORIES):
        raise DimensionMismatch(f"expected {len(CATEGORIES)} AP values, got {len(aps)}")
    return math.fsum(aps) / len(aps)


def vad_error(pred: Sequence[Sequence[float]], truth: Sequence[Sequence[float]]) -> tuple[float, float, float]:
    """Per-dimension mean absolute error over paired VAD triples."""
    if len(pred) != len(truth):
        raise DimensionMismatch(f"pred ({len(pred)}) and truth ({len(truth)}) differ")
    if not pred:
        raise DimensionMismatch("need at least one sample")
    sums = [0.0, 0.0, 0.0]
    for p, t in zip(pred, truth):
        if len(p) != 3 or len(t) != 3:
            raise DimensionMismatch("VAD samples must have 3 components")
        for d in range(3):
            sums[d] += abs(p[d] - t[d])
    n = len(pred)
    return (sums[0] / n, sums[1] / n, sums[2] / n)


def mean_vad_error(per_dim: Sequence[float]) -> float:
    """Mean of the three per-dimension errors."""
    if len(per_dim) != 3:
        raise DimensionMismatch(f"expected 3 per-dimension errors, got {len(per_dim)}")
    return math.fsum(per_dim) / 3.0
