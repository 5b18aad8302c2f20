"""Uncertainty-sampling query strategies: least confidence, margin, entropy.

All three score a posterior matrix row-wise; selection is a top-k over the
pool with ties broken by pool order. Entropy selection is invariant to the
log base (a positive rescaling), so the base only matters for reported score
values; the default base is 10.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .classifier import PosteriorMatrix

DEFAULT_LOG_BASE = 10.0


class UncertaintyKind(str, Enum):
    LEAST_CONFIDENCE = "lc"
    MARGIN = "ms"
    ENTROPY = "es"


@dataclass(frozen=True)
class UncertaintyStrategy:
    kind: UncertaintyKind
    entropy_log_base: float = DEFAULT_LOG_BASE

    def __post_init__(self) -> None:
        _check_log_base(self.entropy_log_base)


def _check_log_base(base: float) -> None:
    if not base > 0 or base == 1.0:
        raise ValueError(f"log base must be positive and != 1, got {base}")


def _nonempty(posteriors: PosteriorMatrix) -> np.ndarray:
    if posteriors.num_rows == 0:
        raise ValueError("empty posterior matrix")
    return posteriors.values


def least_confidence_scores(posteriors: PosteriorMatrix) -> np.ndarray:
    """score = 1 - max posterior; high means the top label is in doubt."""
    return 1.0 - _nonempty(posteriors).max(axis=1)


def margin_scores(posteriors: PosteriorMatrix) -> np.ndarray:
    """Gap between the two largest posteriors; small means ambiguous."""
    values = _nonempty(posteriors)
    if posteriors.num_classes < 2:
        raise ValueError("margin scores need at least 2 classes")
    top_two = np.sort(values, axis=1)[:, -2:]
    return top_two[:, 1] - top_two[:, 0]


def entropy_scores(posteriors: PosteriorMatrix, log_base: float = DEFAULT_LOG_BASE) -> np.ndarray:
    """Row entropy with the convention 0*log(0) = 0."""
    _check_log_base(log_base)
    values = _nonempty(posteriors)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(values > 0, values * np.log(values), 0.0)
    return -plogp.sum(axis=1) / np.log(log_base)


def strategy_scores(posteriors: PosteriorMatrix, strategy: UncertaintyStrategy) -> np.ndarray:
    if strategy.kind is UncertaintyKind.LEAST_CONFIDENCE:
        return least_confidence_scores(posteriors)
    if strategy.kind is UncertaintyKind.MARGIN:
        return margin_scores(posteriors)
    return entropy_scores(posteriors, strategy.entropy_log_base)


def rank_by_score(scores: np.ndarray, k: int, descending: bool) -> list[int]:
    """Indices of the k best scores; ties keep input (pool) order."""
    n = scores.shape[0]
    if n == 0:
        raise ValueError("empty pool")
    if k > n:
        raise ValueError(f"cannot select {k} of {n} instances")
    keys = -scores if descending else scores
    order = np.argsort(keys, kind="stable")
    return [int(i) for i in order[:k]]


def select_uncertain(
    posteriors: PosteriorMatrix,
    strategy: UncertaintyStrategy,
    k: int = 1,
) -> list[str]:
    """Ids of the k most informative instances under the strategy.

    Least confidence and entropy take the highest scores; margin takes the
    lowest. Result order is selection order.
    """
    scores = strategy_scores(posteriors, strategy)
    descending = strategy.kind is not UncertaintyKind.MARGIN
    picked = rank_by_score(scores, k, descending)
    return [posteriors.instance_ids[i] for i in picked]
