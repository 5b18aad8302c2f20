"""Query-by-committee: bagged classifier ensembles and disagreement scoring.

Members are trained on bootstrap resamples of the labeled set, which is the
diversification mechanism (differing random initialization is a no-op for a
convex model). Disagreement is measured three ways: entropy of the members'
hard-vote distribution, entropy of the averaged (consensus) posterior, and
the largest per-member KL divergence from the consensus.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import classifier
from .classifier import ModelParams, PosteriorMatrix, TrainConfig
from .uncertainty import DEFAULT_LOG_BASE, _check_log_base, entropy_scores, rank_by_score

DEFAULT_COMMITTEE_SIZE = 3
KL_CLAMP = 1e-12
BOOTSTRAP_RETRIES = 20


class DisagreementKind(str, Enum):
    VOTE_ENTROPY = "ve"
    CONSENSUS_ENTROPY = "ce"
    MAX_DISAGREEMENT = "md"


@dataclass(frozen=True)
class DisagreementStrategy:
    kind: DisagreementKind
    log_base: float = DEFAULT_LOG_BASE

    def __post_init__(self) -> None:
        _check_log_base(self.log_base)


@dataclass(frozen=True)
class Committee:
    members: tuple[ModelParams, ...]
    member_rng_seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "member_rng_seeds", tuple(self.member_rng_seeds))
        if len(self.members) < 2:
            raise ValueError("a committee needs at least 2 members")
        if len(self.member_rng_seeds) != len(self.members):
            raise ValueError("one rng seed per member required")
        first = self.members[0]
        for member in self.members[1:]:
            if (
                member.num_classes != first.num_classes
                or member.dimensionality != first.dimensionality
            ):
                raise ValueError("committee members must share class count and dimensionality")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def num_classes(self) -> int:
        return self.members[0].num_classes

    @property
    def dimensionality(self) -> int:
        return self.members[0].dimensionality


def _train_members_batched(
    member_X: np.ndarray,  # (C, n, d)
    member_y: np.ndarray,  # (C, n)
    cfg: TrainConfig,
    num_classes: int,
) -> list[ModelParams]:
    """Gradient-descend all members in one tensor pass.

    Each member's trajectory depends only on its own data, so this matches
    per-member training; converged members are frozen in place while the
    rest keep stepping.
    """
    C, n, d = member_X.shape
    m = num_classes
    one_hot = np.zeros((C, n, m))
    rows = np.arange(n)
    for c in range(C):
        one_hot[c, rows, member_y[c]] = 1.0
    weights = np.zeros((C, m, d))
    biases = np.zeros((C, m))
    active = np.ones(C, dtype=bool)
    member_XT = np.ascontiguousarray(member_X.transpose(0, 2, 1))  # (C, d, n)
    for _ in range(cfg.max_epochs):
        logits = member_X @ weights.transpose(0, 2, 1) + biases[:, None, :]
        logits -= logits.max(axis=2, keepdims=True)
        exp = np.exp(logits)
        probs = exp / exp.sum(axis=2, keepdims=True)
        residual = (probs - one_hot) / n
        grad_w = (member_XT @ residual).transpose(0, 2, 1) + cfg.l2_penalty * weights
        grad_b = residual.sum(axis=1)
        grad_max = np.maximum(
            np.abs(grad_w).max(axis=(1, 2)), np.abs(grad_b).max(axis=1)
        )
        active = active & (grad_max > cfg.convergence_tol)
        if not active.any():
            break
        step = active[:, None, None] * cfg.learning_rate
        weights -= step * grad_w
        biases -= (active[:, None] * cfg.learning_rate) * grad_b
    return [ModelParams(weights[c], biases[c]) for c in range(C)]


def train_committee(
    features: np.ndarray,
    classes: np.ndarray,
    size: int = DEFAULT_COMMITTEE_SIZE,
    cfg: TrainConfig = TrainConfig(),
    base_seed: int = 0,
    num_classes: int | None = None,
) -> Committee:
    """Train ``size`` members on bootstrap resamples seeded base_seed+i.

    A resample that misses any class present in the labeled set is redrawn
    (bounded retries); if no covering resample turns up the member falls
    back to the full labeled set.
    """
    if size < 2:
        raise ValueError("committee size must be >= 2")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(classes, dtype=np.int64)
    present = np.unique(y)
    if present.size < 2:
        raise classifier.TrainingError("training requires examples from at least 2 classes")
    n = X.shape[0]
    m = int(present.max()) + 1 if num_classes is None else num_classes
    if int(present.max()) >= m:
        raise classifier.TrainingError("class index out of range for declared num_classes")
    member_X = np.empty((size, n, X.shape[1]))
    member_y = np.empty((size, n), dtype=np.int64)
    seeds = []
    for i in range(size):
        seed = base_seed + i
        rng = np.random.default_rng(seed)
        take = None
        for _ in range(BOOTSTRAP_RETRIES):
            candidate = rng.integers(0, n, size=n)
            if np.isin(present, y[candidate]).all():
                take = candidate
                break
        if take is None:
            member_X[i], member_y[i] = X, y  # bootstrap cannot cover every class
        else:
            member_X[i], member_y[i] = X[take], y[take]
        seeds.append(seed)
    members = _train_members_batched(member_X, member_y, cfg, m)
    return Committee(members=tuple(members), member_rng_seeds=tuple(seeds))


def member_posteriors(committee: Committee, features: np.ndarray) -> np.ndarray:
    """Stacked member posteriors, shape (size, n, num_classes)."""
    return np.stack(
        [classifier.posterior_values(m, features) for m in committee.members]
    )


def vote_distribution(committee: Committee, features: np.ndarray) -> np.ndarray:
    """Per-instance distribution of the members' hard votes, shape (n, m).

    Each member votes its argmax class (ties to the lowest index); entry
    (i, y) is the fraction of members voting y on instance i.
    """
    votes = member_posteriors(committee, features).argmax(axis=2)  # (size, n)
    n = votes.shape[1]
    counts = np.zeros((n, committee.num_classes))
    for member_votes in votes:
        counts[np.arange(n), member_votes] += 1.0
    return counts / committee.size


def vote_entropy_scores(
    committee: Committee,
    features: np.ndarray,
    log_base: float = DEFAULT_LOG_BASE,
) -> np.ndarray:
    """Entropy of the hard-vote distribution; zero-vote labels contribute nothing."""
    dist = vote_distribution(committee, features)
    if dist.shape[0] == 0:
        raise ValueError("empty example list")
    posterior = PosteriorMatrix(dist, tuple(str(i) for i in range(dist.shape[0])))
    return entropy_scores(posterior, log_base)


def consensus_proba(
    committee: Committee,
    features: np.ndarray,
    instance_ids: Sequence[str] | None = None,
) -> PosteriorMatrix:
    """Member-averaged posteriors; row-stochastic by construction."""
    mean = member_posteriors(committee, features).mean(axis=0)
    if instance_ids is None:
        instance_ids = tuple(str(i) for i in range(mean.shape[0]))
    return PosteriorMatrix(mean, tuple(instance_ids))


def consensus_entropy_scores(
    committee: Committee,
    features: np.ndarray,
    log_base: float = DEFAULT_LOG_BASE,
) -> np.ndarray:
    return entropy_scores(consensus_proba(committee, features), log_base)


def max_disagreement_scores(committee: Committee, features: np.ndarray) -> np.ndarray:
    """Largest member KL divergence from the consensus row, in nats.

    Probabilities are clamped below at 1e-12 inside the logarithm; terms with
    zero member probability contribute nothing.
    """
    stacked = member_posteriors(committee, features)  # (C, n, m)
    consensus = stacked.mean(axis=0)  # (n, m)
    log_ratio = np.log(np.maximum(stacked, KL_CLAMP)) - np.log(np.maximum(consensus, KL_CLAMP))
    kl_terms = np.where(stacked > 0, stacked * log_ratio, 0.0)
    per_member = kl_terms.sum(axis=2)  # (C, n)
    return per_member.max(axis=0)


def disagreement_scores(
    committee: Committee,
    features: np.ndarray,
    strategy: DisagreementStrategy,
) -> np.ndarray:
    if strategy.kind is DisagreementKind.VOTE_ENTROPY:
        return vote_entropy_scores(committee, features, strategy.log_base)
    if strategy.kind is DisagreementKind.CONSENSUS_ENTROPY:
        return consensus_entropy_scores(committee, features, strategy.log_base)
    return max_disagreement_scores(committee, features)


def select_by_committee(
    committee: Committee,
    pool: Sequence[tuple[str, np.ndarray]],
    strategy: DisagreementStrategy,
    k: int = 1,
) -> list[str]:
    """Ids of the k instances the committee disagrees on most; ties by pool order."""
    if not pool:
        raise ValueError("empty pool")
    ids = [item_id for item_id, _ in pool]
    X = np.stack([feats for _, feats in pool])
    scores = disagreement_scores(committee, X, strategy)
    picked = rank_by_score(scores, k, descending=True)
    return [ids[i] for i in picked]


def serialize_committee(committee: Committee) -> str:
    """Concatenated member checkpoints, in member order."""
    return "".join(classifier.serialize_model(m) for m in committee.members)


def parse_committee(text: str, member_rng_seeds: Sequence[int] | None = None) -> Committee:
    members = []
    block: list[str] = []
    for line in text.splitlines():
        if line == classifier.CHECKPOINT_MAGIC and block:
            members.append(classifier.parse_model("\n".join(block)))
            block = []
        block.append(line)
    if block:
        members.append(classifier.parse_model("\n".join(block)))
    if member_rng_seeds is None:
        member_rng_seeds = tuple(range(len(members)))
    return Committee(members=tuple(members), member_rng_seeds=tuple(member_rng_seeds))
