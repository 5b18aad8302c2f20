"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written with plain Python loops and the
``math`` module only: no numpy, no imports from the package under test.
"""

from __future__ import annotations

import math

Row = list[float]


def softmax_row(logits: Row) -> Row:
    exps = [math.exp(z) for z in logits]
    total = sum(exps)
    return [e / total for e in exps]


def model_posterior_rows(weights: list[Row], biases: Row, features: list[Row]) -> list[Row]:
    rows = []
    for x in features:
        logits = [sum(w * v for w, v in zip(w_row, x)) + b for w_row, b in zip(weights, biases)]
        rows.append(softmax_row(logits))
    return rows


def lc_score(row: Row) -> float:
    return 1.0 - max(row)


def ms_score(row: Row) -> float:
    ordered = sorted(row, reverse=True)
    return ordered[0] - ordered[1]


def entropy(row: Row, base: float) -> float:
    total = 0.0
    for p in row:
        if p > 0.0:
            total -= p * math.log(p)
    return total / math.log(base)


def top_k(scores: list[float], k: int, descending: bool) -> list[int]:
    """Full sort with index tie-break, then take k."""
    if descending:
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    else:
        order = sorted(range(len(scores)), key=lambda i: (scores[i], i))
    return order[:k]


def argmax_index(row: Row) -> int:
    best = 0
    for i, v in enumerate(row):
        if v > row[best]:
            best = i
    return best


def vote_distribution_row(votes: list[int], num_classes: int) -> Row:
    counts = [0] * num_classes
    for v in votes:
        counts[v] += 1
    return [c / len(votes) for c in counts]


def consensus_row(member_rows: list[Row]) -> Row:
    size = len(member_rows)
    return [sum(r[j] for r in member_rows) / size for j in range(len(member_rows[0]))]


def kl_divergence(p: Row, q: Row, clamp: float = 1e-12) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0.0:
            total += pi * (math.log(max(pi, clamp)) - math.log(max(qi, clamp)))
    return total


def committee_scores(
    member_rows_per_instance: list[list[Row]],
    kind: str,
    log_base: float,
) -> list[float]:
    """Disagreement scores for stacked rows: member_rows_per_instance[i][c] is
    member c's posterior row on instance i."""
    scores = []
    for member_rows in member_rows_per_instance:
        num_classes = len(member_rows[0])
        if kind == "ve":
            votes = [argmax_index(r) for r in member_rows]
            scores.append(entropy(vote_distribution_row(votes, num_classes), log_base))
        elif kind == "ce":
            scores.append(entropy(consensus_row(member_rows), log_base))
        elif kind == "md":
            consensus = consensus_row(member_rows)
            scores.append(max(kl_divergence(r, consensus) for r in member_rows))
        else:
            raise ValueError(kind)
    return scores
