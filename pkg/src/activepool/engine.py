"""The pool-based acquisition loop: seed, train, query, label, augment, repeat.

`LoopSession` is the single stepper both entry points drive: `run_loop`
consumes an oracle callable end to end, while the annotation service advances
the same session one human response at a time. Keeping one code path makes an
API transcript replay bit-identical to a simulated run.

Checkpoints are recorded at the *start* of a checkpointed iteration, so the
iteration-1 point reflects the seed-only model.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import classifier, committee as committee_mod, uncertainty
from .classifier import ModelParams, TrainConfig
from .committee import Committee, DisagreementKind, DisagreementStrategy
from .dataset import Dataset, Example, IntegrityError, labeled_pairs
from .uncertainty import UncertaintyKind, UncertaintyStrategy

UNCERTAINTY_STRATEGIES = ("lc", "ms", "es")
COMMITTEE_STRATEGIES = ("ve", "ce", "md")
ALL_STRATEGIES = UNCERTAINTY_STRATEGIES + COMMITTEE_STRATEGIES + ("random",)

DEFAULT_CHECKPOINTS = (1, 250, 500, 750, 1000, 1250, 1500, 2000)
ORACLE_RETRIES = 3
CHECKPOINT_FORMAT = "alc1"


@dataclass(frozen=True)
class LoopConfig:
    strategy: str = "lc"
    batch_size: int = 1
    max_iterations: int = 2000
    checkpoint_iterations: tuple[int, ...] | None = None
    committee_size: int = committee_mod.DEFAULT_COMMITTEE_SIZE
    classifier_cfg: TrainConfig = field(default_factory=TrainConfig)
    retrain_every: int = 1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in ALL_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {ALL_STRATEGIES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.committee_size < 2:
            raise ValueError("committee_size must be >= 2")
        if self.retrain_every < 1:
            raise ValueError("retrain_every must be >= 1")
        if self.checkpoint_iterations is None:
            resolved = tuple(i for i in DEFAULT_CHECKPOINTS if i <= self.max_iterations)
            object.__setattr__(self, "checkpoint_iterations", resolved)
        else:
            points = tuple(self.checkpoint_iterations)
            if any(b <= a for a, b in zip(points, points[1:])):
                raise ValueError("checkpoint_iterations must be strictly increasing")
            if points and (points[0] < 1 or points[-1] > self.max_iterations):
                raise ValueError("checkpoint_iterations must lie in [1, max_iterations]")
            object.__setattr__(self, "checkpoint_iterations", points)

    @property
    def uses_committee(self) -> bool:
        return self.strategy in COMMITTEE_STRATEGIES


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    test_accuracy: float
    labeled_size: int


@dataclass
class LearningCurve:
    points: list[CurvePoint] = field(default_factory=list)

    def append(self, point: CurvePoint) -> None:
        if self.points and point.iteration <= self.points[-1].iteration:
            raise ValueError("curve iterations must be strictly increasing")
        if not 0.0 <= point.test_accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        self.points.append(point)


@dataclass(frozen=True)
class OracleResponse:
    """Oracle outcome for one queried instance: a class label, or a rejection."""

    label: int | None
    latency_hint: float | None = None

    @classmethod
    def labeled(cls, class_index: int) -> "OracleResponse":
        return cls(label=class_index)

    @classmethod
    def reject(cls) -> "OracleResponse":
        return cls(label=None)

    @property
    def rejected(self) -> bool:
        return self.label is None


Oracle = Callable[[Example], OracleResponse]


@dataclass(frozen=True)
class LabeledItem:
    id: str
    features: np.ndarray
    label: int


@dataclass
class LoopState:
    """Immutable-by-convention snapshot of a session."""

    labeled: list[LabeledItem]
    pool: list[Example]
    iteration: int
    model_or_committee: ModelParams | Committee
    curve: LearningCurve
    discarded: list[str]


class OracleFailure(RuntimeError):
    """Oracle kept failing; carries the partial curve and state."""

    def __init__(self, message: str, curve: LearningCurve, state: LoopState):
        super().__init__(message)
        self.curve = curve
        self.state = state


class LoopSession:
    """Stepwise driver for one active learning run.

    One iteration is: record a checkpoint if due, select ``batch_size``
    instances, apply one oracle response per instance (label or reject,
    removing it from the pool), retrain if due, advance the counter.
    """

    def __init__(self, ds: Dataset, cfg: LoopConfig):
        if not ds.seed_set:
            raise IntegrityError("seed set is empty")
        if len({ex.true_class for ex in ds.seed_set}) < 2:
            raise IntegrityError("seed set must cover at least 2 classes")
        if not ds.test_set:
            raise IntegrityError("test set is empty")
        self.ds = ds
        self.cfg = cfg
        self.labeled: list[LabeledItem] = [
            LabeledItem(ex.id, ex.features, ex.true_class) for ex in ds.seed_set
        ]
        self.pool: dict[str, Example] = {ex.id: ex for ex in ds.pool}
        self.discarded: list[str] = []
        # Feature rows for the initial pool, indexed alongside an alive mask,
        # so per-iteration scoring avoids restacking the remaining pool.
        self._pool_ids = np.array([ex.id for ex in ds.pool])
        self._pool_features = (
            np.stack([ex.features for ex in ds.pool]) if ds.pool else np.empty((0, ds.dimensionality))
        )
        self._pool_row = {ex.id: i for i, ex in enumerate(ds.pool)}
        self._alive = np.ones(len(ds.pool), dtype=bool)
        self.iteration = 1
        self.curve = LearningCurve()
        self._initial_pool_size = len(self.pool)
        self._test_X, self._test_y = labeled_pairs(ds.test_set)
        self._rng = np.random.default_rng(cfg.rng_seed)
        self._retrain_count = 0
        self._labeled_dirty = True
        self._cached_accuracy: float | None = None
        self._checkpoints = set(cfg.checkpoint_iterations)
        self._last_checkpoint_iteration = 0
        self.artifact: ModelParams | Committee | None = None
        self._train()

    # -- training and evaluation -------------------------------------------------

    def _training_data(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.stack([item.features for item in self.labeled])
        y = np.asarray([item.label for item in self.labeled], dtype=np.int64)
        return X, y

    def _train(self) -> None:
        X, y = self._training_data()
        if self.cfg.uses_committee:
            base = self.cfg.rng_seed + self._retrain_count * self.cfg.committee_size
            self.artifact = committee_mod.train_committee(
                X,
                y,
                size=self.cfg.committee_size,
                cfg=self.cfg.classifier_cfg,
                base_seed=base,
                num_classes=self.ds.num_classes,
            )
        else:
            self.artifact = classifier.train(
                X, y, self.cfg.classifier_cfg, num_classes=self.ds.num_classes
            )
        self._retrain_count += 1
        self._labeled_dirty = False
        self._cached_accuracy = None

    def evaluate(self) -> float:
        """Test accuracy of the current artifact (consensus argmax for committees)."""
        if self._cached_accuracy is None:
            self._cached_accuracy = evaluate_artifact(self.artifact, self._test_X, self._test_y)
        return self._cached_accuracy

    # -- one iteration, in three phases -------------------------------------------

    @property
    def complete(self) -> bool:
        return self.iteration > self.cfg.max_iterations or not self.pool

    def record_checkpoint_if_due(self) -> None:
        if (
            self.iteration in self._checkpoints
            and self._last_checkpoint_iteration != self.iteration
        ):
            self.curve.append(CurvePoint(self.iteration, self.evaluate(), len(self.labeled)))
            self._last_checkpoint_iteration = self.iteration

    def select(self, k: int | None = None) -> list[tuple[Example, float]]:
        """Pick the next instances to query, with their strategy scores."""
        k = self.cfg.batch_size if k is None else k
        alive_rows = np.flatnonzero(self._alive)
        if alive_rows.size == 0:
            raise IntegrityError("pool is exhausted")
        k = min(k, int(alive_rows.size))
        strategy = self.cfg.strategy
        if strategy == "random":
            picked = self._rng.choice(alive_rows.size, size=k, replace=False)
            chosen = self._pool_ids[alive_rows[picked]]
            return [(self.pool[item_id], 0.0) for item_id in chosen]
        X = self._pool_features[alive_rows]
        if self.cfg.uses_committee:
            scores = committee_mod.disagreement_scores(
                self.artifact, X, DisagreementStrategy(DisagreementKind(strategy))
            )
            descending = True
        else:
            posterior = classifier.predict_proba(self.artifact, X)
            scores = uncertainty.strategy_scores(
                posterior, UncertaintyStrategy(UncertaintyKind(strategy))
            )
            descending = strategy != "ms"
        order = uncertainty.rank_by_score(scores, k, descending)
        return [
            (self.pool[self._pool_ids[alive_rows[i]]], float(scores[i])) for i in order
        ]

    def apply_response(self, instance_id: str, response: OracleResponse) -> None:
        if instance_id not in self.pool:
            raise IntegrityError(f"instance {instance_id!r} is not in the pool")
        if not response.rejected and not 0 <= response.label < self.ds.num_classes:
            raise ValueError(f"label {response.label} out of range")
        example = self.pool.pop(instance_id)
        self._alive[self._pool_row[instance_id]] = False
        if response.rejected:
            self.discarded.append(instance_id)
        else:
            self.labeled.append(LabeledItem(example.id, example.features, response.label))
            self._labeled_dirty = True

    def finish_iteration(self) -> None:
        if self.iteration % self.cfg.retrain_every == 0:
            # Committees redraw their bootstrap every retrain step; a plain
            # model only changes when the labeled set did.
            if self.cfg.uses_committee or self._labeled_dirty:
                self._train()
        self.iteration += 1
        assert (
            len(self.labeled) - len(self.ds.seed_set) + len(self.pool) + len(self.discarded)
            == self._initial_pool_size
        )

    def step(self, oracle: Oracle) -> None:
        """Run one full iteration against an oracle."""
        self.record_checkpoint_if_due()
        for example, _score in self.select():
            response = self._query_oracle(oracle, example)
            self.apply_response(example.id, response)
        self.finish_iteration()

    def _query_oracle(self, oracle: Oracle, example: Example) -> OracleResponse:
        last_error: Exception | None = None
        for _ in range(ORACLE_RETRIES):
            try:
                return oracle(example)
            except Exception as exc:  # retried; re-raised below with partial results
                last_error = exc
        raise OracleFailure(
            f"oracle failed {ORACLE_RETRIES} times on {example.id!r}: {last_error}",
            curve=self.curve,
            state=self.snapshot(),
        ) from last_error

    def snapshot(self) -> LoopState:
        return LoopState(
            labeled=list(self.labeled),
            pool=list(self.pool.values()),
            iteration=self.iteration,
            model_or_committee=self.artifact,
            curve=LearningCurve(list(self.curve.points)),
            discarded=list(self.discarded),
        )


def evaluate_artifact(
    artifact: ModelParams | Committee, test_X: np.ndarray, test_y: np.ndarray
) -> float:
    """Argmax accuracy of a model, or consensus-argmax accuracy of a committee."""
    if isinstance(artifact, Committee):
        consensus = committee_mod.consensus_proba(artifact, test_X)
        return float(np.mean(np.argmax(consensus.values, axis=1) == test_y))
    return classifier.accuracy(artifact, test_X, test_y)


def run_loop(ds: Dataset, cfg: LoopConfig, oracle: Oracle) -> tuple[LearningCurve, LoopState]:
    """Run the acquisition loop to its budget (or pool exhaustion)."""
    if not ds.pool:
        raise IntegrityError("pool is empty at loop start")
    session = LoopSession(ds, cfg)
    while not session.complete:
        session.step(oracle)
    state = session.snapshot()
    return state.curve, state


def simulated_oracle(ds: Dataset) -> Oracle:
    """Ground-truth oracle: labels relevant pool items, rejects irrelevant ones."""
    index = {ex.id: ex for ex in ds.pool}

    def oracle(example: Example) -> OracleResponse:
        known = index.get(example.id)
        if known is None:
            raise IntegrityError(f"unknown pool instance {example.id!r}")
        if not known.relevant:
            return OracleResponse.reject()
        if known.true_class is None:
            raise IntegrityError(f"pool instance {example.id!r} has no ground-truth label")
        return OracleResponse.labeled(known.true_class)

    return oracle


def baseline_supervised(ds: Dataset, cfg: TrainConfig = TrainConfig()) -> float:
    """Upper reference: train on seed plus every relevant pool item's true class."""
    examples = list(ds.seed_set)
    for ex in ds.pool:
        if ex.relevant:
            if ex.true_class is None:
                raise IntegrityError(f"relevant pool item {ex.id!r} has no class")
            examples.append(ex)
    X, y = labeled_pairs(examples)
    model = classifier.train(X, y, cfg, num_classes=ds.num_classes)
    test_X, test_y = labeled_pairs(ds.test_set)
    return classifier.accuracy(model, test_X, test_y)


def baseline_noisy_pool(ds: Dataset, cfg: TrainConfig = TrainConfig()) -> float:
    """Lower reference: train on seed plus the whole pool, noisy labels included."""
    examples = list(ds.seed_set)
    for ex in ds.pool:
        if ex.true_class is None:
            raise IntegrityError(f"pool item {ex.id!r} has no class for the noisy baseline")
        examples.append(ex)
    X, y = labeled_pairs(examples)
    model = classifier.train(X, y, cfg, num_classes=ds.num_classes)
    test_X, test_y = labeled_pairs(ds.test_set)
    return classifier.accuracy(model, test_X, test_y)


def export_curve(curve: LearningCurve, path: str | Path) -> None:
    """CSV with header ``iteration,labeled_size,accuracy``, full precision."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "labeled_size", "accuracy"])
        for point in curve.points:
            writer.writerow(
                [point.iteration, point.labeled_size, format(point.test_accuracy, ".17g")]
            )


def read_curve(path: str | Path) -> LearningCurve:
    curve = LearningCurve()
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["iteration", "labeled_size", "accuracy"]:
            raise ValueError(f"unexpected curve header {header}")
        for row in reader:
            curve.append(CurvePoint(int(row[0]), float(row[2]), int(row[1])))
    return curve


def state_digest(state: LoopState) -> str:
    """Stable hash of the loop-visible state, for replay-equality checks."""
    parts = [f"iteration={state.iteration}"]
    parts.append("labeled=" + ",".join(f"{i.id}:{i.label}" for i in state.labeled))
    parts.append("pool=" + ",".join(ex.id for ex in state.pool))
    parts.append("discarded=" + ",".join(state.discarded))
    parts.append(
        "curve="
        + ",".join(
            f"{p.iteration}:{p.labeled_size}:{p.test_accuracy!r}" for p in state.curve.points
        )
    )
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


# -- resumable checkpoints ---------------------------------------------------------


def save_checkpoint(session: LoopSession, path: str | Path) -> None:
    """Bundle loop ids, curve, rng state and the trained artifact into one JSON file."""
    seed_size = len(session.ds.seed_set)
    acquired = [[item.id, item.label] for item in session.labeled[seed_size:]]
    if isinstance(session.artifact, Committee):
        artifact_text = committee_mod.serialize_committee(session.artifact)
        committee_seeds = list(session.artifact.member_rng_seeds)
    else:
        artifact_text = classifier.serialize_model(session.artifact)
        committee_seeds = None
    payload = {
        "format": CHECKPOINT_FORMAT,
        "strategy": session.cfg.strategy,
        "iteration": session.iteration,
        "acquired": acquired,
        "discarded": list(session.discarded),
        "curve": [[p.iteration, p.labeled_size, p.test_accuracy] for p in session.curve.points],
        "last_checkpoint_iteration": session._last_checkpoint_iteration,
        "retrain_count": session._retrain_count,
        "rng_state": session._rng.bit_generator.state,
        "artifact": artifact_text,
        "committee_seeds": committee_seeds,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_checkpoint(ds: Dataset, cfg: LoopConfig, path: str | Path) -> LoopSession:
    """Rebuild a session from a checkpoint against the same dataset and config."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a loop checkpoint file")
    if payload["strategy"] != cfg.strategy:
        raise ValueError(
            f"checkpoint was recorded with strategy {payload['strategy']!r}, "
            f"config says {cfg.strategy!r}"
        )
    session = LoopSession(ds, cfg)
    pool_index = {ex.id: ex for ex in ds.pool}
    for item_id, label in payload["acquired"]:
        example = pool_index.get(item_id)
        if example is None:
            raise IntegrityError(f"checkpoint references unknown pool id {item_id!r}")
        session.pool.pop(item_id)
        session._alive[session._pool_row[item_id]] = False
        session.labeled.append(LabeledItem(example.id, example.features, int(label)))
    for item_id in payload["discarded"]:
        if item_id not in pool_index:
            raise IntegrityError(f"checkpoint references unknown pool id {item_id!r}")
        session.pool.pop(item_id)
        session._alive[session._pool_row[item_id]] = False
        session.discarded.append(item_id)
    session.iteration = int(payload["iteration"])
    curve = LearningCurve()
    for it, size, acc in payload["curve"]:
        curve.append(CurvePoint(int(it), float(acc), int(size)))
    session.curve = curve
    session._last_checkpoint_iteration = int(payload["last_checkpoint_iteration"])
    session._retrain_count = int(payload["retrain_count"])
    session._rng.bit_generator.state = payload["rng_state"]
    if payload["committee_seeds"] is not None:
        session.artifact = committee_mod.parse_committee(
            payload["artifact"], member_rng_seeds=payload["committee_seeds"]
        )
    else:
        session.artifact = classifier.parse_model(payload["artifact"])
    session._labeled_dirty = False
    session._cached_accuracy = None
    return session
