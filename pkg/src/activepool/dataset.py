"""Labeled/unlabeled dataset containers, CSV ingestion and a synthetic generator.

The on-disk format is a flat CSV with header ``id,partition,class,relevant,f0,...,f{d-1}``
(UTF-8, LF line endings). Partitions are ``seed``, ``pool`` and ``test``; only
pool rows may leave the class column empty. Features are precomputed upstream
(e.g. activations exported from a deep feature extractor) and are treated as
opaque real vectors here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

PARTITIONS = ("seed", "pool", "test")
FEATURE_DECIMALS = 9  # significant digits used when serializing features

DISASTER_CLASS_NAMES = (
    "cyclone",
    "drought",
    "earthquake",
    "floods",
    "landslides",
    "snowstorm",
    "thunderstorm",
    "wildfires",
)


class DatasetError(Exception):
    """Base class for dataset construction and ingestion failures."""


class ParseError(DatasetError):
    """A CSV row could not be parsed (bad arity, non-numeric or non-finite feature)."""


class IntegrityError(DatasetError):
    """Structurally valid input that violates a dataset invariant."""


@dataclass
class Example:
    """One instance: an id, a feature vector and optional ground-truth class.

    ``relevant=False`` marks an off-topic pool item; its ``true_class`` then
    records the noisy collection-keyword class so the noisy-pool baseline has
    something to train on.
    """

    id: str
    features: np.ndarray
    true_class: int | None = None
    relevant: bool = True
    source_tag: str | None = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 1:
            raise IntegrityError(f"example {self.id!r}: features must be a 1-d vector")
        if not np.all(np.isfinite(self.features)):
            raise ParseError(f"example {self.id!r}: non-finite feature value")


@dataclass
class Dataset:
    """Seed, pool and test partitions sharing one feature space.

    Invariants checked at construction: ids unique across all partitions,
    dimensionality consistent, classes in range, seed and test fully labeled,
    test items all relevant.
    """

    dimensionality: int
    num_classes: int
    class_names: list[str]
    seed_set: list[Example] = field(default_factory=list)
    pool: list[Example] = field(default_factory=list)
    test_set: list[Example] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.dimensionality < 1:
            raise IntegrityError("dimensionality must be positive")
        if self.num_classes < 1:
            raise IntegrityError("num_classes must be positive")
        if len(self.class_names) != self.num_classes:
            raise IntegrityError(
                f"{len(self.class_names)} class names for {self.num_classes} classes"
            )
        seen: set[str] = set()
        for part, examples in self.partitions().items():
            for ex in examples:
                if ex.id in seen:
                    raise IntegrityError(f"duplicate example id {ex.id!r}")
                seen.add(ex.id)
                if ex.features.shape[0] != self.dimensionality:
                    raise IntegrityError(
                        f"example {ex.id!r}: {ex.features.shape[0]} features, "
                        f"expected {self.dimensionality}"
                    )
                if ex.true_class is not None and not 0 <= ex.true_class < self.num_classes:
                    raise IntegrityError(
                        f"example {ex.id!r}: class {ex.true_class} out of range"
                    )
                if part in ("seed", "test") and ex.true_class is None:
                    raise IntegrityError(f"{part} example {ex.id!r} has no class")
                if part == "test" and not ex.relevant:
                    raise IntegrityError(f"test example {ex.id!r} marked irrelevant")

    def partitions(self) -> dict[str, list[Example]]:
        return {"seed": self.seed_set, "pool": self.pool, "test": self.test_set}

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise IntegrityError(f"class {name!r} not in declared class list") from None


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic dataset: Gaussian class clusters plus uniform noise items."""

    num_classes: int = 8
    dimensionality: int = 16
    seed_per_class: int = 20
    pool_per_class: int = 200
    irrelevant_count: int = 0
    test_per_class: int = 50
    cluster_separation: float = 3.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise IntegrityError("num_classes must be >= 2")
        if self.dimensionality < 1:
            raise IntegrityError("dimensionality must be positive")
        for name in ("seed_per_class", "pool_per_class", "irrelevant_count", "test_per_class"):
            if getattr(self, name) < 0:
                raise IntegrityError(f"{name} must be >= 0")
        if not self.cluster_separation > 0:
            raise IntegrityError("cluster_separation must be positive")


def default_class_names(num_classes: int) -> list[str]:
    """Class names for synthetic data; the 8-class default mirrors common disaster types."""
    if num_classes == len(DISASTER_CLASS_NAMES):
        return list(DISASTER_CLASS_NAMES)
    width = len(str(num_classes - 1))
    return [f"class{i:0{width}d}" for i in range(num_classes)]


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample a dataset of isotropic unit-variance Gaussian clusters.

    Class means are placed so that every pairwise distance is at least
    ``cluster_separation`` (in cluster standard deviations). Irrelevant pool
    items are drawn uniformly over the bounding box of all clusters, carry
    ``relevant=False`` and a random noisy class label. Fully deterministic
    given ``rng_seed``.
    """
    rng = np.random.default_rng(spec.rng_seed)
    m, d = spec.num_classes, spec.dimensionality

    means = rng.standard_normal((m, d))
    min_dist = math.inf
    for i in range(m):
        for j in range(i + 1, m):
            min_dist = min(min_dist, float(np.linalg.norm(means[i] - means[j])))
    if min_dist <= 0:
        means = means + np.arange(m)[:, None]  # degenerate draw; force apart
        min_dist = 1.0
    # Rescale so the closest pair sits exactly at the requested separation;
    # the parameter then controls overlap in both directions.
    means *= spec.cluster_separation / min_dist

    def draw_class_block(partition: str, count_per_class: int) -> list[Example]:
        out = []
        for c in range(m):
            points = means[c] + rng.standard_normal((count_per_class, d))
            for row in points:
                out.append(
                    Example(
                        id=f"{partition}-{len(out):05d}",
                        features=row,
                        true_class=c,
                        relevant=True,
                    )
                )
        return out

    seed_set = draw_class_block("seed", spec.seed_per_class)
    pool = draw_class_block("pool", spec.pool_per_class)
    if spec.irrelevant_count:
        lo = means.min(axis=0) - 3.0
        hi = means.max(axis=0) + 3.0
        points = rng.uniform(lo, hi, size=(spec.irrelevant_count, d))
        noisy = rng.integers(0, m, size=spec.irrelevant_count)
        for row, c in zip(points, noisy):
            pool.append(
                Example(
                    id=f"pool-{len(pool):05d}",
                    features=row,
                    true_class=int(c),
                    relevant=False,
                )
            )
    test_set = draw_class_block("test", spec.test_per_class)

    return Dataset(
        dimensionality=d,
        num_classes=m,
        class_names=default_class_names(m),
        seed_set=seed_set,
        pool=pool,
        test_set=test_set,
    )


def load_csv(
    path: str | Path,
    *,
    class_names: Sequence[str] | None = None,
    partitions: Mapping[str, str] | None = None,
) -> Dataset:
    """Parse a dataset CSV.

    Columns named ``id``, ``partition``, ``class`` and ``relevant`` are
    recognized; every other column is a feature, in header order. When the
    file has no partition column, ``partitions`` must map ids to
    seed/pool/test. When ``class_names`` is given it is the declared class
    list (order preserved); otherwise names are collected from the file and
    sorted.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = list(reader)

    meta_cols = {name: idx for idx, name in enumerate(header) if name in ("id", "partition", "class", "relevant")}
    if "id" not in meta_cols:
        raise ParseError(f"{path}: header has no 'id' column")
    feature_idx = [i for i, name in enumerate(header) if name not in ("id", "partition", "class", "relevant")]
    d = len(feature_idx)
    if d == 0:
        raise ParseError(f"{path}: header declares no feature columns")

    parsed: list[tuple[str, str, str, bool, np.ndarray]] = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        ex_id = row[meta_cols["id"]]
        if "partition" in meta_cols:
            part = row[meta_cols["partition"]]
        elif partitions is not None:
            try:
                part = partitions[ex_id]
            except KeyError:
                raise IntegrityError(f"{path}:{lineno}: no partition assigned for id {ex_id!r}") from None
        else:
            raise IntegrityError(f"{path}: no partition column and no partition listing supplied")
        if part not in PARTITIONS:
            raise IntegrityError(f"{path}:{lineno}: unknown partition {part!r}")
        cls = row[meta_cols["class"]] if "class" in meta_cols else ""
        relevant = True
        if "relevant" in meta_cols:
            raw = row[meta_cols["relevant"]]
            if raw not in ("0", "1"):
                raise ParseError(f"{path}:{lineno}: relevant flag must be 0 or 1, got {raw!r}")
            relevant = raw == "1"
        values = np.empty(d)
        for k, col in enumerate(feature_idx):
            try:
                values[k] = float(row[col])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric feature {row[col]!r}") from None
        if not np.all(np.isfinite(values)):
            raise ParseError(f"{path}:{lineno}: non-finite feature value")
        parsed.append((ex_id, part, cls, relevant, values))

    if class_names is None:
        names = sorted({cls for _, _, cls, _, _ in parsed if cls})
    else:
        names = list(class_names)
    name_to_index = {name: i for i, name in enumerate(names)}

    sets: dict[str, list[Example]] = {p: [] for p in PARTITIONS}
    ids_seen: set[str] = set()
    for ex_id, part, cls, relevant, values in parsed:
        if ex_id in ids_seen:
            raise IntegrityError(f"{path}: duplicate id {ex_id!r}")
        ids_seen.add(ex_id)
        if cls == "":
            if part != "pool":
                raise IntegrityError(f"{path}: {part} row {ex_id!r} has empty class")
            true_class = None
        else:
            if cls not in name_to_index:
                raise IntegrityError(f"{path}: class {cls!r} not in declared class list")
            true_class = name_to_index[cls]
        sets[part].append(Example(id=ex_id, features=values, true_class=true_class, relevant=relevant))

    return Dataset(
        dimensionality=d,
        num_classes=len(names),
        class_names=names,
        seed_set=sets["seed"],
        pool=sets["pool"],
        test_set=sets["test"],
    )


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Emit the exact CSV format accepted by :func:`load_csv`."""
    path = Path(path)
    header = ["id", "partition", "class", "relevant"] + [f"f{i}" for i in range(ds.dimensionality)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for part, examples in ds.partitions().items():
            for ex in examples:
                cls = "" if ex.true_class is None else ds.class_names[ex.true_class]
                row = [ex.id, part, cls, "1" if ex.relevant else "0"]
                row.extend(format(v, f".{FEATURE_DECIMALS}g") for v in ex.features)
                writer.writerow(row)


def examples_equal(a: Example, b: Example) -> bool:
    return (
        a.id == b.id
        and a.true_class == b.true_class
        and a.relevant == b.relevant
        and a.source_tag == b.source_tag
        and a.features.shape == b.features.shape
        and bool(np.all(a.features == b.features))
    )


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    """Exact structural equality (ids, partitions, classes, bitwise features)."""
    if (
        a.dimensionality != b.dimensionality
        or a.num_classes != b.num_classes
        or a.class_names != b.class_names
    ):
        return False
    for part in PARTITIONS:
        xs, ys = a.partitions()[part], b.partitions()[part]
        if len(xs) != len(ys):
            return False
        if not all(examples_equal(x, y) for x, y in zip(xs, ys)):
            return False
    return True


def labeled_pairs(examples: Iterable[Example]) -> tuple[np.ndarray, np.ndarray]:
    """Stack labeled examples into (features, classes) training arrays."""
    feats, classes = [], []
    for ex in examples:
        if ex.true_class is None:
            raise IntegrityError(f"example {ex.id!r} has no class label")
        feats.append(ex.features)
        classes.append(ex.true_class)
    if not feats:
        raise IntegrityError("no labeled examples")
    return np.stack(feats), np.asarray(classes, dtype=np.int64)
