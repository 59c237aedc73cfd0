"""Data model shared by every test: samples, pooled data, distances, results."""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# dense N x N float64 matrices above this many points are refused
MAX_DENSE_POINTS = 50_000

# instrumentation: how many times each expensive builder ran
counters: Counter = Counter()


class InputError(ValueError):
    """Malformed or inconsistent user data."""


class MethodError(RuntimeError):
    """A statistic cannot be evaluated on the given input."""


class PMethod(str, enum.Enum):
    PERMUTATION = "permutation"
    ASYMPTOTIC = "asymptotic"


def _as_points(points) -> np.ndarray:
    try:
        arr = np.asarray(points, dtype=float)
    except (TypeError, ValueError):
        raise InputError("points must form a rectangular array of numbers") from None
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"expected a 2-D array of points, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise InputError("sample is empty")
    if arr.shape[1] < 1:
        raise InputError("points must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise InputError("sample contains NaN or infinite coordinates")
    return arr


@dataclass(frozen=True)
class Sample:
    """An ordered collection of d-dimensional observations."""

    points: np.ndarray

    def __post_init__(self):
        arr = _as_points(self.points)
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class PooledSample:
    """Concatenated two-sample data; ``labels[i]`` is True for points of x.

    ``tie_rank`` optionally replaces the point index wherever ties between
    equal distances are broken. Expanded grid data uses it so that
    tie-breaking does not depend on the x-first storage order.
    """

    points: np.ndarray
    labels: np.ndarray
    tie_rank: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        pts = _as_points(self.points)
        lab = np.asarray(self.labels, dtype=bool)
        if lab.shape != (pts.shape[0],):
            raise InputError("labels must have one entry per point")
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        if self.tie_rank is not None:
            rank = np.asarray(self.tie_rank, dtype=np.int64)
            if sorted(rank.tolist()) != list(range(pts.shape[0])):
                raise InputError("tie_rank must be a permutation of 0..N-1")
            rank.setflags(write=False)
            object.__setattr__(self, "tie_rank", rank)

    @property
    def n(self) -> int:
        return int(self.labels.sum())

    @property
    def m(self) -> int:
        return int(self.labels.size - self.labels.sum())

    @property
    def N(self) -> int:
        return self.labels.size

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def ranks(self) -> np.ndarray:
        """Tie-break key per point (the index unless ``tie_rank`` is set)."""
        if self.tie_rank is None:
            return np.arange(self.N)
        return self.tie_rank

    def split(self) -> tuple[Sample, Sample]:
        return Sample(self.points[self.labels]), Sample(self.points[~self.labels])

    def relabel(self, labels) -> "PooledSample":
        return PooledSample(self.points, labels, self.tie_rank)


def pool(x: Sample, y: Sample) -> PooledSample:
    """Stack ``x`` above ``y`` and label the first ``len(x)`` rows True."""
    if not isinstance(x, Sample):
        x = Sample(x)
    if not isinstance(y, Sample):
        y = Sample(y)
    if x.d != y.d:
        raise InputError(f"dimension mismatch: x has d={x.d}, y has d={y.d}")
    labels = np.zeros(len(x) + len(y), dtype=bool)
    labels[: len(x)] = True
    return PooledSample(np.vstack([x.points, y.points]), labels)


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.shape[0]


def distance_matrix(p: PooledSample) -> DistanceMatrix:
    """Dense Euclidean distances between all pooled points."""
    from scipy.spatial.distance import cdist

    if p.N > MAX_DENSE_POINTS:
        raise InputError(
            f"{p.N} points exceed the dense distance-matrix limit of {MAX_DENSE_POINTS}"
        )
    counters["distance_matrix"] += 1
    d = cdist(p.points, p.points)
    # cdist is not bitwise symmetric for every BLAS path
    d = np.triu(d, 1)
    d = d + d.T
    return DistanceMatrix(d)


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    p_method: PMethod

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not np.isfinite(self.statistic):
            raise MethodError(f"{self.method}: statistic is not finite")
        if not 0.0 <= self.p_value <= 1.0:
            raise MethodError(f"{self.method}: p-value {self.p_value} outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "p_method": PMethod(self.p_method).value,
        }


@dataclass(frozen=True)
class SeededRng:
    """A reproducible random stream identified by ``(seed, stream_index)``.

    Streams with different indices are statistically independent, and the
    stream never depends on which worker consumes it.
    """

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "SeededRng":
        # fold the parent stream into the seed so nested streams stay distinct
        mixed = np.random.SeedSequence(
            int(self.seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(self.stream_index),)
        ).generate_state(2, dtype=np.uint32)
        return SeededRng(int(mixed[0]) << 32 | int(mixed[1]), index)


def read_points_csv(path) -> Sample:
    """Read one observation per row; a non-numeric first row is a header."""
    path = Path(path)
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        width = None
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise InputError(f"{path}:{lineno}: non-numeric value") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise InputError(f"{path}:{lineno}: expected {width} columns, got {len(values)}")
            if not all(np.isfinite(values)):
                raise InputError(f"{path}:{lineno}: non-finite value")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no observations")
    return Sample(np.array(rows))


def write_points_csv(sample: Sample, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"x{k + 1}" for k in range(sample.d)])
    for row in sample.points:
        writer.writerow([repr(float(v)) for v in row])
