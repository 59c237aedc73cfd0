"""Registry of test statistics over cached, label-free support structures.

Every method is evaluated for a whole batch of labelings at once. The
support structures (distance matrix, kernels, dominance matrix, neighbor
lists, spanning tree, bin groups) depend only on the pooled points, so they
are built once per dataset and shared by all permutations.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from . import _backend, binned, distance, edf, graph
from .core import DistanceMatrix, InputError, MethodError, PooledSample, distance_matrix

UPPER = "upper"
LOWER = "lower"

# column names of the appendix tables
CONTINUOUS_METHODS = ("KS", "K", "CvM", "AD", "NN1", "NN5", "NN0", "AZ", "BF", "BG", "FR", "ES", "EP")
DISCRETE_METHODS = ("KS", "K", "CvM", "AD", "NN", "AZ", "BF", "Chisquare")
EDF_METHODS = ("KS", "K", "CvM", "AD")
DISCRETE_NN_K = 5

_NN_RE = re.compile(r"^NN([1-9][0-9]*)$")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    tail: str
    default_asymptotic: bool = False
    has_asymptotic: bool = False


def canonical(name: str) -> str:
    """Normalize a user-supplied identifier (case-insensitive) to its table name."""
    key = name.strip()
    table = {m.lower(): m for m in (*CONTINUOUS_METHODS, *DISCRETE_METHODS, "Kuiper")}
    low = key.lower()
    if low == "kuiper":
        return "K"
    if low in ("chisq", "chi2", "chisquare"):
        return "Chisquare"
    if low in table:
        return table[low]
    match = _NN_RE.match(key.upper())
    if match:
        return f"NN{int(match.group(1))}"
    raise InputError(f"unknown method {name!r}")


def spec(name: str) -> MethodSpec:
    name = canonical(name)
    if name == "FR":
        return MethodSpec(name, LOWER, default_asymptotic=False, has_asymptotic=True)
    if name in ("NN0", "ES", "EP", "Chisquare"):
        return MethodSpec(name, UPPER, default_asymptotic=True, has_asymptotic=True)
    return MethodSpec(name, UPPER)


def nn_k(name: str) -> int | None:
    if name == "NN":
        return DISCRETE_NN_K
    match = _NN_RE.match(name)
    return int(match.group(1)) if match else None


class Support:
    """Lazily built, read-only structures for one pooled sample.

    ``grid`` supplies fixed bin groups for the ``Chisquare`` method (grid
    input); otherwise ``Chisquare`` bins the data like ``ES``.
    """

    def __init__(self, pooled: PooledSample, grid: binned.GridData | None = None,
                 grid_shape: tuple[int, int] = (5, 5), min_count: int = 5,
                 dm: DistanceMatrix | None = None):
        self.pooled = pooled
        self.grid = grid
        self.grid_shape = grid_shape
        self.min_count = min_count
        self.n = pooled.n
        self.m = pooled.m
        self.N = pooled.N
        self._dm = dm
        self._lock = threading.Lock()
        self._kernels: dict[str, np.ndarray] = {}
        self._nbrs: graph.NeighborLists | None = None
        self._bins: dict[str, tuple] = {}

    @property
    def dm(self) -> DistanceMatrix:
        with self._lock:
            if self._dm is None:
                self._dm = distance_matrix(self.pooled)
            return self._dm

    def kernel(self, name: str) -> np.ndarray:
        if name not in self._kernels:
            K = distance.KERNELS[name](self.dm.values)
            self._kernels[name] = np.ascontiguousarray(K)
        return self._kernels[name]

    @cached_property
    def dominance(self) -> np.ndarray:
        return np.ascontiguousarray(edf.dominance(self.pooled))

    @cached_property
    def dominance_totals(self) -> np.ndarray:
        return self.dominance.sum(axis=1).astype(np.float64)

    def neighbors(self, k: int) -> np.ndarray:
        if self._nbrs is None or self._nbrs.k < k:
            self._nbrs = graph.neighbor_lists(self.dm, k, self.pooled.ranks())
        return np.ascontiguousarray(self._nbrs.indices[:, :k])

    def prepare_neighbors(self, ks) -> None:
        ks = [k for k in ks if k]
        if ks:
            self.neighbors(max(ks))

    @cached_property
    def tree(self) -> graph.SpanningTree:
        return graph.mst(self.dm, self.pooled.ranks())

    def bins(self, name: str):
        """(merged bins, group index of each pooled point) for ES, EP or Chisquare."""
        if name not in self._bins:
            if name == "Chisquare" and self.grid is not None:
                g = self.grid
                cells = g.point_cells if g.point_cells is not None else binned.expanded_cells(g)
            else:
                scheme = "equal_probability" if name == "EP" else "equal_size"
                g = binned.bin2d(self.pooled, *self.grid_shape, scheme=scheme)
                cells = g.point_cells
            merged = binned.merge_bins(g, self.min_count)
            if len(merged.groups) < 2:
                raise MethodError(f"{name}: fewer than two bins after merging")
            self._bins[name] = (merged, merged.cell_group[cells])
        return self._bins[name]

    def check(self, name: str) -> None:
        """Raise MethodError if ``name`` cannot be evaluated on this data."""
        n, m, N = self.n, self.m, self.N
        if n < 1 or m < 1:
            raise MethodError(f"{name}: both samples must be nonempty")
        k = nn_k(name)
        if name in ("AZ", "BG") and (n < 2 or m < 2):
            raise MethodError(f"{name}: needs at least two points in each sample")
        if k is not None and k >= N:
            raise MethodError(f"{name}: needs more than {k} pooled points")
        if name in ("NN0", "FR") and N < 2:
            raise MethodError(f"{name}: needs at least two pooled points")
        if name in ("ES", "EP") or (name == "Chisquare" and self.grid is None):
            if self.pooled.d != 2:
                raise MethodError(f"{name}: binning is only implemented for 2-D data")
            try:
                self.bins(name)
            except InputError as exc:
                raise MethodError(f"{name}: {exc}") from None
        if name == "Chisquare" and self.grid is not None:
            self.bins(name)

    def warm(self, names) -> None:
        """Build everything ``names`` needs, so workers only ever read."""
        for nm in names:
            if nm in EDF_METHODS:
                self.dominance_totals
            elif nm == "AZ":
                self.kernel("log")
            elif nm in ("BF", "BG"):
                self.kernel("sqrt")
            elif nm == "FR":
                self.tree
        self.prepare_neighbors([nn_k(nm) or (1 if nm == "NN0" else 0) for nm in names])


def evaluate(support: Support, names, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Statistics of every method for a ``(b, N)`` uint8 batch of labelings."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    n, m = support.n, support.m
    out: dict[str, np.ndarray] = {}
    names = list(names)

    if any(nm in EDF_METHODS for nm in names):
        counts = _backend.kernels().dominance_counts(support.dominance, labels)
        edf_stats = edf.batch_statistics(counts.astype(np.float64), support.dominance_totals, n, m)
        for nm in names:
            if nm in EDF_METHODS:
                out[nm] = edf_stats[nm]

    sums = {}
    for nm in names:
        if nm in ("AZ", "BF", "BG"):
            kern = "log" if nm == "AZ" else "sqrt"
            if kern not in sums:
                sums[kern] = distance.batch_sums(support.kernel(kern), labels)
            s = sums[kern]
            fn = {"AZ": distance.az_from_sums, "BF": distance.bf_from_sums, "BG": distance.bg_from_sums}[nm]
            out[nm] = fn(s[:, 0], s[:, 1], s[:, 2], n, m)

    for nm in names:
        k = nn_k(nm)
        if k is not None:
            nb = graph.NeighborLists(support.neighbors(k))
            c = graph.batch_same_neighbors(nb, labels)
            out[nm] = graph.knn_from_counts(c[:, 0], c[:, 1], n, m, k).astype(np.float64)
        elif nm == "NN0":
            first = support.neighbors(1)[:, 0]
            out[nm] = (labels.astype(bool) & labels[:, first].astype(bool)).sum(axis=1).astype(np.float64)
        elif nm == "FR":
            out[nm] = graph.batch_cross_edges(support.tree, labels).astype(np.float64)
        elif nm in ("ES", "EP", "Chisquare"):
            merged, groups = support.bins(nm)
            G = len(merged.groups)
            onehot = np.zeros((support.N, G))
            onehot[np.arange(support.N), groups] = 1.0
            ox = labels.astype(np.float64) @ onehot
            out[nm] = binned.chisquare_from_counts(ox, merged.pooled.astype(np.float64), n, m)
    missing = [nm for nm in names if nm not in out]
    if missing:
        raise InputError(f"unknown methods: {missing}")
    return out


def asymptotic_pvalue(support: Support, name: str, statistic: float) -> float:
    n, N = support.n, support.N
    if name == "NN0":
        return graph.nn0_pvalue(int(round(statistic)), n, N)
    if name in ("ES", "EP", "Chisquare"):
        merged, _ = support.bins(name)
        return float(stats.chi2.sf(statistic, len(merged.groups) - 1))
    if name == "FR":
        mean, var = graph.fr_null_moments(support.tree, n, support.m)
        if var <= 0:
            return 1.0
        return float(min(1.0, stats.norm.cdf((statistic + 0.5 - mean) / np.sqrt(var))))
    raise MethodError(f"{name} has no large-sample p-value")
