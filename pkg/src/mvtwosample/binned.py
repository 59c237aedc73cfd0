"""2-D binning, the chi-square two-sample test, and grid (discrete) data.

Rows of a grid follow the first coordinate and columns the second. Cell
indices are flattened row-major (``row * cols + col``) wherever a single
integer is needed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .core import InputError, MethodError, PMethod, PooledSample, SeededRng, TestResult

SCHEMES = ("equal_size", "equal_probability")
SCHEME_ALIASES = {"es": "equal_size", "ep": "equal_probability"}


@dataclass(frozen=True)
class GridData:
    counts_x: np.ndarray  # (rows, cols) int
    counts_y: np.ndarray
    cell_centers: np.ndarray  # (rows, cols, 2)
    bin_edges: tuple[np.ndarray, np.ndarray]
    point_cells: np.ndarray | None = None  # flat cell of each pooled point, when binned from points

    @property
    def rows(self) -> int:
        return self.counts_x.shape[0]

    @property
    def cols(self) -> int:
        return self.counts_x.shape[1]

    @property
    def n(self) -> int:
        return int(self.counts_x.sum())

    @property
    def m(self) -> int:
        return int(self.counts_y.sum())

    @property
    def pooled_counts(self) -> np.ndarray:
        return self.counts_x + self.counts_y


def _edges(values: np.ndarray, nbins: int, scheme: str) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        raise InputError("cannot bin an axis with zero range")
    if scheme == "equal_size":
        return np.linspace(lo, hi, nbins + 1)
    q = np.quantile(values, np.arange(1, nbins) / nbins, method="inverted_cdf")
    edges = np.concatenate([[lo], q, [hi]])
    # heavy ties can collapse quantiles; keep the distinct edges only
    return np.unique(edges)


def _assign(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # a value on an interior edge belongs to the lower cell; the minimum joins cell 0
    idx = np.searchsorted(edges, values, side="left") - 1
    return np.clip(idx, 0, edges.size - 2)


def bin2d(p: PooledSample, rows: int = 5, cols: int = 5, scheme: str = "equal_size") -> GridData:
    """Tile the pooled data range into ``rows x cols`` cells.

    Edges come from the pooled sample only, so the grid does not depend on
    the labels. Equal-probability edges sit at pooled per-axis quantiles;
    quantiles that coincide because of ties are merged, which can leave
    fewer cells than requested.
    """
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    if scheme not in SCHEMES:
        raise InputError(f"unknown binning scheme {scheme!r}")
    if p.d != 2:
        raise MethodError(f"binning is only supported for 2-D data, got d={p.d}")
    if rows < 2 or cols < 2:
        raise InputError("a grid needs at least 2 bins per axis")
    ex = _edges(p.points[:, 0], rows, scheme)
    ey = _edges(p.points[:, 1], cols, scheme)
    ri = _assign(p.points[:, 0], ex)
    ci = _assign(p.points[:, 1], ey)
    r, c = ex.size - 1, ey.size - 1
    flat = ri * c + ci
    cx = np.bincount(flat[p.labels], minlength=r * c).reshape(r, c)
    cy = np.bincount(flat[~p.labels], minlength=r * c).reshape(r, c)
    mx = (ex[:-1] + ex[1:]) / 2
    my = (ey[:-1] + ey[1:]) / 2
    centers = np.stack(np.meshgrid(mx, my, indexing="ij"), axis=-1)
    return GridData(cx, cy, centers, (ex, ey), flat)


@dataclass(frozen=True)
class MergedBins:
    groups: tuple[tuple[int, ...], ...]  # flat cell indices per group
    counts_x: np.ndarray
    counts_y: np.ndarray
    cell_group: np.ndarray  # flat cell -> group index, -1 for empty cells

    @property
    def pooled(self) -> np.ndarray:
        return self.counts_x + self.counts_y


def merge_bins(g: GridData, min_count: int = 5) -> MergedBins:
    """Row-major greedy merging of occupied cells.

    Consecutive occupied cells are accumulated into the current group until
    its pooled count reaches ``min_count``; a deficient group left at the
    end is folded into the one before it.
    """
    pooled = g.pooled_counts.ravel()
    if pooled.sum() < min_count:
        raise InputError(f"only {pooled.sum()} observations, fewer than min_count={min_count}")
    groups: list[list[int]] = []
    current: list[int] = []
    total = 0
    for cell in np.flatnonzero(pooled):
        current.append(int(cell))
        total += int(pooled[cell])
        if total >= min_count:
            groups.append(current)
            current, total = [], 0
    if current:
        groups[-1].extend(current)
    cell_group = np.full(pooled.size, -1, dtype=np.int64)
    for k, cells in enumerate(groups):
        cell_group[cells] = k
    cx = g.counts_x.ravel()
    cy = g.counts_y.ravel()
    return MergedBins(
        groups=tuple(tuple(cells) for cells in groups),
        counts_x=np.array([cx[cells].sum() for cells in groups], dtype=np.int64),
        counts_y=np.array([cy[cells].sum() for cells in groups], dtype=np.int64),
        cell_group=cell_group,
    )


def chisquare_from_counts(ox, total, n: int, m: int):
    """Two-sample chi-square statistic; ``ox`` may be a batch ``(b, G)``."""
    N = n + m
    ex = n * total / N
    ey = m * total / N
    oy = total - ox
    return np.sum((ox - ex) ** 2 / ex + (oy - ey) ** 2 / ey, axis=-1)


def chisquare_test(g: GridData, merged: MergedBins, method: str = "Chisquare") -> TestResult:
    G = len(merged.groups)
    if G < 2:
        raise InputError("the chi-square test needs at least two merged groups")
    stat = float(chisquare_from_counts(merged.counts_x, merged.pooled, g.n, g.m))
    p = float(stats.chi2.sf(stat, G - 1))
    return TestResult(method, stat, p, PMethod.ASYMPTOTIC)


def discrete_pooled(g: GridData, tie_seed: int = 0) -> PooledSample:
    """Expand a grid into one observation per count, placed at the cell center.

    All x copies come first (cells in row-major order), then all y copies.
    Copies in the same cell are exact ties, so the returned sample carries a
    tie-break rank: each cell occupies a contiguous block of ranks and the x
    and y copies are interleaved inside it by a seeded shuffle that depends
    only on the cell and its pooled count. Without this the storage order
    would leak the labels into every nearest-neighbor tie.
    """
    cx = g.counts_x.ravel()
    cy = g.counts_y.ravel()
    centers = g.cell_centers.reshape(-1, 2)
    cells = np.arange(cx.size)
    x_cells = np.repeat(cells, cx)
    y_cells = np.repeat(cells, cy)
    points = np.vstack([centers[x_cells], centers[y_cells]])
    labels = np.concatenate([np.ones(x_cells.size, bool), np.zeros(y_cells.size, bool)])
    rank = np.empty(labels.size, dtype=np.int64)
    base = np.concatenate([[0], np.cumsum(cx + cy)])
    x_pos = np.concatenate([[0], np.cumsum(cx)])
    y_pos = np.concatenate([[0], np.cumsum(cy)]) + x_cells.size
    for c in np.flatnonzero(cx + cy):
        t = int(cx[c] + cy[c])
        slots = SeededRng(tie_seed, int(c)).generator().permutation(t) + base[c]
        rank[x_pos[c] : x_pos[c + 1]] = slots[: cx[c]]
        rank[y_pos[c] : y_pos[c + 1]] = slots[cx[c] :]
    return PooledSample(points, labels, rank)


def read_grid_csv(path) -> GridData:
    """Read ``row_index,col_index,count_x,count_y`` rows (0-based, absent = 0)."""
    path = Path(path)
    entries = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                vals = [int(c) for c in row]
            except ValueError:
                if lineno == 1 and not entries:
                    continue
                raise InputError(f"{path}:{lineno}: expected integers") from None
            if min(vals) < 0:
                raise InputError(f"{path}:{lineno}: negative index or count")
            entries.append((lineno, vals))
    if not entries:
        raise InputError(f"{path}: no cells")
    rows = max(v[0] for _, v in entries) + 1
    cols = max(v[1] for _, v in entries) + 1
    cx = np.zeros((rows, cols), dtype=np.int64)
    cy = np.zeros((rows, cols), dtype=np.int64)
    seen = set()
    for lineno, (r, c, a, b) in entries:
        if (r, c) in seen:
            raise InputError(f"{path}:{lineno}: cell ({r}, {c}) listed twice")
        seen.add((r, c))
        cx[r, c] = a
        cy[r, c] = b
    if cx.sum() == 0 or cy.sum() == 0:
        raise InputError(f"{path}: both samples need at least one count")
    return grid_from_counts(cx, cy)


def grid_from_counts(counts_x, counts_y) -> GridData:
    """Grid with unit cells centered on integer (row, col) coordinates."""
    cx = np.asarray(counts_x, dtype=np.int64)
    cy = np.asarray(counts_y, dtype=np.int64)
    if cx.shape != cy.shape or cx.ndim != 2:
        raise InputError("count arrays must be 2-D with the same shape")
    r, c = cx.shape
    ex = np.arange(r + 1) - 0.5
    ey = np.arange(c + 1) - 0.5
    centers = np.stack(np.meshgrid(np.arange(r, dtype=float), np.arange(c, dtype=float), indexing="ij"), axis=-1)
    return GridData(cx, cy, centers, (ex, ey))


def write_grid_csv(g: GridData, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["row_index", "col_index", "count_x", "count_y"])
    for r in range(g.rows):
        for c in range(g.cols):
            if g.counts_x[r, c] or g.counts_y[r, c]:
                writer.writerow([r, c, int(g.counts_x[r, c]), int(g.counts_y[r, c])])


def expanded_cells(g: GridData) -> np.ndarray:
    """Flat cell index of each observation of ``discrete_pooled(g)``, in order."""
    cells = np.arange(g.rows * g.cols)
    return np.concatenate([np.repeat(cells, g.counts_x.ravel()), np.repeat(cells, g.counts_y.ravel())])
