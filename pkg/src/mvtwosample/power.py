"""Rejection-rate simulations and the case-by-method summary tables.

Power tables are case rows by method columns. ``PowerRow`` holds simulated
frequencies in [0, 1]; ``PowerTable`` holds percentages, the layout of the
appendix tables, and is what the summaries work on. A missing cell (method
not applicable to the case) is NaN.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import binned
from . import methods as M
from .casestudies import CaseStudy, draw_pair
from .core import InputError, PooledSample, pool
from .permutation import PermutationPlan, permutation_test

CLOSE_FRACTION = 0.9


@dataclass(frozen=True)
class StudyConfig:
    case: CaseStudy
    n: int = 100
    m: int = 100
    nsim: int = 200
    plan: PermutationPlan = field(default_factory=lambda: PermutationPlan(B=400, methods=M.CONTINUOUS_METHODS))
    alpha: float = 0.05
    seed: int = 0
    discrete: bool = False
    grid_shape: tuple[int, int] = (5, 5)
    scheme: str = "equal_size"
    workers: int = 1  # concurrent replications

    def __post_init__(self):
        if self.nsim < 1:
            raise InputError("nsim must be at least 1")
        if self.n < 1 or self.m < 1:
            raise InputError("sample sizes must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if self.alpha * (self.plan.B + 1) < 1.0:
            raise InputError(f"B={self.plan.B} is too small for alpha={self.alpha}: no p-value can reach it")


@dataclass(frozen=True)
class PowerRow:
    case: str
    theta: float
    nsim: int
    power: dict[str, float]  # NaN = method not applicable
    stderr: dict[str, float]

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(self.power)

    def as_dict(self) -> dict:
        clean = lambda d: {k: (None if math.isnan(v) else v) for k, v in d.items()}
        return {"case": self.case, "theta": self.theta, "nsim": self.nsim,
                "power": clean(self.power), "stderr": clean(self.stderr)}


def standard_error(p: float, nsim: int) -> float:
    return math.sqrt(p * (1.0 - p) / nsim)


def _replication_seed(seed: int, r: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(r, 1))
    return int(ss.generate_state(1, np.uint64)[0])


def _support(cfg: StudyConfig, x, y, r: int) -> M.Support:
    p = pool(x, y)
    if not cfg.discrete:
        return M.Support(p, grid_shape=cfg.grid_shape)
    g = binned.bin2d(p, *cfg.grid_shape, scheme=cfg.scheme)
    expanded = binned.discrete_pooled(g, tie_seed=_replication_seed(cfg.seed, r))
    return M.Support(expanded, grid=g, grid_shape=cfg.grid_shape)


def _one(cfg: StudyConfig, r: int, null: bool) -> dict[str, float | None]:
    x, y = draw_pair(cfg.case, cfg.n, cfg.m, cfg.seed, r, null=null)
    support = _support(cfg, x, y, r)
    plan = replace(cfg.plan, seed=_replication_seed(cfg.seed, r))
    out = permutation_test(support.pooled, plan, support=support)
    return {nm: (None if o.error else o.p_value) for nm, o in out.methods.items()}


def replication_pvalues(cfg: StudyConfig, theta: float | None = None, null: bool = False) -> list[dict]:
    """p-value of every method in each replication (None where inapplicable)."""
    if theta is not None:
        cfg = replace(cfg, case=cfg.case.with_theta(theta))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            return list(ex.map(lambda r: _one(cfg, r, null), range(cfg.nsim)))
    return [_one(cfg, r, null) for r in range(cfg.nsim)]


def _row(cfg: StudyConfig, theta: float, pvals: list[dict]) -> PowerRow:
    power, se = {}, {}
    for nm in cfg.plan.methods:
        ps = [p[nm] for p in pvals if p[nm] is not None]
        if not ps:
            power[nm] = se[nm] = float("nan")
            continue
        f = float(np.mean(np.asarray(ps) <= cfg.alpha))
        power[nm] = f
        se[nm] = standard_error(f, len(ps))
    return PowerRow(cfg.case.name, float(theta), cfg.nsim, power, se)


def estimate_power(cfg: StudyConfig, theta: float | None = None) -> PowerRow:
    """Rejection frequency of each method with y drawn at ``theta``."""
    th = cfg.case.theta if theta is None else float(theta)
    return _row(cfg, th, replication_pvalues(cfg, th))


def null_check(cfg: StudyConfig) -> PowerRow:
    """Rejection frequencies with y drawn from the reference law (type-I error)."""
    th = cfg.case.null_theta if cfg.case.null_theta is not None else float("nan")
    return _row(cfg, th, replication_pvalues(cfg, null=True))


def binomial_band(alpha: float, nsim: int, level: float = 0.99) -> tuple[float, float]:
    """Central acceptance region of the rejection frequency under exact level ``alpha``."""
    from scipy.stats import binom

    lo = binom.ppf((1 - level) / 2, nsim, alpha)
    hi = binom.isf((1 - level) / 2, nsim, alpha)
    return lo / nsim, hi / nsim


# --- tables ---------------------------------------------------------------


@dataclass(frozen=True)
class PowerTable:
    cases: tuple[str, ...]
    methods: tuple[str, ...]
    values: np.ndarray  # (cases, methods) percentages, NaN = missing

    @classmethod
    def from_rows(cls, rows) -> "PowerTable":
        rows = list(rows)
        if not rows:
            raise InputError("no power rows")
        methods = rows[0].methods
        for r in rows:
            if r.methods != methods:
                raise InputError(f"row {r.case!r} has methods {r.methods}, expected {methods}")
        vals = np.array([[100.0 * r.power[nm] for nm in methods] for r in rows])
        return cls(tuple(r.case for r in rows), methods, vals)


def read_table(path) -> PowerTable:
    """Read a case-by-method TSV; first column holds case names, blanks are missing."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot open ({exc.strerror})") from None
    return parse_table(text, str(path))


def parse_table(text: str, source: str = "<table>") -> PowerTable:
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = None
    cases, values = [], []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if len(header) < 2:
                raise InputError(f"{source}:{lineno}: header needs a case column and at least one method")
            continue
        if len(row) > len(header):
            raise InputError(f"{source}:{lineno}: {len(row)} cells, header has {len(header)}")
        row = row + [""] * (len(header) - len(row))
        vals = []
        for cell in row[1:]:
            cell = cell.strip()
            if not cell:
                vals.append(float("nan"))
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise InputError(f"{source}:{lineno}: {cell!r} is not a number") from None
        cases.append(row[0].strip())
        values.append(vals)
    if header is None or not cases:
        raise InputError(f"{source}: no table rows")
    return PowerTable(tuple(cases), tuple(header[1:]), np.array(values, dtype=float))


@dataclass(frozen=True)
class Summary:
    mean_power: dict[str, float]  # sorted high to low
    close_to_best: dict[str, float]  # percent of cases, sorted high to low
    selection: tuple[str, ...]
    uncovered: tuple[str, ...] = ()


def close_matrix(table: PowerTable, fraction: float = CLOSE_FRACTION) -> np.ndarray:
    """``close[i, j]``: method j reaches ``fraction`` of the best power on case i."""
    v = table.values
    best = np.nanmax(np.where(np.isnan(v), -np.inf, v), axis=1)
    with np.errstate(invalid="ignore"):
        return ~np.isnan(v) & (v >= fraction * best[:, None])


def greedy_selection(close: np.ndarray, methods, tiebreak: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Repeatedly add the method that covers the most uncovered cases.

    Ties go to the larger ``tiebreak`` value (mean power), then to column order.
    """
    uncovered = np.ones(close.shape[0], dtype=bool)
    chosen: list[str] = []
    while uncovered.any():
        gain = close[uncovered].sum(axis=0)
        if gain.max() == 0:
            break
        cand = np.flatnonzero(gain == gain.max())
        j = cand[np.argmax(tiebreak[cand])]
        chosen.append(methods[j])
        uncovered &= ~close[:, j]
    return chosen, uncovered


def summarize(rows, fraction: float = CLOSE_FRACTION) -> Summary:
    """Mean power, close-to-best percentages and a covering selection of methods.

    ``rows`` is a ``PowerTable`` or an iterable of ``PowerRow``. Mean power
    averages the available cells; a missing cell never counts as close.
    """
    table = rows if isinstance(rows, PowerTable) else PowerTable.from_rows(rows)
    v = table.values
    if v.size == 0:
        raise InputError("empty power table")
    with np.errstate(invalid="ignore"):
        avail = ~np.isnan(v)
        means = np.where(avail.any(axis=0), np.nansum(v, axis=0) / np.maximum(avail.sum(axis=0), 1), np.nan)
    close = close_matrix(table, fraction)
    pct = 100.0 * close.sum(axis=0) / v.shape[0]
    tiebreak = np.nan_to_num(means, nan=-np.inf)
    chosen, uncovered = greedy_selection(close, table.methods, tiebreak)

    order = sorted(range(len(table.methods)), key=lambda j: (-tiebreak[j], j))
    mean_power = {table.methods[j]: float(means[j]) for j in order}
    order = sorted(range(len(table.methods)), key=lambda j: (-pct[j], -tiebreak[j], j))
    close_pct = {table.methods[j]: float(pct[j]) for j in order}
    return Summary(mean_power, close_pct, tuple(chosen), tuple(np.asarray(table.cases)[uncovered]))


# --- emitters -------------------------------------------------------------


def _fmt(v: float, digits: int) -> str:
    return "" if math.isnan(v) else f"{v:.{digits}f}"


def rows_to_table(rows) -> PowerTable:
    return PowerTable.from_rows(rows)


def format_table_tsv(table: PowerTable, digits: int = 2) -> str:
    lines = ["\t".join(("case",) + table.methods)]
    for case, vals in zip(table.cases, table.values):
        lines.append("\t".join([case] + [_fmt(v, digits) for v in vals]))
    return "\n".join(lines) + "\n"


def format_table_text(table: PowerTable, digits: int = 2) -> str:
    cells = [["case", *table.methods]]
    for case, vals in zip(table.cases, table.values):
        cells.append([case] + [_fmt(v, digits) or "-" for v in vals])
    widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
    out = []
    for r in cells:
        first = r[0].ljust(widths[0])
        out.append("  ".join([first] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]))
    return "\n".join(out) + "\n"


def format_summary_text(s: Summary) -> str:
    # one decimal, the layout of the published summary tables
    lines = ["# mean power"]
    lines += [f"{k} {_fmt(v, 1) or '-'}" for k, v in s.mean_power.items()]
    lines.append("# close to best (%)")
    lines += [f"{k} {v:.0f}" for k, v in s.close_to_best.items()]
    lines.append("# selection")
    lines.append(" ".join(s.selection))
    if s.uncovered:
        lines.append("# uncovered cases")
        lines.append(" ".join(s.uncovered))
    return "\n".join(lines) + "\n"


def format_summary_tsv(s: Summary) -> str:
    lines = ["table\tmethod\tvalue"]
    lines += [f"mean_power\t{k}\t{_fmt(v, 2)}" for k, v in s.mean_power.items()]
    lines += [f"close_to_best\t{k}\t{v:.0f}" for k, v in s.close_to_best.items()]
    lines += [f"selection\t{k}\t{i + 1}" for i, k in enumerate(s.selection)]
    return "\n".join(lines) + "\n"


def summary_dict(s: Summary) -> dict:
    return {
        "mean_power": {k: (None if math.isnan(v) else round(v, 10)) for k, v in s.mean_power.items()},
        "close_to_best": s.close_to_best,
        "selection": list(s.selection),
        "uncovered": list(s.uncovered),
    }


def format_rows_json(rows) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=2)
