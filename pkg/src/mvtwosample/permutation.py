"""Label-permutation p-values and the min-p combination of several tests.

Permutation ``b`` (1-based) draws its relabeling from the random stream
``(seed, b)``, and permutations are evaluated in fixed-size chunks, so the
output does not depend on how many workers share the work.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import methods as M
from .core import InputError, MethodError, PMethod, PooledSample, SeededRng, TestResult

EXHAUSTIVE_LIMIT = 100_000
CHUNK = 64
# relative tolerance under which two statistic values count as tied
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class PermutationPlan:
    """What to run and how.

    ``exhaustive`` is ``None`` for automatic selection (enumerate all
    relabelings when there are at most ``EXHAUSTIVE_LIMIT`` of them), or a
    bool to force either mode. ``asymptotic`` lists methods whose reported
    p-value should come from their large-sample null instead of the
    permutation distribution; ``None`` means the registry default (NN0, ES,
    EP and Chisquare).
    """

    B: int = 1000
    seed: int = 0
    methods: tuple[str, ...] = ("KS", "AZ")
    tails: dict[str, str] | None = None
    asymptotic: tuple[str, ...] | None = None
    exhaustive: bool | None = None
    workers: int = 1

    def __post_init__(self):
        if self.B < 1:
            raise InputError("B must be at least 1")
        names = tuple(dict.fromkeys(M.canonical(nm) for nm in self.methods))
        if not names:
            raise InputError("no methods requested")
        object.__setattr__(self, "methods", names)
        tails = {nm: M.spec(nm).tail for nm in names}
        if self.tails:
            for nm, t in self.tails.items():
                if t not in (M.UPPER, M.LOWER):
                    raise InputError(f"tail must be 'upper' or 'lower', got {t!r}")
                tails[M.canonical(nm)] = t
        object.__setattr__(self, "tails", tails)
        if self.asymptotic is None:
            asym = tuple(nm for nm in names if M.spec(nm).default_asymptotic)
        else:
            asym = tuple(M.canonical(nm) for nm in self.asymptotic)
            for nm in asym:
                if not M.spec(nm).has_asymptotic:
                    raise InputError(f"{nm} has no large-sample p-value")
        object.__setattr__(self, "asymptotic", asym)


@dataclass
class MethodOutcome:
    method: str
    tail: str
    observed: float = float("nan")
    permuted: np.ndarray = field(default_factory=lambda: np.empty(0))
    p_value: float = float("nan")
    p_method: PMethod = PMethod.PERMUTATION
    error: str | None = None

    def result(self) -> TestResult:
        if self.error:
            raise MethodError(self.error)
        return TestResult(self.method, self.observed, self.p_value, self.p_method)


@dataclass
class PermutationOutcome:
    methods: dict[str, MethodOutcome]
    B: int
    exhaustive: bool
    combined_p: float | None = None
    combined_methods: tuple[str, ...] = ()

    def results(self) -> list[TestResult]:
        return [o.result() for o in self.methods.values() if o.error is None]


def n_relabelings(N: int, n: int) -> int:
    return math.comb(N, n)


def _mc_labels(N: int, n: int, seed: int, start: int, stop: int) -> np.ndarray:
    out = np.zeros((stop - start, N), dtype=np.uint8)
    for row, b in enumerate(range(start, stop)):
        perm = SeededRng(seed, b + 1).generator().permutation(N)
        out[row, perm[:n]] = 1
    return out


def _exhaustive_labels(N: int, n: int) -> np.ndarray:
    combos = np.array(list(itertools.combinations(range(N), n)), dtype=np.int64).reshape(-1, n)
    out = np.zeros((combos.shape[0], N), dtype=np.uint8)
    np.put_along_axis(out, combos, 1, axis=1)
    return out


def tie_tolerance(observed: float, permuted: np.ndarray) -> float:
    scale = max(abs(observed), float(np.max(np.abs(permuted))) if permuted.size else 0.0)
    return TIE_RTOL * scale


def count_extreme(observed: float, permuted: np.ndarray, tail: str) -> int:
    """Permuted values at least as extreme as ``observed``, ties included."""
    tol = tie_tolerance(observed, permuted)
    if tail == M.UPPER:
        return int(np.sum(permuted >= observed - tol))
    return int(np.sum(permuted <= observed + tol))


def permutation_pvalue(observed: float, permuted: np.ndarray, tail: str, exhaustive: bool = False) -> float:
    """``(1 + #extreme) / (B + 1)``, or ``#extreme / B`` over a full enumeration."""
    c = count_extreme(observed, permuted, tail)
    if exhaustive:
        return c / permuted.size
    return (1 + c) / (permuted.size + 1)


def _snap(values: np.ndarray, tol: float) -> np.ndarray:
    """Replace values within ``tol`` of their sorted predecessor by one representative."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    if v.size == 0:
        return values.copy()
    group = np.concatenate([[0], np.cumsum(np.diff(v) > tol)])
    rep = v[np.concatenate([[0], np.flatnonzero(np.diff(group)) + 1])]
    out = np.empty_like(values)
    out[order] = rep[group]
    return out


def pseudo_pvalues(values: np.ndarray, tail: str) -> np.ndarray:
    """Mid-rank tail probability of each value within ``values`` itself."""
    from scipy.stats import rankdata

    tol = TIE_RTOL * float(np.max(np.abs(values))) if values.size else 0.0
    v = _snap(values, tol)
    if tail == M.UPPER:
        v = -v
    # rank 1 = most extreme; ties share the average rank
    return rankdata(v, method="average") / values.size


def _evaluate_all(support: M.Support, names, labels) -> dict[str, np.ndarray]:
    return M.evaluate(support, names, labels)


def run_permutations(support: M.Support, plan: PermutationPlan, names) -> tuple[dict, np.ndarray | None, bool]:
    """Observed and permuted statistics for ``names`` on one dataset."""
    N, n = support.N, support.n
    total = n_relabelings(N, n)
    exhaustive = plan.exhaustive if plan.exhaustive is not None else total <= EXHAUSTIVE_LIMIT
    if exhaustive and total > 10 * EXHAUSTIVE_LIMIT:
        raise InputError(f"exhaustive enumeration of {total} relabelings is too large")
    observed = _evaluate_all(support, names, support.pooled.labels[None, :].astype(np.uint8))
    observed = {nm: float(v[0]) for nm, v in observed.items()}

    if exhaustive:
        all_labels = _exhaustive_labels(N, n)
        count = all_labels.shape[0]
        chunks = [(s, min(s + CHUNK, count)) for s in range(0, count, CHUNK)]

        def job(bounds):
            s, e = bounds
            return _evaluate_all(support, names, all_labels[s:e])
    else:
        count = plan.B
        chunks = [(s, min(s + CHUNK, count)) for s in range(0, count, CHUNK)]

        def job(bounds):
            s, e = bounds
            return _evaluate_all(support, names, _mc_labels(N, n, plan.seed, s, e))

    if plan.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    permuted = {nm: np.concatenate([p[nm] for p in parts]) for nm in names}
    return observed, permuted, exhaustive


def _prepare(support: M.Support, plan: PermutationPlan) -> tuple[dict[str, MethodOutcome], list[str]]:
    outcomes = {}
    ok = []
    for nm in plan.methods:
        out = MethodOutcome(nm, plan.tails[nm])
        try:
            support.check(nm)
        except (MethodError, InputError) as exc:
            out.error = str(exc)
        else:
            ok.append(nm)
        outcomes[nm] = out
    support.warm(ok)
    return outcomes, ok


def _fill(support, plan, outcomes, ok, observed, permuted, exhaustive):
    for nm in ok:
        out = outcomes[nm]
        out.observed = observed[nm]
        out.permuted = permuted[nm]
        if nm in plan.asymptotic:
            try:
                out.p_value = M.asymptotic_pvalue(support, nm, out.observed)
            except MethodError as exc:
                out.error = str(exc)
                continue
            out.p_method = PMethod.ASYMPTOTIC
        else:
            out.p_value = permutation_pvalue(out.observed, out.permuted, out.tail, exhaustive)
            out.p_method = PMethod.PERMUTATION


def _support(p, support) -> M.Support:
    if support is not None:
        return support
    if isinstance(p, M.Support):
        return p
    return M.Support(p)


def permutation_test(p: PooledSample, plan: PermutationPlan, support: M.Support | None = None) -> PermutationOutcome:
    """Run every method of ``plan`` on one dataset from a single permutation pass.

    Methods that cannot be applied (for example AZ with a single x point)
    get an ``error`` entry; the others still run.
    """
    support = _support(p, support)
    outcomes, ok = _prepare(support, plan)
    if not ok:
        return PermutationOutcome(outcomes, plan.B, False)
    observed, permuted, exhaustive = run_permutations(support, plan, ok)
    _fill(support, plan, outcomes, ok, observed, permuted, exhaustive)
    B = permuted[ok[0]].size
    return PermutationOutcome(outcomes, B, exhaustive)


def min_p_adjust(observed: dict[str, float], permuted: dict[str, np.ndarray], tails: dict[str, str],
                 exhaustive: bool) -> float:
    """Permutation-calibrated p-value of the smallest per-method pseudo p-value.

    Monte Carlo: the observed statistics are ranked together with the B
    permuted ones and the result is ``(1 + #{b: minp_b <= minp_obs}) / (B + 1)``.
    Exhaustive: the enumeration already contains the observed labeling and
    the result is ``#{b: minp_b <= minp_obs} / B``.
    """
    names = list(observed)
    B = permuted[names[0]].size
    pmin_obs = np.inf
    pmin_perm = np.full(B, np.inf)
    for nm in names:
        if exhaustive:
            pool = permuted[nm]
            pp = pseudo_pvalues(pool, tails[nm])
            tol = tie_tolerance(observed[nm], pool)
            close = np.flatnonzero(np.abs(pool - observed[nm]) <= tol)
            obs_p = pp[close[0]] if close.size else float(np.mean(
                (pool >= observed[nm]) if tails[nm] == M.UPPER else (pool <= observed[nm])))
            pmin_perm = np.minimum(pmin_perm, pp)
        else:
            pool = np.concatenate([[observed[nm]], permuted[nm]])
            pp = pseudo_pvalues(pool, tails[nm])
            obs_p = pp[0]
            pmin_perm = np.minimum(pmin_perm, pp[1:])
        pmin_obs = min(pmin_obs, obs_p)
    hits = int(np.sum(pmin_perm <= pmin_obs * (1 + 1e-12)))
    if exhaustive:
        return hits / B
    return (1 + hits) / (B + 1)


def combine_tests(p: PooledSample, plan: PermutationPlan, support: M.Support | None = None) -> PermutationOutcome:
    """Per-method p-values plus a min-p combined p-value from the same permutations."""
    if len(plan.methods) < 2:
        raise InputError("combining needs at least two methods")
    support = _support(p, support)
    outcomes, ok = _prepare(support, plan)
    if len(ok) < 1:
        return PermutationOutcome(outcomes, plan.B, False)
    observed, permuted, exhaustive = run_permutations(support, plan, ok)
    _fill(support, plan, outcomes, ok, observed, permuted, exhaustive)
    used = [nm for nm in ok if outcomes[nm].error is None]
    combined = min_p_adjust({nm: observed[nm] for nm in used}, {nm: permuted[nm] for nm in used},
                            plan.tails, exhaustive)
    return PermutationOutcome(outcomes, permuted[ok[0]].size, exhaustive, combined, tuple(used))
