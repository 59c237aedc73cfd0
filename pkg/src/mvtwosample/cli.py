"""Command-line front end.

Every run echoes its fully resolved settings to stderr as ``key=value``
lines; saving them to a file and passing ``--config FILE`` reproduces the
run. Flags given on the command line win over config-file values.

Exit status: 0 on success, 2 on input errors, 3 when a method cannot be
applied to the data.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import binned, casestudies, power
from . import methods as M
from .core import InputError, MethodError, SeededRng, pool, read_points_csv, write_points_csv
from .permutation import PermutationPlan, combine_tests, permutation_test

SUBCOMMANDS = ("test", "test-discrete", "generate", "power", "null-check", "summarize")
FORMATS = ("text", "tsv", "json")
EXIT_INPUT = 2
EXIT_METHOD = 3


@dataclass(frozen=True)
class RunSpec:
    subcommand: str
    inputs: tuple[str, ...] = ()
    methods: tuple[str, ...] = ()
    B: int = 1000
    seed: int = 0
    alpha: float = 0.05
    grid: tuple[int, int] = (5, 5)
    scheme: str = "es"
    format: str = "text"
    threads: int = 1
    combine: bool = False
    case: str = ""
    theta: float | None = None
    which: str = "y"
    size: int = 100
    n: int = 100
    m: int = 100
    nsim: int = 200
    discrete: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InputError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in FORMATS:
            raise InputError(f"format must be one of {', '.join(FORMATS)}")
        if binned.SCHEME_ALIASES.get(self.scheme, self.scheme) not in binned.SCHEMES:
            raise InputError(f"unknown binning scheme {self.scheme!r}")
        if self.threads < 1:
            raise InputError("threads must be at least 1")

    def to_config(self) -> str:
        """Flat ``key=value`` lines; ``from_config`` inverts this exactly."""
        out = []
        for f in fields(self):
            out.append(f"{f.name}={_encode(getattr(self, f.name))}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_config(cls, text: str, source: str = "<config>") -> "RunSpec":
        values = parse_config(text, source)
        if "subcommand" not in values:
            raise InputError(f"{source}: missing subcommand")
        return cls(**values)


_FIELD_TYPES = {
    "inputs": "list", "methods": "list", "B": "int", "seed": "int", "alpha": "float",
    "grid": "grid", "threads": "int", "combine": "bool", "theta": "optfloat",
    "size": "int", "n": "int", "m": "int", "nsim": "int", "discrete": "bool",
}


def _encode(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple) and len(v) == 2 and all(isinstance(t, int) for t in v):
        return f"{v[0]}x{v[1]}"
    if isinstance(v, tuple):
        return ",".join(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _decode(key: str, raw: str, where: str):
    kind = _FIELD_TYPES.get(key, "str")
    raw = raw.strip()
    try:
        if kind == "list":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw == "" else float(raw)
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return raw.lower() in ("true", "1", "yes")
        if kind == "grid":
            return parse_grid(raw)
    except ValueError:
        raise InputError(f"{where}: bad value {raw!r} for {key}") from None
    return raw


def parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise InputError(f"grid must look like 5x5, got {text!r}")
    try:
        r, c = int(parts[0]), int(parts[1])
    except ValueError:
        raise InputError(f"grid must look like 5x5, got {text!r}") from None
    if r < 2 or c < 2:
        raise InputError("a grid needs at least 2 bins per axis")
    return r, c


def parse_config(text: str, source: str = "<config>") -> dict:
    names = {f.name for f in fields(RunSpec)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in names:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = _decode(key, raw, f"{source}:{lineno}")
    return out


# --- argument parsing -------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvtwosample", description="Multivariate two-sample tests.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, fmt=True):
        p.add_argument("--config", help="key=value file of defaults; flags override it")
        p.add_argument("--seed", type=int)
        if fmt:
            p.add_argument("--format", choices=FORMATS)

    def testing(p):
        p.add_argument("--methods", help="comma-separated method names")
        p.add_argument("--B", type=int, help="number of random permutations")
        p.add_argument("--alpha", type=float)
        p.add_argument("--grid", help="bins per axis for ES/EP, e.g. 5x5")
        p.add_argument("--scheme", choices=("es", "ep", "equal_size", "equal_probability"))
        p.add_argument("--threads", type=int)

    p = sub.add_parser("test", help="test two point samples given as CSV files")
    p.add_argument("inputs", nargs="*", metavar="CSV")
    common(p)
    testing(p)
    p.add_argument("--combine", action="store_true", default=None, help="also report the min-p combined p-value")

    p = sub.add_parser("test-discrete", help="test grid data (row_index,col_index,count_x,count_y)")
    p.add_argument("inputs", nargs="*", metavar="GRID_CSV")
    common(p)
    testing(p)
    p.add_argument("--combine", action="store_true", default=None)

    p = sub.add_parser("generate", help="write a case-study sample as CSV")
    common(p, fmt=False)
    p.add_argument("--case")
    p.add_argument("--theta", type=float)
    p.add_argument("--size", type=int)
    p.add_argument("--which", choices=("x", "y"))

    for name in ("power", "null-check"):
        p = sub.add_parser(name, help="rejection rates of simulated case-study data")
        common(p)
        testing(p)
        p.add_argument("--case")
        if name == "power":
            p.add_argument("--theta", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--nsim", type=int)
        p.add_argument("--discrete", action="store_true", default=None,
                       help="bin the data first and run the discrete tests")

    p = sub.add_parser("summarize", help="mean power, close-to-best and a covering selection")
    p.add_argument("inputs", nargs="*", metavar="TSV")
    common(p)
    return ap


def resolve(argv) -> RunSpec:
    args = _parser().parse_args(argv)
    values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"{path}: cannot open ({exc.strerror})") from None
        values.update(parse_config(text, str(path)))
    values["subcommand"] = args.subcommand
    for key, val in vars(args).items():
        if key in ("config", "subcommand") or val is None:
            continue
        if key == "inputs":
            if val:
                values["inputs"] = tuple(val)
        elif key == "methods":
            values["methods"] = tuple(s.strip() for s in val.split(",") if s.strip())
        elif key == "grid":
            values["grid"] = parse_grid(val)
        else:
            values[key] = val
    spec = RunSpec(**values)
    if spec.methods:
        spec = replace(spec, methods=tuple(M.canonical(nm) for nm in spec.methods))
    return spec


# --- subcommands ---------------------------------------------------------


def _plan(spec: RunSpec, default_methods) -> PermutationPlan:
    names = spec.methods or tuple(default_methods)
    return PermutationPlan(B=spec.B, seed=spec.seed, methods=names, workers=spec.threads)


def _need_inputs(spec: RunSpec, count: int, what: str):
    if len(spec.inputs) != count:
        raise InputError(f"{spec.subcommand} needs {count} {what}, got {len(spec.inputs)}")


def _emit_results(spec: RunSpec, outcome, out) -> int:
    rc = 0
    results = []
    for nm, o in outcome.methods.items():
        if o.error:
            rc = EXIT_METHOD
            print(f"error: {o.error}", file=sys.stderr)
            continue
        results.append(o.result())
    reject = {r.method: r.p_value <= spec.alpha for r in results}
    if spec.format == "json":
        doc = {"kind": "test", "spec": _spec_dict(spec), "B": outcome.B, "exhaustive": outcome.exhaustive,
               "results": [dict(r.as_dict(), reject=reject[r.method]) for r in results],
               "errors": {nm: o.error for nm, o in outcome.methods.items() if o.error}}
        if outcome.combined_p is not None:
            doc["combined"] = {"methods": list(outcome.combined_methods), "p_value": outcome.combined_p}
        out.write(json.dumps(doc, indent=2) + "\n")
    elif spec.format == "tsv":
        out.write("method\tstatistic\tp_value\tp_method\treject\n")
        for r in results:
            out.write(f"{r.method}\t{r.statistic!r}\t{r.p_value!r}\t{r.p_method.value}\t{int(reject[r.method])}\n")
        if outcome.combined_p is not None:
            out.write(f"combined\t\t{outcome.combined_p!r}\tpermutation\t{int(outcome.combined_p <= spec.alpha)}\n")
    else:
        width = max([len(r.method) for r in results] + [8])
        for r in results:
            out.write(f"{r.method:<{width}}  statistic={r.statistic:.6g}  p={r.p_value:.4f}  ({r.p_method.value})"
                      f"{'  *' if reject[r.method] else ''}\n")
        if outcome.combined_p is not None:
            out.write(f"{'combined':<{width}}  p={outcome.combined_p:.4f}  "
                      f"(min-p over {', '.join(outcome.combined_methods)})\n")
    return rc


def _run_tests(spec: RunSpec, support: M.Support, defaults, out) -> int:
    plan = _plan(spec, defaults)
    if spec.combine:
        outcome = combine_tests(support.pooled, plan, support=support)
    else:
        outcome = permutation_test(support.pooled, plan, support=support)
    return _emit_results(spec, outcome, out)


def cmd_test(spec: RunSpec, out) -> int:
    _need_inputs(spec, 2, "CSV files")
    x = read_points_csv(spec.inputs[0])
    y = read_points_csv(spec.inputs[1])
    p = pool(x, y)
    scheme = binned.SCHEME_ALIASES.get(spec.scheme, spec.scheme)
    defaults = [nm for nm in M.CONTINUOUS_METHODS if p.d == 2 or nm not in ("ES", "EP")]
    if scheme == "equal_probability" and not spec.methods:
        defaults = [nm for nm in defaults if nm != "ES"]
    support = M.Support(p, grid_shape=spec.grid)
    return _run_tests(spec, support, defaults, out)


def cmd_test_discrete(spec: RunSpec, out) -> int:
    _need_inputs(spec, 1, "grid file")
    g = binned.read_grid_csv(spec.inputs[0])
    expanded = binned.discrete_pooled(g, tie_seed=spec.seed)
    support = M.Support(expanded, grid=g, grid_shape=spec.grid)
    return _run_tests(spec, support, M.DISCRETE_METHODS, out)


def cmd_generate(spec: RunSpec, out) -> int:
    if not spec.case:
        raise InputError("generate needs --case")
    case = casestudies.get_case(spec.case, spec.theta)
    sample = casestudies.sample_case(case, spec.which, spec.size, SeededRng(spec.seed, 0))
    write_points_csv(sample, out)
    return 0


def _study(spec: RunSpec) -> power.StudyConfig:
    if not spec.case:
        raise InputError(f"{spec.subcommand} needs --case")
    case = casestudies.get_case(spec.case, spec.theta)
    if spec.discrete:
        defaults = M.DISCRETE_METHODS
    else:
        defaults = [nm for nm in M.CONTINUOUS_METHODS if case.dimension == 2 or nm not in ("ES", "EP")]
    plan = replace(_plan(spec, defaults), workers=1)
    scheme = binned.SCHEME_ALIASES.get(spec.scheme, spec.scheme)
    return power.StudyConfig(case, n=spec.n, m=spec.m, nsim=spec.nsim, plan=plan, alpha=spec.alpha,
                             seed=spec.seed, discrete=spec.discrete, grid_shape=spec.grid, scheme=scheme,
                             workers=spec.threads)


def _emit_row(spec: RunSpec, cfg: power.StudyConfig, row: power.PowerRow, out) -> int:
    if spec.format == "json":
        doc = {"kind": "power", "spec": _spec_dict(spec), "alpha": cfg.alpha, "n": cfg.n, "m": cfg.m,
               "B": cfg.plan.B, **row.as_dict()}
        if spec.subcommand == "null-check":
            lo, hi = power.binomial_band(cfg.alpha, cfg.nsim)
            doc["band"] = [lo, hi]
        out.write(json.dumps(doc, indent=2) + "\n")
        return 0
    table = power.PowerTable.from_rows([row])
    if spec.format == "tsv":
        out.write(power.format_table_tsv(table))
        return 0
    out.write(power.format_table_text(table))
    se = power.PowerTable((f"{row.case} (s.e.)",), table.methods,
                          100.0 * np.array([[row.stderr[nm] for nm in table.methods]]))
    out.write(power.format_table_text(se).split("\n", 1)[1])
    if spec.subcommand == "null-check":
        lo, hi = power.binomial_band(cfg.alpha, cfg.nsim)
        bad = [nm for nm, v in row.power.items() if not math.isnan(v) and not lo <= v <= hi]
        out.write(f"99% band for level {cfg.alpha}: [{lo:.3f}, {hi:.3f}]"
                  f"{'; outside: ' + ', '.join(bad) if bad else '; all methods inside'}\n")
    return 0


def cmd_power(spec: RunSpec, out) -> int:
    cfg = _study(spec)
    return _emit_row(spec, cfg, power.estimate_power(cfg, spec.theta), out)


def cmd_null_check(spec: RunSpec, out) -> int:
    cfg = _study(spec)
    return _emit_row(spec, cfg, power.null_check(cfg), out)


def _table_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files(__package__).joinpath("fixtures", path.name)
    if bundled.is_file():
        return Path(str(bundled))
    return path


def cmd_summarize(spec: RunSpec, out) -> int:
    _need_inputs(spec, 1, "table file")
    table = power.read_table(_table_path(spec.inputs[0]))
    s = power.summarize(table)
    if spec.format == "json":
        out.write(json.dumps({"kind": "summary", "spec": _spec_dict(spec), **power.summary_dict(s)}, indent=2) + "\n")
    elif spec.format == "tsv":
        out.write(power.format_summary_tsv(s))
    else:
        out.write(power.format_summary_text(s))
    return 0


COMMANDS = {
    "test": cmd_test,
    "test-discrete": cmd_test_discrete,
    "generate": cmd_generate,
    "power": cmd_power,
    "null-check": cmd_null_check,
    "summarize": cmd_summarize,
}


def _spec_dict(spec: RunSpec) -> dict:
    d = asdict(spec)
    d["inputs"] = list(spec.inputs)
    d["methods"] = list(spec.methods)
    d["grid"] = list(spec.grid)
    return d


def run(spec: RunSpec, out=None, echo=None) -> int:
    out = sys.stdout if out is None else out
    echo = sys.stderr if echo is None else echo
    for line in spec.to_config().splitlines():
        echo.write(f"{line}\n")
    return COMMANDS[spec.subcommand](spec, out)


def main(argv=None) -> int:
    try:
        spec = resolve(argv)
        return run(spec)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MethodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_METHOD


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("fixtures/output.schema.json").read_text())


if __name__ == "__main__":
    sys.exit(main())
