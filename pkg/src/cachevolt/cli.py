"""cachevolt command line: fit | optimize | hierarchy | gen-synthetic.

Exit codes: 0 ok, 2 parse/validation error, 3 fit error, 4 infeasible
(only with --strict), 5 missing miss-rate data.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import formats, synthetic
from .cache import Assignment, SchemeKind
from .errors import (
    DataError,
    FitError,
    MissingMissRate,
    NoFeasibleL1,
    NoFeasibleL2,
    OffGridValue,
    ParseError,
)
from .hierarchy import optimize_l1, optimize_l2, tuple_sweep
from .single import (
    DEFAULT_DP_RESOLUTION,
    DEFAULT_ORACLE_CAP,
    OptProblem,
    fixed_knob_sweep,
    optimize,
    pareto_frontier,
)
from .tech import DEFAULT_GRID, TechGrid, TechPoint, fit_component, fit_rms

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_FIT = 3
EXIT_INFEASIBLE = 4
EXIT_MISSING = 5

NANO = formats.NANO


@dataclass(frozen=True)
class RunConfig:
    grid: TechGrid = field(default_factory=lambda: DEFAULT_GRID)
    objective: str = "leakage"
    dp_resolution: int = DEFAULT_DP_RESOLUTION
    oracle_cap: int = DEFAULT_ORACLE_CAP
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.dp_resolution < 10**3:
            raise ValueError("dp_resolution must be >= 1000")
        if self.oracle_cap < 1:
            raise ValueError("oracle_cap must be >= 1")
        if self.objective not in ("leakage", "total_energy"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.output_format!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        formats.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config(args, **overrides) -> RunConfig:
    kw = dict(
        dp_resolution=getattr(args, "dp_resolution", DEFAULT_DP_RESOLUTION),
        oracle_cap=getattr(args, "oracle_cap", DEFAULT_ORACLE_CAP),
        output_format=getattr(args, "format", "json"),
        seed=getattr(args, "seed", 0),
    )
    kw.update(overrides)
    return RunConfig(**kw)


# --- fit ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    samples = formats.read_samples(args.samples)
    model = fit_component(samples, args.ref_area, args.area_exponent)
    formats.atomic_write(args.out, formats.dumps(formats.model_to_dict(model)))
    rms_l, rms_d = fit_rms(model, samples)
    print(f"samples: {len(samples)}")
    print(f"leakage rms residual: {rms_l / NANO:.6g} nW")
    print(f"delay rms residual: {rms_d / NANO:.6g} ns")
    return EXIT_OK


# --- optimize ----------------------------------------------------------------

def cmd_optimize(args) -> int:
    cfg = _config(args)
    spec = formats.read_spec(args.spec)
    scheme = SchemeKind.parse(args.scheme)
    kw = dict(method=args.method, cap=cfg.oracle_cap, resolution=cfg.dp_resolution)

    if args.sweep:
        curves = []
        for item in args.sweep:
            knob, _, value = item.partition("=")
            try:
                curves.append(fixed_knob_sweep(spec, knob.strip(), float(value)))
            except ValueError as exc:
                raise ParseError(f"--sweep {item}: {exc}") from None
        if cfg.output_format == "csv":
            _emit(formats.sweeps_csv(curves), args.out)
        else:
            _emit(formats.dumps([formats.sweep_to_dict(c) for c in curves]), args.out)
        return EXIT_OK

    if args.frontier:
        results = pareto_frontier(spec, scheme, [b * NANO for b in args.frontier], **kw)
    elif args.budget_ns is not None:
        results = [optimize(OptProblem(spec, scheme, args.budget_ns * NANO), **kw)]
    else:
        raise ParseError("one of --budget-ns, --frontier or --sweep is required")

    if cfg.output_format == "csv":
        _emit(formats.opt_results_csv(results), args.out)
    elif args.frontier:
        _emit(formats.dumps({"spec": spec.name, "scheme": scheme.value,
                             "frontier": [formats.opt_result_to_dict(r) for r in results]}), args.out)
    else:
        payload = formats.opt_result_to_dict(results[0], scheme)
        payload = {"spec": spec.name, **payload}
        _emit(formats.dumps(payload), args.out)
    if args.strict and not all(r.feasible for r in results):
        print("infeasible: no assignment meets the delay budget", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


# --- hierarchy ---------------------------------------------------------------

def _fixed(args_index, args_point, bundle_fixed, specs, label):
    if args_point is not None:
        idx = args_index if args_index is not None else 0
        if not 0 <= idx < len(specs):
            raise ParseError(f"--{label}-index {idx} out of range")
        vth, tox = args_point
        p = specs[idx].grid.snap(TechPoint(vth, tox))
        return idx, Assignment.uniform(p)
    if bundle_fixed is None:
        raise ParseError(f"no fixed {label.upper()} configuration: pass --{label}-point or set fixed_{label} in the system file")
    idx, asg = bundle_fixed
    if args_index is not None and args_index != idx:
        raise ParseError(f"--{label}-index {args_index} needs --{label}-point")
    return idx, asg


def cmd_hierarchy(args) -> int:
    objective = args.objective or ("total_energy" if args.mode == "tuple" else "leakage")
    cfg = _config(args, objective=objective)
    bundle = formats.read_system(args.system)
    h = bundle.hierarchy
    budget = args.amat_ns * NANO
    kw = dict(objective=cfg.objective, method=args.method, cap=cfg.oracle_cap, resolution=cfg.dp_resolution)

    try:
        if args.mode == "l2":
            idx, asg = _fixed(args.l1_index, args.l1_point, bundle.fixed_l1, h.l1_candidates, "l1")
            search = optimize_l2(h, idx, asg, budget, SchemeKind.parse(args.split), **kw)
        elif args.mode == "l1":
            idx, asg = _fixed(args.l2_index, args.l2_point, bundle.fixed_l2, h.l2_candidates, "l2")
            search = optimize_l1(h, idx, asg, budget, SchemeKind.parse(args.split), **kw)
        else:
            sweep = tuple_sweep(h, budget, args.max_m, args.max_n, objective=cfg.objective)
            if cfg.output_format == "csv":
                _emit(formats.tuple_sweep_csv(sweep), args.out)
            else:
                _emit(formats.dumps(formats.tuple_sweep_to_dict(sweep)), args.out)
            if args.strict and not any(c.feasible for c in sweep.cells.values()):
                return EXIT_INFEASIBLE
            return EXIT_OK
    except (NoFeasibleL1, NoFeasibleL2) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if args.strict else EXIT_OK

    if cfg.output_format == "csv":
        _emit(formats.level_search_csv(search), args.out)
    else:
        _emit(formats.dumps(formats.level_search_to_dict(search, args.mode, budget, h)), args.out)
    return EXIT_OK


# --- gen-synthetic -----------------------------------------------------------

def cmd_gen_synthetic(args) -> int:
    out = Path(args.outdir)
    seed = args.seed
    c16 = synthetic.synthetic_cache(synthetic.REF_SIZE)
    cell = c16.models[synthetic.ComponentKind.CELL_ARRAY]
    formats.atomic_write(out / "samples_exact.csv",
                         formats.samples_csv(synthetic.characterization_samples(cell)))
    formats.atomic_write(out / "samples_noisy.csv",
                         formats.samples_csv(synthetic.characterization_samples(cell, noise=0.01, seed=seed)))
    formats.atomic_write(out / "cache_16KB.json", formats.dumps(formats.spec_to_dict(c16)))
    formats.atomic_write(out / "cache_tiny.json", formats.dumps(formats.spec_to_dict(synthetic.tiny_cache())))
    for i, spec in enumerate(synthetic.synthetic_family(args.family, seed=seed)):
        formats.atomic_write(out / "family" / f"cache_16KB_{i:02d}.json", formats.dumps(formats.spec_to_dict(spec)))
    h = synthetic.synthetic_hierarchy()
    fixed_l1 = (synthetic.L1_SIZES.index(synthetic.REF_SIZE), Assignment.uniform(synthetic.DEFAULT_L1_POINT))
    fixed_l2 = (synthetic.L2_SIZES.index(synthetic.FIXED_L2_SIZE), Assignment.uniform(synthetic.DEFAULT_L2_POINT))
    formats.atomic_write(out / "system.json", formats.dumps(formats.system_to_dict(h, fixed_l1, fixed_l2)))
    formats.atomic_write(out / "misses.json", formats.dumps(
        formats.miss_table_to_dict(h.miss_table, h.mem_latency, h.mem_energy_per_access)))
    print(f"wrote synthetic data to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cachevolt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def search_flags(p):
        p.add_argument("--method", choices=("auto", "oracle", "separable"), default="auto")
        p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
        p.add_argument("--dp-resolution", type=int, default=DEFAULT_DP_RESOLUTION)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--strict", action="store_true", help="exit 4 when infeasible")
        p.add_argument("-o", "--out", help="output file (default: stdout)")

    p = sub.add_parser("fit", help="fit a component model to characterization samples")
    p.add_argument("samples")
    p.add_argument("out")
    p.add_argument("--ref-area", type=float, default=1.0)
    p.add_argument("--area-exponent", type=float, default=2.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", help="minimum-leakage assignment for one cache")
    p.add_argument("spec")
    p.add_argument("--scheme", default="II", help="I, II or III")
    p.add_argument("--budget-ns", type=float)
    p.add_argument("--frontier", type=_floats, help="comma-separated delay budgets in ns")
    p.add_argument("--sweep", action="append", help="fixed-knob sweep, e.g. vth=0.2 or tox=10")
    search_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("hierarchy", help="two-level cache / memory-system optimization")
    p.add_argument("system")
    p.add_argument("--amat-ns", type=float, required=True)
    p.add_argument("--mode", choices=("l2", "l1", "tuple"), default="l2")
    p.add_argument("--split", default="II", help="L2 (or L1) sharing scheme: II or III")
    p.add_argument("--objective", choices=("leakage", "total_energy"))
    p.add_argument("--max-m", type=int, default=3, help="max distinct tox values")
    p.add_argument("--max-n", type=int, default=3, help="max distinct vth values")
    p.add_argument("--l1-index", type=int)
    p.add_argument("--l1-point", type=_floats, help="fixed L1 vth,tox")
    p.add_argument("--l2-index", type=int)
    p.add_argument("--l2-point", type=_floats, help="fixed L2 vth,tox")
    search_flags(p)
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("gen-synthetic", help="write the shipped synthetic specs and tables")
    p.add_argument("outdir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", type=int, default=5, help="number of jittered 16 KB specs")
    p.set_defaults(func=cmd_gen_synthetic)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingMissRate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FitError as exc:
        print(f"fit error ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ParseError, DataError, OffGridValue) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
