"""Command-line interface.

Exit codes: 0 success, 1 I/O or parse failure, 2 infeasible parameters or
failed fit, 3 solver non-convergence, 64 usage error.

Every flag may also be given in a key-value config file (``key = value``
per line, ``#`` comments) passed with ``--config`` or named by the
``AWM_CONFIG`` environment variable.  Flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ParameterVector,
    awm_lorenz,
    dual_lorenz,
    gini,
    oligarchy_fraction,
    scale_density,
    shift_density,
)
from .empirical import canonicalize, empirical_gini, load_households, lorenz_ordinates, merge
from .errors import (
    AWMError,
    ConvergenceError,
    DomainError,
    FitError,
    InputError,
    ParseError,
    UnsupportedError,
)
from .fitter import TABLE_COLUMNS, ModelFamily, SearchConfig, fit, trend, trend_rows
from .io import (
    curve_to_dict,
    density_from_dict,
    density_to_dict,
    load_curve,
    read_density_csv,
    read_json,
    write_curve_csv,
    write_density_csv,
    write_json,
)
from .montecarlo import Model, SimConfig, empirical_lorenz, run
from .solver import SolverConfig, solve_model

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_NOCONV, EXIT_USAGE = 0, 1, 2, 3, 64
CONFIG_ENV = "AWM_CONFIG"

log = logging.getLogger("awm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; keys are normalized to flag dests."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _add_theta(p, kappa=True):
    p.add_argument("--chi", type=float, required=False)
    p.add_argument("--zeta", type=float, default=0.0)
    if kappa:
        p.add_argument("--kappa", type=float, default=0.0)


def _add_solver(p):
    p.add_argument("--grid", type=int, default=SolverConfig.n_cells, help="solver grid nodes")
    p.add_argument("--w-max", type=float, default=SolverConfig.w_max)
    p.add_argument("--tol", type=float, default=SolverConfig.tol_residual)
    p.add_argument("--max-steps", type=int, default=SolverConfig.max_steps)
    p.add_argument("--resolution", type=int, default=10_000, help="Lorenz f-grid intervals")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="awm", description="Affine Wealth Model solver, simulator and fitter.")
    parser.add_argument("--version", action="version", version=f"awm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="steady-state Lorenz curve and density for one theta")
    p.add_argument("--config")
    _add_theta(p)
    _add_solver(p)
    p.add_argument("--out", default="solve_out", help="output directory")

    p = sub.add_parser("simulate", help="Monte Carlo run")
    p.add_argument("--config", help="key-value, JSON or TOML settings")
    p.add_argument("--model", choices=[m.value for m in Model], default="eysm")
    _add_theta(p)
    p.add_argument("--n-agents", type=int, default=10_000)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--sweeps", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--sample-every", type=int, default=0)
    p.add_argument("--resolution", type=int, default=2000)
    p.add_argument("--out", default="simulate_out", help="output directory")

    p = sub.add_parser("fit", help="fit a model family to household data or a curve")
    p.add_argument("--config")
    p.add_argument("--model", choices=[m.value for m in ModelFamily], required=False)
    p.add_argument("--data", required=False, help="weight,networth CSV (repeat to merge)",
                   action="append")
    p.add_argument("--curve", help="fit to an f,l CSV or JSON curve instead")
    p.add_argument("--label", default="")
    _add_search(p)
    p.add_argument("--out", default="fit_out", help="output directory")

    p = sub.add_parser("trend", help="fit every CSV in a directory")
    p.add_argument("--config")
    p.add_argument("--model", choices=[m.value for m in ModelFamily], required=False)
    p.add_argument("--data-dir", required=False)
    p.add_argument("--jobs", type=int, default=1)
    _add_search(p)
    p.add_argument("--out", default="trend.csv", help="output CSV")

    p = sub.add_parser("lorenz", help="empirical Lorenz ordinates of household data")
    p.add_argument("--config")
    p.add_argument("--data", required=False, action="append")
    p.add_argument("--out", default="-", help="f,l CSV or .json (default stdout)")

    p = sub.add_parser("gini", help="Gini coefficient of a curve or household file")
    p.add_argument("--config")
    p.add_argument("--curve")
    p.add_argument("--data", action="append")

    p = sub.add_parser("transform", help="apply one symmetry: dual, shift or scale")
    p.add_argument("--config")
    p.add_argument("--op", choices=["dual", "shift", "scale"], required=False)
    _add_theta(p)
    p.add_argument("--curve", help="input Lorenz curve (dual, shift)")
    p.add_argument("--density", help="input density JSON or w,p CSV (shift, scale)")
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--out", default="-")
    return parser


def _add_search(p):
    d = SearchConfig()
    p.add_argument("--chi-min", type=float, default=d.chi_range[0])
    p.add_argument("--chi-max", type=float, default=d.chi_range[1])
    p.add_argument("--zeta-min", type=float, default=d.zeta_range[0])
    p.add_argument("--zeta-max", type=float, default=d.zeta_range[1])
    p.add_argument("--kappa-min", type=float, default=d.kappa_range[0])
    p.add_argument("--kappa-max", type=float, default=d.kappa_range[1])
    p.add_argument("--grid-density", type=int, default=d.grid_density)
    p.add_argument("--refine-tol", type=float, default=d.refine_tol)
    p.add_argument("--resolution", type=int, default=d.curve_resolution)
    p.add_argument("--grid", type=int, default=d.solver.n_cells, help="solver grid nodes")


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, [], "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        chi_range=(args.chi_min, args.chi_max),
        zeta_range=(args.zeta_min, args.zeta_max),
        kappa_range=(args.kappa_min, args.kappa_max),
        grid_density=args.grid_density,
        refine_tol=args.refine_tol,
        curve_resolution=args.resolution,
        solver=SolverConfig(n_cells=args.grid),
    )


def _load_data(paths):
    dist = None
    for path in paths:
        d = load_households(path)
        dist = d if dist is None else merge(dist, d)
    return canonicalize(dist)


def _emit_curve(curve, out):
    if out == "-":
        sys.stdout.write("f,l\n")
        for f, l in zip(curve.f, curve.l):
            sys.stdout.write(f"{f:.17g},{l:.17g}\n")
    elif out.lower().endswith(".json"):
        write_json(curve_to_dict(curve), out)
    else:
        write_curve_csv(curve, out)


def _emit_density(p, out, params=None):
    if out == "-":
        sys.stdout.write(json.dumps(density_to_dict(p, params)) + "\n")
    elif out.lower().endswith(".csv"):
        write_density_csv(p, out)
    else:
        write_json(density_to_dict(p, params), out)


def _outdir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_solve(args) -> int:
    _require(args, "chi")
    theta = ParameterVector(args.chi, args.zeta, args.kappa)
    cfg = SolverConfig(w_max=args.w_max, n_cells=args.grid, tol_residual=args.tol,
                       max_steps=args.max_steps)
    sol = solve_model(theta, cfg, args.resolution)
    out = _outdir(args.out)
    write_curve_csv(sol.lorenz, out / "lorenz.csv")
    write_json(curve_to_dict(sol.lorenz), out / "lorenz.json")
    d = density_to_dict(sol.density, theta.as_dict())
    d["diagnostics"] = sol.outcome.diagnostics()
    write_json(d, out / "density.json")
    summary = {
        "theta": theta.as_dict(),
        "gini": gini(sol.lorenz),
        "terminal": sol.lorenz.terminal,
        "oligarchy_fraction": oligarchy_fraction(theta),
        "regime": "supercritical" if theta.is_supercritical else "subcritical",
        "diagnostics": sol.outcome.diagnostics(),
    }
    write_json(summary, out / "diagnostics.json")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config and not args.config.lower().endswith((".json", ".toml")):
        args.config = None  # already merged as key-value flags
    if args.config:
        cfg = SimConfig.from_file(args.config)
    else:
        _require(args, "chi")
        cfg = SimConfig(theta=ParameterVector(args.chi, args.zeta, args.kappa), model=args.model,
                        n_agents=args.n_agents, dt=args.dt, sweeps=args.sweeps, seed=args.seed,
                        burn_in=args.burn_in, sample_every=args.sample_every,
                        resolution=args.resolution)
    ens = run(cfg)
    out = _outdir(args.out)
    final = empirical_lorenz(ens)
    write_curve_csv(final.resample(cfg.resolution), out / "lorenz.csv")
    if ens.mean_lorenz is not None:
        write_curve_csv(ens.mean_lorenz, out / "lorenz_mean.csv")
    summary = {
        "model": cfg.model.value,
        "theta": cfg.theta.as_dict(),
        "n_agents": cfg.n_agents,
        "dt": cfg.dt,
        "sweeps": cfg.sweeps,
        "seed": cfg.seed,
        "time": ens.time,
        "mean_wealth": ens.mean(),
        "gini": gini(final),
        "gini_time_averaged": gini(ens.mean_lorenz) if ens.mean_lorenz is not None else None,
        "top_agent_share": ens.top_share(),
        "top_0.001_share": ens.top_share(1e-3),
        "clamp_events": ens.clamp_events,
        "snapshots": ens.snapshots,
    }
    write_json(summary, out / "summary.json")
    np.savetxt(out / "wealths.csv", ens.wealths, fmt="%.17g", header="w", comments="")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_fit(args) -> int:
    _require(args, "model")
    if args.curve:
        emp = load_curve(args.curve)
    else:
        _require(args, "data")
        emp = lorenz_ordinates(_load_data(args.data))
    report = fit(args.model, emp, _search_config(args), label=args.label)
    out = _outdir(args.out)
    write_json(report.to_dict(), out / "report.json")
    with open(out / "local_error.csv", "w", newline="") as fh:
        fh.write("f,l,error\n")
        for f, l, e in zip(emp.f[1:], emp.l[1:], report.local_error_profile):
            fh.write(f"{f:.17g},{l:.17g},{e:.17g}\n")
    fg = np.linspace(0.0, 1.0, report.curve.f.size)
    with open(out / "overlay.csv", "w", newline="") as fh:
        fh.write("f,empirical,model\n")
        for f, a, b in zip(fg, emp(fg), report.curve(fg)):
            fh.write(f"{f:.17g},{a:.17g},{b:.17g}\n")
    print(json.dumps(report.to_dict(include_profile=False)))
    return EXIT_OK


def cmd_trend(args) -> int:
    _require(args, "model", "data_dir")
    d = Path(args.data_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"no such directory: {d}")
    files = sorted(d.glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no CSV files in {d}")
    datasets = []
    failed = []
    for path in files:
        try:
            datasets.append((path.stem, lorenz_ordinates(canonicalize(load_households(path)))))
        except (AWMError, OSError) as exc:
            failed.append((path.stem, exc))
    results = trend(datasets, args.model, _search_config(args), jobs=args.jobs) + failed
    rows = sorted(trend_rows(results), key=lambda r: str(r["label"]))
    if args.out == "-":
        fh = sys.stdout
    else:
        fh = open(args.out, "w", newline="")
    try:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_lorenz(args) -> int:
    _require(args, "data")
    _emit_curve(lorenz_ordinates(_load_data(args.data)), args.out)
    return EXIT_OK


def cmd_gini(args) -> int:
    if args.curve:
        value = gini(load_curve(args.curve))
    elif args.data:
        value = empirical_gini(_load_data(args.data))
    else:
        raise UsageError("gini needs --curve or --data")
    print(f"{value:.10g}")
    return EXIT_OK


def _load_density(path):
    if str(path).lower().endswith(".csv"):
        return read_density_csv(path)
    return density_from_dict(read_json(path))


def cmd_transform(args) -> int:
    _require(args, "op")
    if args.op == "dual":
        _require(args, "chi", "curve")
        _emit_curve(dual_lorenz(load_curve(args.curve), args.chi, args.zeta), args.out)
    elif args.op == "shift":
        _require(args, "chi")
        theta = ParameterVector(args.chi, args.zeta, args.kappa)
        if args.curve:
            _emit_curve(awm_lorenz(load_curve(args.curve), theta), args.out)
        else:
            _require(args, "density")
            _emit_density(shift_density(_load_density(args.density), theta), args.out,
                          theta.as_dict())
    else:
        _require(args, "density")
        _emit_density(scale_density(_load_density(args.density), args.n, args.w), args.out)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "trend": cmd_trend,
    "lorenz": cmd_lorenz,
    "gini": cmd_gini,
    "transform": cmd_transform,
}


def _apply_config(parser, argv):
    """Re-parse with config-file values installed as subcommand defaults."""
    args = parser.parse_args(argv)
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not path:
        return args
    if str(path).lower().endswith((".json", ".toml")):
        return args  # structured simulation settings, read by the command itself
    values = read_config(path)
    values.pop("config", None)
    sub = parser._subparsers._group_actions[0].choices[args.verb]
    dests = {a.dest: a for a in sub._actions}
    unknown = sorted(set(values) - set(dests))
    if unknown:
        raise UsageError(f"unknown config keys for {args.verb}: {', '.join(unknown)}")
    defaults = {}
    for key, raw in values.items():
        action = dests[key]
        try:
            if action.choices is not None and raw not in action.choices:
                raise ValueError(f"invalid choice {raw!r}")
            value = action.type(raw) if action.type else raw
            if isinstance(action, argparse._AppendAction):
                value = [value]
        except ValueError as exc:
            raise UsageError(f"config key {key}: {exc}") from None
        defaults[key] = value
    sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    args.config = path
    return args


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except (DomainError, FitError) as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc))
    except ConvergenceError as exc:
        return _fail(EXIT_NOCONV, "convergence", f"{exc} {json.dumps(exc.diagnostics)}")
    except (ParseError, InputError, OSError) as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (UnsupportedError, AWMError, ValueError) as exc:
        return _fail(EXIT_INFEASIBLE, "invalid", str(exc))


if __name__ == "__main__":
    sys.exit(main())
