"""Command-line front end: solves, convergence suites, and removability sweeps.

Exit codes: 0 success, 2 configuration/validation failure, 3 numerical failure
(solver non-convergence, inversion, discretization).  Errors also emit one
machine-readable line on stderr.  Every run echoes its fully resolved
configuration (plus tool version and seed) into the output directory, and a
rerun of the same config reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from . import __version__
from .errors import (
    ConfigError,
    DiscretizationError,
    GridError,
    InversionError,
    QclabError,
    SolverConvergenceError,
)
from .grid import GridSpec, Region
from .geometry import (
    CantorSet,
    cantor_cover,
    checkerboard,
    constant_disk,
    critical_index,
    radial_stretch,
    reference_indices,
)
from .removability import CellConfig, default_demo_cells, removability_sweep
from .svgplot import polyline_plot

_NUMERIC_ERRORS = (SolverConvergenceError, InversionError, DiscretizationError,
                   ArithmeticError, FloatingPointError)


def _fail(code: int, kind: str, msg: str) -> int:
    print(f"qclab-error: code={code} kind={kind} msg={msg!r}", file=sys.stderr)
    return code


def _out_dir(args, command: str) -> str:
    root = args.out or os.environ.get("QCLAB_OUT", "qclab-out")
    path = os.path.join(root, command) if args.out is None else root
    os.makedirs(path, exist_ok=True)
    return path


def _echo_config(path: str, resolved: dict) -> None:
    with open(os.path.join(path, "config-resolved.txt"), "w") as fh:
        fh.write(f"version = {__version__}\n")
        for key in sorted(resolved):
            fh.write(f"{key} = {resolved[key]}\n")


def _load_ini(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)
    return cp


def _grid_from(args, cp) -> GridSpec:
    n = args.n if args.n is not None else cp.getint("grid", "n", fallback=256)
    L = args.L if args.L is not None else cp.getfloat("grid", "L", fallback=4.0)
    try:
        return GridSpec(n, L)
    except GridError as exc:
        raise ConfigError(str(exc)) from exc


def _coefficient(spec: GridSpec, text: str, seed: int):
    kind, _, param = text.partition(":")
    try:
        if kind == "zero":
            return constant_disk(0.0, spec)
        if kind == "constant-disk":
            k = float(param)
            if not (0.0 <= k < 1.0):
                raise ConfigError("k must be < 1")
            return constant_disk(k, spec)
        if kind == "radial-stretch":
            return radial_stretch(float(param), spec)
        if kind == "checkerboard":
            k_str, _, cells_str = param.partition(",")
            k = float(k_str)
            if not (0.0 <= k < 1.0):
                raise ConfigError("k must be < 1")
            return checkerboard(k, int(cells_str or 8), seed, spec)
    except (ValueError, ConfigError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad coefficient spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown coefficient kind {kind!r}")


def cmd_solve(args) -> int:
    cp = _load_ini(args.config)
    spec = _grid_from(args, cp)
    mu_text = args.mu or cp.get("solve", "mu", fallback="constant-disk:0.3")
    tol = args.tol if args.tol is not None else cp.getfloat("solve", "tol", fallback=1e-8)
    if tol <= 0:
        raise ConfigError("tol must be positive")
    mu = _coefficient(spec, mu_text, args.seed)
    out = _out_dir(args, "solve")
    _echo_config(out, {"command": "solve", "mu": mu_text, "n": spec.n,
                       "L": spec.half_width, "tol": tol, "seed": args.seed,
                       "deterministic": args.deterministic, "threads": args.threads})

    from .beltrami import principal_solution

    pm = principal_solution(mu, tol=tol)
    pm.save(out)
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(f"residual = {pm.residual!r}\n")
        fh.write(f"iterations = {pm.iterations}\n")
        for key, val in sorted(pm.checks.items()):
            fh.write(f"{key} = {val!r}\n")
    print(f"solved: residual={pm.residual:.3e} iterations={pm.iterations} -> {out}")
    return 0


def _parse_generations(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad generations list {text!r}") from exc


def cmd_lemma1(args) -> int:
    cp = _load_ini(args.config)
    spec = _grid_from(args, cp)
    K = args.K if args.K is not None else cp.getfloat("lemma1", "K", fallback=2.0)
    lam = args.lam if args.lam is not None else cp.getfloat("lemma1", "lambda", fallback=0.34)
    gens = _parse_generations(
        args.generations if args.generations is not None
        else cp.get("lemma1", "generations", fallback="1,2,3,4"))
    p_text = args.p_list or cp.get("lemma1", "p_list", fallback="1.5")
    window_r = cp.getfloat("lemma1", "window_radius", fallback=1.5)
    tol = args.tol if args.tol is not None else cp.getfloat("lemma1", "tol", fallback=1e-8)
    if K < 1:
        raise ConfigError("K must be >= 1")
    try:
        p_list = [float(t) for t in p_text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad p list {p_text!r}") from exc

    out = _out_dir(args, "lemma1")
    _echo_config(out, {"command": "lemma1", "K": K, "lambda": lam,
                       "generations": ",".join(map(str, gens)), "p_list": p_text,
                       "window_radius": window_r, "n": spec.n, "L": spec.half_width,
                       "tol": tol, "seed": args.seed,
                       "deterministic": args.deterministic, "threads": args.threads})

    from .analysis import lemma1_suite
    from .geometry import DiskCover

    mu = radial_stretch(K, spec)
    if gens:
        cantor = CantorSet(lam, max(gens))
        covers = [cantor_cover(cantor, g) for g in gens]
    else:
        covers = [DiskCover([])]  # trivial truncation: a single row of zeros
    report = lemma1_suite(mu, covers, p_list, Region.disk(spec, 0.0, window_r), tol=tol)
    csv_path = os.path.join(out, "report.csv")
    report.to_csv(csv_path)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"lemma1 suite: {len(report.rows)} rows -> {csv_path}")
    return 0


def _print_indices_table(pairs) -> None:
    print("alpha     K         d=2(1+aK)/(K+1)  KM=(1/K)(1+a/K)  KZ=a(n-1)")
    for alpha, K in pairs:
        r = reference_indices(alpha, K)
        print(f"{alpha:<9g} {K:<9g} {r.ours:<16.10g} {r.koskela_martio:<16.10g} "
              f"{r.kilpelainen_zhong:<.10g}")


def _cells_from_config(cp) -> list[CellConfig]:
    cells = []
    for section in cp.sections():
        if not section.startswith("cell"):
            continue
        cells.append(CellConfig(
            alpha=cp.getfloat(section, "alpha"),
            K=cp.getfloat(section, "K"),
            lam=cp.getfloat(section, "lambda", fallback=0.25),
            generations=_parse_generations(cp.get(section, "generations",
                                                  fallback="1,2,3")),
            generator=cp.get(section, "generator", fallback="radial_stretch"),
        ))
    return cells or default_demo_cells()


def cmd_sweep(args) -> int:
    if args.indices:
        try:
            kv = dict(item.split("=", 1) for item in args.indices)
            alpha, K = float(kv["alpha"]), float(kv["K"])
            critical_index(alpha, K)
        except (ValueError, KeyError, ArithmeticError) as exc:
            raise ConfigError(f"bad --indices arguments {args.indices}: {exc}") from exc
        _print_indices_table([(alpha, K)])
        return 0

    cp = _load_ini(args.config)
    spec = _grid_from(args, cp)
    try:
        cells = _cells_from_config(cp)
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"bad sweep cells: {exc}") from exc
    tol = args.tol if args.tol is not None else cp.getfloat("sweep", "tol", fallback=1e-8)
    svg = args.svg or cp.getboolean("sweep", "svg", fallback=False)
    threads = 1 if args.deterministic else max(1, args.threads)

    out = _out_dir(args, "sweep")
    _echo_config(out, {"command": "sweep", "n": spec.n, "L": spec.half_width,
                       "tol": tol, "svg": svg, "seed": args.seed,
                       "deterministic": args.deterministic, "threads": threads,
                       "cells": [(c.alpha, c.K, c.lam, c.generations, c.generator)
                                 for c in cells]})

    _print_indices_table([(c.alpha, c.K) for c in cells])
    report = removability_sweep(cells, spec, solver_tol=tol, threads=threads)
    csv_path = os.path.join(out, "report.csv")
    report.to_csv(csv_path)
    for err in report.errors:
        print(f"warning: {err}", file=sys.stderr)
    if svg:
        for i, ledger in report.ledgers.items():
            if not ledger.rows:
                continue
            gens = list(range(1, len(ledger.rows) + 1))
            polyline_plot(
                os.path.join(out, f"bounds_cell{i}.svg"),
                {"bound I": (gens, ledger.column("bound_I")),
                 "bound II": (gens, ledger.column("bound_II")),
                 "eps gauge sum": (gens, ledger.column("eps"))},
                title=f"cell {i}: bound decay along generations",
                xlabel="generation", ylabel="bound value", logy=True)
    print(f"sweep: {len(report.rows)} rows -> {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qclab",
        description="Quasiconformal analysis laboratory: Beltrami solves, "
                    "convergence suites, removability sweeps.")
    parser.add_argument("--version", action="version", version=f"qclab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--n", type=int, default=None, help="grid points per side")
        p.add_argument("--L", type=float, default=None, help="grid half-width")
        p.add_argument("--threads", type=int, default=1, help="worker cap")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None,
                       help="output dir (default $QCLAB_OUT/<command>)")
        p.add_argument("--deterministic", action="store_true",
                       help="force single-threaded ordered reductions")
        p.add_argument("--tol", type=float, default=None, help="solver tolerance")

    p_solve = sub.add_parser("solve", help="solve one Beltrami equation")
    common(p_solve)
    p_solve.add_argument("--mu", default=None,
                         help="zero | constant-disk:K | radial-stretch:K | checkerboard:K,CELLS")
    p_solve.set_defaults(func=cmd_solve)

    p_lem = sub.add_parser("lemma1", help="truncation convergence suite")
    common(p_lem)
    p_lem.add_argument("--K", type=float, default=None)
    p_lem.add_argument("--lam", type=float, default=None, help="Cantor ratio")
    p_lem.add_argument("--generations", default=None, help="comma list, e.g. 1,2,3,4")
    p_lem.add_argument("--p-list", dest="p_list", default=None)
    p_lem.set_defaults(func=cmd_lemma1)

    p_sweep = sub.add_parser("sweep", help="removability experiment sweep")
    common(p_sweep)
    p_sweep.add_argument("--svg", action="store_true", help="write bound-decay plots")
    p_sweep.add_argument("--indices", nargs="*", default=None,
                         help="table-only mode: alpha=A K=B")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GridError, ValueError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    except _NUMERIC_ERRORS as exc:
        return _fail(3, type(exc).__name__, str(exc))
    except QclabError as exc:
        return _fail(3, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
