"""Command-line harness.

Exit codes: 0 success, 1 I/O failure, 2 solver non-convergence,
3 theorem-check failure, 4 configuration or input error.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from hypcmc import closed_form as cf
from hypcmc.analysis import FAIL, verify_all
from hypcmc.config import ConfigError, ExperimentConfig, load_config
from hypcmc.fieldio import (FieldFormatError, dumps, reports_document, write_field_csv,
                            write_json, write_table)
from hypcmc.geometry import DomainError, MeshBudgetError, curvature_extrema
from hypcmc.solver import NonConvergenceError, solve_dirichlet
from hypcmc.svg import render_contours, write_svg

EXIT_OK, EXIT_IO, EXIT_NONCONVERGENCE, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2, 3, 4

SWEEP_COLUMNS = ("H", "R", "h", "converged", "u_M", "max_grad", "window_R2", "grad_bound",
                 "lemma22_bound", "um_lower", "um_upper", "grad_margin", "um_lower_margin",
                 "um_upper_margin", "iterations", "message")

log = logging.getLogger("hypcmc")


def _case_info(cfg: ExperimentConfig, d, H, h) -> dict:
    return {"domain": {"kind": d.kind, "params": dict(d.params), "center": list(d.center)},
            "H": H, "a": cfg.a, "h": h}


def _write_solution(cfg: ExperimentConfig, s, info: dict) -> None:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    diag = dict(info, solver=s.diagnostics.as_dict(), n_vertices=s.mesh.n_vertices,
                n_triangles=len(s.mesh.triangles), u_M=s.u_M,
                max_grad=float(s.grad_norm.max()))
    write_json(out / "diagnostics.json", diag)
    if "csv" in cfg.formats or "svg" in cfg.formats:
        write_field_csv(out / "solution.csv", s)
    if "svg" in cfg.formats:
        write_svg(out / "solution.svg", render_contours(out / "solution.csv"))


def _solve(cfg: ExperimentConfig):
    d, H, h = cfg.single()
    info = _case_info(cfg, d, H, h)
    try:
        s = solve_dirichlet(d, H, cfg.a, h, cfg.solver)
    except NonConvergenceError as exc:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        write_json(cfg.out_dir / "diagnostics.json",
                   dict(info, solver=exc.field.diagnostics.as_dict() if exc.field else {},
                        error=str(exc)))
        raise
    _write_solution(cfg, s, info)
    return d, s


def run_solve(cfg: ExperimentConfig) -> int:
    _, s = _solve(cfg)
    log.info("converged: u_M=%.6g after %d Newton iterations", s.u_M, s.diagnostics.iterations)
    return EXIT_OK


def run_verify(cfg: ExperimentConfig) -> int:
    d, s = _solve(cfg)
    reports = verify_all(s, d, cfg.checks, cfg.slack)
    write_json(cfg.out_dir / "report.json", reports_document(reports))
    for r in reports:
        print(f"{r.theorem_id:22s} {r.status:15s} {r.details}")
    return EXIT_CHECK if any(r.status == FAIL for r in reports) else EXIT_OK


def sweep_row(cfg: ExperimentConfig, H: float, R: float | None, h: float) -> dict:
    """One sweep entry; failures are recorded in the row rather than raised."""
    d = cfg.domain(R)
    Rc = d.circumcircle[1]
    row = dict.fromkeys(SWEEP_COLUMNS, math.nan)
    row.update(H=H, R=R if R is not None else Rc, h=h, converged=0, iterations=0, message="")
    kappa0 = curvature_extrema(d)[1]
    try:
        s = solve_dirichlet(d, H, cfg.a, h, cfg.solver)
    except (NonConvergenceError, MeshBudgetError) as exc:
        row["message"] = str(exc)
    else:
        row.update(converged=1, u_M=s.u_M, max_grad=float(s.grad_norm.max()),
                   iterations=s.diagnostics.iterations)
    if H < 1:
        b = cf.bound_set(H, row["u_M"], cfg.a, kappa0, Rc)
        row.update(window_R2=b.window_R2, grad_bound=b.grad_bound, lemma22_bound=b.lemma22_bound,
                   um_lower=b.um_lower, um_upper=b.um_upper,
                   grad_margin=b.grad_bound - row["max_grad"],
                   um_lower_margin=row["u_M"] - b.um_lower,
                   um_upper_margin=b.um_upper - row["u_M"])
    return row


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> int:
    Rs = cfg.R if cfg.domain_kind == "disc" else (None,)
    for R in Rs:
        cfg.domain(R)  # reject bad domains before any work starts
    cases = list(itertools.product(cfg.H, Rs, cfg.h))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda c: sweep_row(cfg, *c), cases))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    table = [[r[k] if k == "message" else float(r[k]) for k in SWEEP_COLUMNS] for r in rows]
    if "csv" in cfg.formats:
        write_table(cfg.out_dir / "sweep.csv", SWEEP_COLUMNS, table)
    if "json" in cfg.formats:
        write_json(cfg.out_dir / "sweep.json", rows)
    failed = sum(1 for r in rows if not r["converged"])
    print(f"{len(rows) - failed} of {len(rows)} sweep entries converged")
    return EXIT_NONCONVERGENCE if failed else EXIT_OK


def run_plot(args) -> int:
    levels = args.levels
    if args.level_values:
        levels = [float(v) for v in args.level_values.split(",")]
    text = render_contours(args.field, levels, args.column)
    out = Path(args.out) if args.out else Path(args.field).with_suffix(".svg")
    if out.is_dir():
        out = out / (Path(args.field).stem + ".svg")
    write_svg(out, text)
    print(out)
    return EXIT_OK


def run_radial(args) -> int:
    H, R, a = args.H, args.R, args.a
    cap = cf.radial_cap(H, R, a)
    doc = {"cap": {"H": H, "R": R, "a": a, "m": cap.m, "c0": cap.c0, "w_M": cap.w_M,
                   "boundary_slope": cap.boundary_slope()}}
    if H < 1:
        b = cf.bound_set(H, cap.w_M, a, 1.0 / R, R)
        doc["bounds"] = {"C": b.C, "grad_bound": b.grad_bound, "lemma22_bound": b.lemma22_bound,
                         "um_lower": b.um_lower, "um_upper": b.um_upper,
                         "existence_window_R2": b.window_R2}
    sys.stdout.write(dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypcmc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    for name, helptext in (("solve", "solve one Dirichlet problem"),
                           ("verify", "solve and run the theorem checks"),
                           ("sweep", "solve over lists of H, R and h")):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("--config", required=True, help="TOML experiment file")
        q.add_argument("--out", help="output directory (overrides [output].dir)")
        q.add_argument("--format", help="comma-separated subset of csv,json,svg")
        q.add_argument("--h", type=float, help="mesh size (overrides [problem].h)")
        q.add_argument("--threads", type=int, default=1, help="parallel sweep entries")

    q = sub.add_parser("plot", help="render a field CSV as SVG contours")
    q.add_argument("field", help="CSV written by solve")
    q.add_argument("--column", default="u", help="column to contour (default u)")
    q.add_argument("--levels", type=int, default=10, help="number of equispaced levels")
    q.add_argument("--level-values", help="comma-separated explicit levels (overrides --levels)")
    q.add_argument("--out", help="SVG path or directory")

    q = sub.add_parser("radial", help="print the spherical cap and all bounds")
    q.add_argument("--H", type=float, required=True)
    q.add_argument("--R", type=float, required=True)
    q.add_argument("--a", type=float, default=1.0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            return run_plot(args)
        if args.command == "radial":
            return run_radial(args)
        cfg = load_config(args.config).with_overrides(args.h, args.out, args.format)
        if args.command == "solve":
            return run_solve(cfg)
        if args.command == "verify":
            return run_verify(cfg)
        return run_sweep(cfg, args.threads)
    except NonConvergenceError as exc:
        print(f"hypcmc: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except DomainError as exc:
        print(f"hypcmc: degenerate domain: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FieldFormatError, MeshBudgetError, cf.NoCapError, ValueError, KeyError) as exc:
        print(f"hypcmc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hypcmc: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
