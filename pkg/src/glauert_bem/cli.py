"""Command-line interface.

Usage::

    bem solve  --config run.cfg [--method usual|fixed|newton|bisect|all] [--jobs N] [--out path]
    bem scan   --config run.cfg [--jobs N] [--out path]
    bem design --config run.cfg [--jobs N] [--out path]
    bem sweep  --config run.cfg [--out path]
    bem check  --config run.cfg [--out path]

CSV output uses the shortest round-trip decimal representation of every
float, so identical inputs give byte-identical files.  Exit codes: 0 all
requested work converged, 1 some solve/element did not, 2 bad
configuration.  Set BEM_LOG=debug|info for verbosity.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .config import RunConfig, parse_config
from .design import (
    J_lambda,
    cp_sweep,
    optimize_element,
    simplified_optimum,
)
from .errors import BemError, BracketError, ConfigError, DesignEvaluationError
from .model import ElementGeometry
from .solvers import (
    METHODS,
    SolveOptions,
    check_appendix_conditions,
    check_existence,
    classify_root,
    scan_roots,
)

log = logging.getLogger("bem")

ROW_HEADER = "lambda,phi,alpha,a,a_prime,F,residual,iterations,method,J,root_category"
DESIGN_HEADER = "lambda,gamma,chord,phi_opt,J,mode,converged"
SWEEP_HEADER = "lambda,gamma,chord,phi,a,a_prime,F,residual,J,ok"

EXIT_OK, EXIT_INCOMPLETE, EXIT_CONFIG = 0, 1, 2


def _fmt(value) -> str:
    """Shortest round-trip text for a cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # plain float repr, also for numpy scalars
    return str(value)


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _map_ordered(fn, items, jobs):
    """Apply fn to items, possibly concurrently, preserving input order."""
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _element_design(cfg: RunConfig, lam: float):
    """(gamma, chord) for one element, per the configured design mode."""
    if cfg.design_mode == "fixed":
        return cfg.design_gamma, cfg.design_chord
    point = simplified_optimum(lam, cfg.polar, cfg.turbine)
    if cfg.design_mode == "simplified":
        return point.gamma, point.chord
    geom = ElementGeometry.from_turbine(cfg.turbine, lam, point.gamma, point.chord)
    result = optimize_element(geom, cfg.polar, cfg.correction, step=cfg.design_step,
                              tol=cfg.design_tol, max_steps=cfg.design_max_steps,
                              lambda_max=cfg.turbine.lambda_max)
    return result.gamma, result.chord


def _solve_opts(cfg: RunConfig, geom) -> SolveOptions:
    hi = cfg.bracket_hi if cfg.bracket_hi is not None else geom.theta
    return replace(cfg.solver, bracket=(cfg.bracket_lo, hi))


def _j_or_nan(cfg, geom, state):
    try:
        return J_lambda(geom, cfg.polar, cfg.correction, state)
    except (DesignEvaluationError, BemError):
        return math.nan


def cmd_solve(cfg: RunConfig, method: str, jobs: int, out_path) -> int:
    methods = list(METHODS) if method == "all" else [method]

    def run_one(lam):
        rows, ok = [], True
        try:
            gamma, chord = _element_design(cfg, float(lam))
            geom = ElementGeometry.from_turbine(cfg.turbine, float(lam), gamma, chord)
            opts = _solve_opts(cfg, geom)
        except BemError as exc:
            log.warning("lambda=%g: %s", lam, exc)
            return [f"{_fmt(float(lam))},nan,nan,nan,nan,nan,nan,0,design,nan,design_failed"], False
        for name in methods:
            try:
                report = METHODS[name](geom, cfg.polar, cfg.correction, opts)
            except BracketError:
                rows.append(f"{_fmt(float(lam))},nan,nan,nan,nan,nan,nan,0,"
                            f"{name},nan,wrong_initial_guess")
                ok = False
                continue
            except BemError as exc:
                log.warning("lambda=%g method=%s: %s", lam, name, exc)
                rows.append(f"{_fmt(float(lam))},nan,nan,nan,nan,nan,nan,0,"
                            f"{name},nan,solver_error")
                ok = False
                continue
            state = report.state
            if state is None:
                rows.append(f"{_fmt(float(lam))},{_fmt(report.phi_star)},nan,nan,nan,nan,nan,"
                            f"{report.iterations},{name},nan,not_converged")
                ok = False
                continue
            category = (classify_root(geom, cfg.polar, cfg.correction, state.phi, state)
                        if report.converged else "not_converged")
            ok = ok and report.converged
            j = _j_or_nan(cfg, geom, state)
            rows.append(",".join([
                _fmt(float(lam)), _fmt(state.phi), _fmt(state.phi - geom.gamma),
                _fmt(state.a), _fmt(state.a_prime), _fmt(state.tip_factor),
                _fmt(state.residual), str(report.iterations), name, _fmt(j), category,
            ]))
        return rows, ok

    results = _map_ordered(run_one, list(cfg.lambdas), jobs)
    lines = [ROW_HEADER]
    all_ok = True
    for rows, ok in results:
        lines.extend(rows)
        all_ok = all_ok and ok
    _emit(lines, out_path)
    return EXIT_OK if all_ok else EXIT_INCOMPLETE


def cmd_scan(cfg: RunConfig, jobs: int, out_path) -> int:
    def run_one(lam):
        try:
            gamma, chord = _element_design(cfg, float(lam))
            geom = ElementGeometry.from_turbine(cfg.turbine, float(lam), gamma, chord)
            roots = scan_roots(geom, cfg.polar, cfg.correction)
        except BemError as exc:
            log.warning("lambda=%g: %s", lam, exc)
            return []
        rows = []
        for rec in roots.records:
            state = rec.state
            j = _j_or_nan(cfg, geom, state)
            rows.append(",".join([
                _fmt(float(lam)), _fmt(state.phi), _fmt(state.phi - geom.gamma),
                _fmt(state.a), _fmt(state.a_prime), _fmt(state.tip_factor),
                _fmt(state.residual), "0", "scan", _fmt(j), rec.category,
            ]))
        return rows

    results = _map_ordered(run_one, list(cfg.lambdas), jobs)
    lines = [ROW_HEADER]
    for rows in results:
        lines.extend(rows)
    _emit(lines, out_path)
    return EXIT_OK


def cmd_design(cfg: RunConfig, jobs: int, out_path) -> int:
    corrected = cfg.design_mode == "corrected"

    def run_one(lam):
        try:
            point = simplified_optimum(float(lam), cfg.polar, cfg.turbine)
        except BemError as exc:
            log.warning("lambda=%g: %s", lam, exc)
            return f"{_fmt(float(lam))},nan,nan,nan,nan,{cfg.design_mode},false", False
        if not corrected:
            return ",".join([
                _fmt(float(lam)), _fmt(point.gamma), _fmt(point.chord),
                _fmt(point.phi_opt), _fmt(point.J), "simplified", "true",
            ]), True
        try:
            geom = ElementGeometry.from_turbine(cfg.turbine, float(lam),
                                                point.gamma, point.chord)
            result = optimize_element(geom, cfg.polar, cfg.correction,
                                      step=cfg.design_step, tol=cfg.design_tol,
                                      max_steps=cfg.design_max_steps,
                                      lambda_max=cfg.turbine.lambda_max)
        except BemError as exc:
            log.warning("lambda=%g: %s", lam, exc)
            return f"{_fmt(float(lam))},nan,nan,nan,nan,corrected,false", False
        return ",".join([
            _fmt(float(lam)), _fmt(result.gamma), _fmt(result.chord),
            _fmt(result.phi_opt), _fmt(result.J), "corrected",
            _fmt(result.converged),
        ]), result.converged

    results = _map_ordered(run_one, list(cfg.lambdas), jobs)
    lines = [DESIGN_HEADER] + [row for row, _ in results]
    _emit(lines, out_path)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_INCOMPLETE


def cmd_sweep(cfg: RunConfig, out_path) -> int:
    def design(lam):
        return _element_design(cfg, lam)

    result = cp_sweep(cfg.turbine, cfg.polar, cfg.correction, design,
                      grid_n=cfg.sweep_grid_n)
    lines = [SWEEP_HEADER]
    for elem in result.elements:
        if elem.state is None:
            lines.append(",".join([
                _fmt(elem.lam), _fmt(elem.gamma), _fmt(elem.chord),
                "nan", "nan", "nan", "nan", "nan", _fmt(elem.J), "false",
            ]))
            continue
        st = elem.state
        lines.append(",".join([
            _fmt(elem.lam), _fmt(elem.gamma), _fmt(elem.chord), _fmt(st.phi),
            _fmt(st.a), _fmt(st.a_prime), _fmt(st.tip_factor), _fmt(st.residual),
            _fmt(elem.J), "true",
        ]))
    summary = [f"Cp={_fmt(result.cp)}"]
    if cfg.sweep_refine:
        fine = cp_sweep(cfg.turbine, cfg.polar, cfg.correction, design,
                        grid_n=2 * cfg.sweep_grid_n)
        summary.append(f"Cp_refined={_fmt(fine.cp)}")
        summary.append(f"Cp_refinement_delta={_fmt(abs(fine.cp - result.cp))}")
    if result.failures:
        summary.append(f"warning: {result.failures} element(s) failed; "
                       "Cp computed with J=0 contributions")
    _emit(lines, out_path)
    for line in summary:
        sys.stdout.write(line + "\n")
    return EXIT_INCOMPLETE if result.failures else EXIT_OK


def cmd_check(cfg: RunConfig, out_path) -> int:
    lines = []
    for lam in cfg.lambdas:
        lam = float(lam)
        try:
            gamma, chord = _element_design(cfg, lam)
            geom = ElementGeometry.from_turbine(cfg.turbine, lam, gamma, chord)
        except BemError as exc:
            lines.append(f"lambda={_fmt(lam)} design FAIL ({exc})")
            continue
        ex = check_existence(geom, cfg.polar, cfg.correction)
        lines.append(
            f"lambda={_fmt(lam)} interval {'PASS' if ex.interval_ok else 'FAIL'} "
            f"(margin={_fmt(ex.interval_margin)}) "
            f"existence_simplified {'PASS' if ex.simplified_ok else 'FAIL'} "
            f"(margin={_fmt(ex.simplified_margin)}) "
            f"existence_corrected {'PASS' if ex.corrected_ok else 'FAIL'} "
            f"(margin={_fmt(ex.corrected_margin)}) "
            f"upper_is_theta={_fmt(ex.upper_is_theta)}")
        ap = check_appendix_conditions(geom, cfg.polar)
        if not ap.applicable:
            lines.append(f"lambda={_fmt(lam)} appendix N/A ({ap.message})")
        else:
            lines.append(
                f"lambda={_fmt(lam)} appendix "
                f"stability {'PASS' if ap.stability_ok else 'FAIL'} "
                f"(margin={_fmt(ap.stability_margin)}) "
                f"contraction1 {'PASS' if ap.contraction1_ok else 'FAIL'} "
                f"(value={_fmt(ap.contraction1_value)}) "
                f"contraction2 {'PASS' if ap.contraction2_ok else 'FAIL'} "
                f"(value={_fmt(ap.contraction2_value)}) "
                f"guaranteed={_fmt(ap.guaranteed)}")
    _emit(lines, out_path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="bem",
                                     description="Blade element momentum solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [("solve", "solve the flow angle per lambda"),
                       ("scan", "find and classify every root per lambda"),
                       ("design", "twist/chord design per lambda"),
                       ("sweep", "solve a design over a lambda grid and report Cp"),
                       ("check", "existence and convergence condition report")]:
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--config", required=True, help="path to key=value config")
        cmd.add_argument("--out", default=None, help="output file (default stdout)")
        if name == "solve":
            cmd.add_argument("--method", default="all",
                             choices=sorted(METHODS) + ["all"])
        if name in ("solve", "scan", "design"):
            cmd.add_argument("--jobs", type=int, default=1,
                             help="concurrent lambda evaluations")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("BEM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG

    try:
        if args.command == "solve":
            return cmd_solve(cfg, args.method, args.jobs, args.out)
        if args.command == "scan":
            return cmd_scan(cfg, args.jobs, args.out)
        if args.command == "design":
            return cmd_design(cfg, args.jobs, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out)
        return cmd_check(cfg, args.out)
    except BemError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INCOMPLETE


if __name__ == "__main__":
    sys.exit(main())
