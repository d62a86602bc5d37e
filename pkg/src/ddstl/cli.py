"""Command-line front end.

Exit codes: 0 success, 1 infeasible or violated, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import re
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .lti import (BUILTIN_MODELS, builtin_model, generate_data, read_series_csv,
                  read_trajectory_csv, write_series_csv, write_trajectory_csv)
from .milp import CostSpec, EncodingParams, export_lp
from .numerics import DimensionError
from .report import build_report, emit_plot_data, write_report
from .scenarios import SCENARIOS, load_scenario, scenario_spec
from .solver import SolverParams
from .stl import StlSyntaxError, parse
from .synthesis import (BigMViolation, InconsistentInitialization, SynthesisConfig, align_initialization,
                        build_problem, synthesize, verify_closed_loop)

log = logging.getLogger("ddstl")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
COST_NAMES = {"u-norm": "input_norm", "y-norm": "output_norm", "mixed": "mixed"}
CONFIG_KEYS = {
    "milp.big_m": ("encoding", "big_m", float),
    "milp.eps": ("encoding", "eps", float),
    "solver.feastol": ("solver", "feastol", float),
    "solver.inttol": ("solver", "inttol", float),
    "solver.node_limit": ("solver", "node_limit", int),
    "solver.time_limit": ("solver", "time_limit", float),
    "solver.iteration_limit": ("solver", "iteration_limit", int),
}


class UsageError(Exception):
    pass


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def _boxes(text: str) -> list[tuple[float, float]]:
    return [_pair(part) for part in text.split(";")]


def read_config(path) -> dict:
    """``key = value`` lines (``#`` comments) into encoding/solver overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[config]\n" + Path(path).read_text())
    out: dict = {"encoding": {}, "solver": {}}
    for key, raw in parser["config"].items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}; known keys: {', '.join(CONFIG_KEYS)}")
        group, field, conv = CONFIG_KEYS[key]
        try:
            out[group][field] = conv(raw)
        except ValueError:
            raise UsageError(f"{path}: {key} = {raw!r} is not a valid {conv.__name__}") from None
    return out


def _params(args, base_eps: Optional[float] = None) -> tuple[Optional[EncodingParams], Optional[SolverParams]]:
    conf = read_config(args.config) if getattr(args, "config", None) else {"encoding": {}, "solver": {}}
    enc = conf["encoding"]
    if base_eps is not None:
        enc.setdefault("eps", base_eps)
    try:
        return (EncodingParams(**enc) if enc else None, SolverParams(**conf["solver"]) if conf["solver"] else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- generate --------------------------------------------------------------

def cmd_generate(args) -> int:
    model = builtin_model(args.system)
    dbox = args.dbox
    if model.n_d and dbox is None:
        dbox = scenario_spec("hvac").disturbance_box
    if dbox is not None and len(dbox) == 1:
        dbox = dbox * max(model.n_d, 1)
    traj = generate_data(model, args.steps, args.box, args.seed, disturbance_box=dbox if model.n_d else None)
    write_trajectory_csv(traj, args.out)
    log.info("wrote %d samples to %s", traj.length, args.out)
    return EXIT_OK


# -- synthesize / export-lp --------------------------------------------------

def _load_problem_inputs(args):
    data = read_trajectory_csv(args.data)
    w_ini = read_trajectory_csv(args.init)
    spec_text = Path(args.spec).read_text()
    schedules, d_future = None, None
    if args.schedule:
        sched = read_series_csv(args.schedule)
        dcols = sorted((k for k in sched if k.startswith("d") and k[1:].isdigit()), key=lambda k: int(k[1:]))
        if dcols:
            d_future = np.column_stack([sched[k] for k in dcols])
        schedules = {k: v for k, v in sched.items() if k != "t" and k not in dcols}
    if data.n_d and d_future is None:
        raise UsageError("the data has disturbance channels; pass their future values with --schedule")
    phi = parse(spec_text, n_y=data.n_y, schedules=schedules)
    if w_ini.length != args.tini:
        raise UsageError(f"--tini {args.tini} but {args.init} holds {w_ini.length} samples")
    enc, sol = _params(args)
    cfg = SynthesisConfig(t_ini=args.tini, n_x_bound=args.nx_bound,
                          cost=CostSpec(COST_NAMES[args.cost], args.q, args.r), box=args.box,
                          encoding=enc or EncodingParams(), solver=sol or SolverParams(), L=args.L,
                          dictionary=args.dictionary)
    w_ini, moved = align_initialization(data, w_ini, phi, cfg, args.project_tol)
    if moved:
        log.warning("initialization projected onto the data span (moved by %.3e)", moved)
    return data, w_ini, phi, spec_text.strip(), cfg, schedules, d_future, moved


def cmd_export_lp(args) -> int:
    data, w_ini, phi, _, cfg, schedules, d_future, _ = _load_problem_inputs(args)
    problem, _, _ = build_problem(data, w_ini, phi, cfg, d_future, schedules)
    export_lp(problem, args.out)
    log.info("wrote LP with %d variables and %d constraints to %s", len(problem.variables),
             len(problem.constraints), args.out)
    return EXIT_OK


def _finish_run(*, command, out_dir: Path, result, cfg, phi, spec_text, model=None, w_ini=None, schedules=None,
                d_future=None, scenario=None, system=None, seed=None, projection_distance=None,
                celsius=False) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    verdict, t_fail, err, y_true = "NotVerified", None, None, None
    if not result.feasible:
        verdict = "Infeasible" if result.status.value == "infeasible" else "SolverLimit"
    else:
        n_u = result.u_opt.shape[1]
        write_series_csv(out_dir / "u_opt.csv", {f"u{i + 1}": result.u_opt[:, i] for i in range(n_u)})
        write_series_csv(out_dir / "y_pred.csv",
                         {f"y{i + 1}": result.y_pred[:, i] for i in range(result.y_pred.shape[1])})
        files.update(u_opt="u_opt.csv", y_pred="y_pred.csv")
        if model is not None:
            v = verify_closed_loop(model, w_ini, result.u_opt, phi, d_future, schedules)
            y_true = v.y
            verdict = "Satisfied" if v else "Violated"
            t_fail = None if v else v.t_fail
            err = float(np.max(np.abs(v.y - result.y_pred)))
            write_series_csv(out_dir / "y_closed_loop.csv", {f"y{i + 1}": v.y[:, i] for i in range(v.y.shape[1])})
            files["y_closed_loop"] = "y_closed_loop.csv"
        emit_plot_data(out_dir / "plot.csv", result.u_opt, result.y_pred, y_true, phi, schedules, celsius)
        files["plot"] = "plot.csv"
    if (out_dir / "init.csv").exists():
        files["init"] = "init.csv"
    report = build_report(command=command, spec_text=spec_text, result=result, verdict=verdict, cfg=cfg,
                          scenario=scenario, system=system, seed=seed, t_fail=t_fail, prediction_error=err,
                          projection_distance=projection_distance, files=files)
    write_report(out_dir / "report.json", report)
    log.info("status %s, verdict %s, objective %s; results in %s", result.status.value, verdict,
             report["objective"], out_dir)
    return EXIT_OK if verdict in ("Satisfied", "NotVerified") else EXIT_FAIL


def cmd_synthesize(args) -> int:
    data, w_ini, phi, spec_text, cfg, schedules, d_future, moved = _load_problem_inputs(args)
    model = builtin_model(args.system) if args.system else None
    result = synthesize(data, w_ini, phi, cfg, d_future, schedules)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # the initialization actually used, so ``verify`` can replay the run exactly
    write_trajectory_csv(w_ini, out_dir / "init.csv", t0=-w_ini.length)
    if args.export_lp and result.problem is not None:
        export_lp(result.problem, args.export_lp)
    return _finish_run(command="synthesize", out_dir=out_dir, result=result, cfg=cfg, phi=phi,
                       spec_text=spec_text, model=model, w_ini=w_ini, schedules=schedules, d_future=d_future,
                       system=args.system, projection_distance=moved, celsius=args.system == "building")


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    model = builtin_model(args.system)
    w_ini = read_trajectory_csv(args.init)
    u = read_series_csv(args.inputs)
    ucols = sorted((k for k in u if k.startswith("u") and k[1:].isdigit()), key=lambda k: int(k[1:]))
    if len(ucols) != model.n_u:
        raise UsageError(f"{args.inputs}: expected {model.n_u} input columns, found {len(ucols)}")
    u_opt = np.column_stack([u[k] for k in ucols])
    schedules, d_future = None, None
    if args.schedule:
        sched = read_series_csv(args.schedule)
        dcols = [f"d{i + 1}" for i in range(model.n_d)]
        if model.n_d:
            d_future = np.column_stack([sched[k] for k in dcols])
        schedules = {k: v for k, v in sched.items() if k != "t" and k not in dcols}
    phi = parse(Path(args.spec).read_text(), n_y=model.n_y, schedules=schedules)
    v = verify_closed_loop(model, w_ini, u_opt, phi, d_future, schedules, tol=args.init_tol)
    if args.out:
        write_series_csv(args.out, {f"y{i + 1}": v.y[:, i] for i in range(v.y.shape[1])})
    if v:
        log.info("Satisfied")
        print("Satisfied")
        return EXIT_OK
    log.info("Violated; earliest failing step %s", v.t_fail)
    print(f"Violated t_fail={v.t_fail}")
    return EXIT_FAIL


# -- reproduce ---------------------------------------------------------------

def cmd_reproduce(args) -> int:
    spec = scenario_spec(args.scenario)
    enc, sol = _params(args, base_eps=spec.eps)
    sc = load_scenario(args.scenario, seed=args.seed, cost=COST_NAMES[args.cost], data_steps=args.steps,
                       encoding=enc, solver=sol)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(sc.data, out_dir / "data.csv")
    write_trajectory_csv(sc.w_ini, out_dir / "init.csv", t0=-sc.w_ini.length)
    log.info("%s: %d data samples; initialization moved by %.2e onto the data span", args.scenario,
             sc.data.length, sc.projection_distance)
    t0 = time.perf_counter()
    result = synthesize(sc.data, sc.w_ini, sc.phi, sc.config, sc.d_future, sc.schedules)
    pe = result.pe_certificate
    if pe is not None:
        log.info("excitation of order %d: %s", pe.order, "yes" if pe else f"no ({pe.reason})")
    log.info("solved in %.2f s", time.perf_counter() - t0)
    return _finish_run(command="reproduce", out_dir=out_dir, result=result, cfg=sc.config, phi=sc.phi,
                       spec_text=sc.spec.spec, model=sc.model, w_ini=sc.w_ini, schedules=sc.schedules,
                       d_future=sc.d_future, scenario=args.scenario, system=sc.spec.system,
                       seed=sc.spec.seed, projection_distance=sc.projection_distance,
                       celsius=sc.spec.system == "building")


# -- parser ------------------------------------------------------------------

def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="trajectory CSV with the measured data")
    p.add_argument("--spec", required=True, help="file holding the STL formula")
    p.add_argument("--init", required=True, help="trajectory CSV with the initialization samples")
    p.add_argument("--tini", type=int, required=True, help="number of initialization samples")
    p.add_argument("--cost", choices=sorted(COST_NAMES), default="u-norm")
    p.add_argument("--q", type=float, nargs="+", help="output weights for --cost mixed")
    p.add_argument("--r", type=float, nargs="+", help="input weights for --cost mixed")
    p.add_argument("--box", type=_pair, help="input bounds lo,hi")
    p.add_argument("--L", type=int, help="horizon (default: the formula horizon)")
    p.add_argument("--nx-bound", type=int, help="state dimension bound for the excitation check")
    p.add_argument("--schedule", help="CSV with future disturbances d1.. and named schedules")
    p.add_argument("--dictionary", choices=["columns", "reduced"], default="columns")
    p.add_argument("--config", help="key = value file with milp.* and solver.* settings")
    p.add_argument("--project-tol", type=float, default=1e-3,
                   help="largest distance an initialization may be moved onto the data span (0 disables)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddstl", description="Data-driven control synthesis for STL specifications")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a built-in system under random inputs")
    g.add_argument("--system", choices=sorted(BUILTIN_MODELS), required=True)
    g.add_argument("--steps", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--box", type=_pair, required=True, help="input bounds lo,hi")
    g.add_argument("--dbox", type=_boxes, help="disturbance bounds lo,hi[;lo,hi...]")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("synthesize", help="solve for inputs from data, an initialization and a spec")
    _problem_args(s)
    s.add_argument("--system", choices=sorted(BUILTIN_MODELS), help="built-in model for closed-loop verification")
    s.add_argument("--export-lp", help="also write the MILP in LP format")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synthesize)

    v = sub.add_parser("verify", help="apply inputs to a built-in model and monitor a spec")
    v.add_argument("--system", choices=sorted(BUILTIN_MODELS), required=True)
    v.add_argument("--init", required=True)
    v.add_argument("--inputs", required=True, help="CSV with columns t,u1..")
    v.add_argument("--spec", required=True)
    v.add_argument("--schedule")
    v.add_argument("--out", help="write the simulated outputs here")
    v.add_argument("--init-tol", type=float, default=1e-3,
                   help="relative residual allowed when fitting the initial state to --init")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reproduce", help="run a bundled case study")
    r.add_argument("scenario", choices=SCENARIOS)
    r.add_argument("--cost", choices=sorted(COST_NAMES), default="u-norm")
    r.add_argument("--seed", type=int)
    r.add_argument("--steps", type=int, help="data length override")
    r.add_argument("--config")
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_reproduce)

    e = sub.add_parser("export-lp", help="write the synthesis MILP in LP format without solving")
    _problem_args(e)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export_lp)
    return parser


_NEGATIVE = re.compile(r"^-\d|^-\.\d")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--box -2,2`` into ``--box=-2,2`` so argparse does not read ``-2,2`` as a flag."""
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    if args.command in ("synthesize", "export-lp") and args.cost != "mixed" and (args.q or args.r):
        log.error("--q/--r only apply to --cost mixed")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, StlSyntaxError, DimensionError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except InconsistentInitialization as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    except BigMViolation as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        # malformed file contents land here
        log.error("%s", exc)
        return EXIT_IO if _looks_like_file_error(exc) else EXIT_USAGE


def _looks_like_file_error(exc: ValueError) -> bool:
    text = str(exc)
    return ".csv" in text or "could not convert" in text


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
