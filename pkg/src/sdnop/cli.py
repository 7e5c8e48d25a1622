"""Command-line front end.

Subcommands: ``solve`` (run the augmented Lagrangian method on a JSON
instance), ``check`` (first- and second-order diagnostics at a bundled
reference point), ``rate-sweep`` (contraction ratios over a penalty
grid plus a log-log fit), ``generate`` (synthetic instances with an
exact reference point).  Results land in the output directory as JSON
reports and CSV tables; with a fixed seed every artifact is
byte-identical across reruns.

Exit codes: 0 success, 1 input error, 2 outer-iteration cap, 3 inner
solve failure, 4 every sweep grid point diverged.  The ``SDNOP_LOG``
environment variable (error, info, debug) sets log verbosity.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from .diagnostics import (
    nondegeneracy_check,
    rate_constants,
    rate_sweep,
    strong_sosc_check,
)
from .errors import (
    InnerSolveError,
    InvalidInput,
    MaxIterations,
    SDNOPError,
)
from .generator import generate_instance
from .problem import (
    MultiplierTriple,
    kkt_residual,
    load_instance,
    save_instance,
)
from .solver import ALMConfig, InnerConfig, alm_solve

log = logging.getLogger("sdnop")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_OUTER = 2
EXIT_INNER = 3
EXIT_SWEEP = 4

_TRACE_COLUMNS = (
    "outer", "penalty", "residual", "stationarity", "subgradient",
    "equality", "cone", "dual", "complementarity", "inner_iterations",
    "dist_x", "dist_y",
)
_RATE_COLUMNS = (
    "c", "iterations", "median_ratio", "predicted_ratio_proxy", "converged",
)


# ----------------------------------------------------------------------------
# serialization helpers
# ----------------------------------------------------------------------------

def _cell(value):
    """One CSV cell: 17 significant digits for floats, stable bools."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(obj):
    """Recursively convert to strict JSON: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True,
                  allow_nan=False)
        fh.write("\n")


def _trace_rows(trace):
    for k in range(len(trace.residuals)):
        res = trace.residuals[k]
        yield (k + 1, trace.penalties[k], res.total, res.stationarity,
               res.subgradient, res.equality, res.cone, res.dual,
               res.complementarity, trace.inner_iterations[k],
               trace.dist_x[k], trace.dist_y[k])


def _log_trace(trace):
    for row in _trace_rows(trace):
        log.info("outer %d: c=%g residual=%.3e inner_iterations=%d",
                 row[0], row[1], row[2], row[9])
        log.debug("outer %d components: %s", row[0],
                  ", ".join("%s=%.3e" % (name, val) for name, val
                            in zip(_TRACE_COLUMNS[3:9], row[3:9])))


def _solution_dict(point, converged, outer_iterations, final_penalty):
    res = point.residual
    return {
        "x": point.x,
        "Y": point.multipliers.Y,
        "mu": point.multipliers.mu,
        "Gamma": point.multipliers.Gamma,
        "residual": dict(res.as_dict(), total=res.total),
        "converged": converged,
        "outer_iterations": outer_iterations,
        "final_penalty": final_penalty,
    }


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

def _build_config(args):
    """ALMConfig from the optional --config JSON plus flag overrides."""
    data = {}
    if args.config is not None:
        with open(args.config, "r") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInput(f"config is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise InvalidInput("config must be a JSON object")
    inner_data = data.pop("inner", {})
    if not isinstance(inner_data, dict):
        raise InvalidInput("config key 'inner' must be a JSON object")
    if args.tol is not None:
        data["outer_tol"] = args.tol
    if getattr(args, "max_outer", None) is not None:
        data["max_outer"] = args.max_outer
    if getattr(args, "c0", None) is not None:
        data["c0"] = args.c0
    try:
        return ALMConfig(inner=InnerConfig(**inner_data), **data)
    except TypeError as exc:
        raise InvalidInput(f"unknown config key: {exc}")


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def cmd_solve(args):
    problem = load_instance(args.instance)
    config = _build_config(args)
    out = _out_dir(args)
    x0 = np.zeros(problem.n)
    y0 = MultiplierTriple.zeros(problem)
    try:
        point, trace = alm_solve(problem, y0, config, x0)
    except MaxIterations as exc:
        log.error("%s", exc)
        _log_trace(exc.trace)
        _write_csv(os.path.join(out, "trace.csv"), _TRACE_COLUMNS,
                   _trace_rows(exc.trace))
        _write_json(os.path.join(out, "solution.json"),
                    _solution_dict(exc.point, False,
                                   len(exc.trace.residuals),
                                   exc.trace.penalties[-1]))
        return EXIT_MAX_OUTER
    except InnerSolveError as exc:
        log.error("inner solve failed: %s", exc)
        if exc.trace is not None:
            _log_trace(exc.trace)
            _write_csv(os.path.join(out, "trace.csv"), _TRACE_COLUMNS,
                       _trace_rows(exc.trace))
        return EXIT_INNER
    _log_trace(trace)
    _write_csv(os.path.join(out, "trace.csv"), _TRACE_COLUMNS,
               _trace_rows(trace))
    penalty = trace.penalties[-1] if trace.penalties else config.c0
    _write_json(os.path.join(out, "solution.json"),
                _solution_dict(point, True, len(trace.residuals), penalty))
    print("converged: residual %.3e after %d outer iterations"
          % (point.residual.total, len(trace.residuals)))
    return EXIT_OK


def cmd_check(args):
    problem = load_instance(args.instance)
    if problem.reference is None:
        raise InvalidInput("instance has no reference_kkt block to check")
    out = _out_dir(args)
    ref = problem.reference
    y = ref.multipliers
    res = kkt_residual(problem, ref.x, y.Y, y.mu, y.Gamma)
    nondeg = nondegeneracy_check(problem, ref.x, y)
    sosc = strong_sosc_check(problem, ref.x, y)
    try:
        constants = rate_constants(problem, ref.x, y).as_dict()
    except SDNOPError as exc:
        log.info("constants not computable: %s", exc)
        constants = None
    report = {
        "residual": dict(res.as_dict(), total=res.total),
        "nondegeneracy": nondeg.as_dict(),
        "second_order": sosc.as_dict(),
        "constants": constants,
    }
    _write_json(os.path.join(out, "report.json"), report)
    print("nondegeneracy %s (sigma_min %.3e), second order %s (min %.3e)"
          % (nondeg.holds, nondeg.sigma_min, sosc.holds, sosc.min_value))
    return EXIT_OK


def cmd_rate_sweep(args):
    problem = load_instance(args.instance)
    if problem.reference is None:
        raise InvalidInput("rate sweep needs an instance with reference_kkt")
    grid = _parse_grid(args.grid)
    out = _out_dir(args)
    fit = rate_sweep(problem, problem.reference, grid, delta=args.delta,
                     seed=args.seed)
    rows = [
        (fit.penalties[j], fit.iterations[j], fit.ratios[j],
         fit.predicted[j], fit.converged[j])
        for j in range(len(fit.penalties))
    ]
    _write_csv(os.path.join(out, "rate.csv"), _RATE_COLUMNS, rows)
    fit_data = fit.as_dict()
    fit_data["flags"] = {
        "assumptions_unverified": fit.assumptions_unverified,
        "excluded": [c for c, ok in zip(fit.penalties, fit.converged)
                     if not ok],
    }
    _write_json(os.path.join(out, "fit.json"), fit_data)
    if not any(fit.converged):
        log.error("every grid point diverged")
        return EXIT_SWEEP
    if fit.slope is not None:
        print("slope %.4f, r_squared %.4f over %d grid points"
              % (fit.slope, fit.r_squared, len(grid)))
    else:
        print("single usable grid point, ratio %.3e" % fit.ratios[0])
    return EXIT_OK


def cmd_generate(args):
    out = _out_dir(args)
    problem = generate_instance(args.n, args.q, args.m, args.p,
                                profile=args.profile, seed=args.seed)
    path = os.path.join(out, "instance.json")
    save_instance(problem, path)
    print("wrote %s (profile %s, seed %d)" % (path, args.profile, args.seed))
    return EXIT_OK


def _parse_grid(text):
    try:
        grid = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InvalidInput(f"grid must be comma-separated numbers: {text!r}")
    if not grid:
        raise InvalidInput("grid is empty")
    return grid


# ----------------------------------------------------------------------------
# parser and entry point
# ----------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="JSON file of solver configuration overrides")
    common.add_argument("--out", default=".",
                        help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for every random draw")
    common.add_argument("--tol", type=float, default=None,
                        help="outer KKT residual tolerance")

    parser = argparse.ArgumentParser(
        prog="sdnop",
        description="Augmented Lagrangian solver for composite "
                    "semidefinite programs with a nuclear-norm term.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", parents=[common],
                        help="run the solver on a JSON instance")
    ps.add_argument("instance", help="path to the instance JSON")
    ps.add_argument("--max-outer", type=int, default=None,
                    help="outer iteration cap")
    ps.add_argument("--c0", type=float, default=None,
                    help="initial penalty parameter")
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("check", parents=[common],
                        help="verify the bundled reference point")
    pc.add_argument("instance", help="path to the instance JSON")
    pc.set_defaults(func=cmd_check)

    pr = sub.add_parser("rate-sweep", parents=[common],
                        help="contraction ratios over a penalty grid")
    pr.add_argument("instance", help="path to the instance JSON")
    pr.add_argument("--grid", default="10,100,1000,10000",
                    help="comma-separated penalty values")
    pr.add_argument("--delta", type=float, default=1e-2,
                    help="multiplier perturbation radius")
    pr.set_defaults(func=cmd_rate_sweep)

    pg = sub.add_parser("generate", parents=[common],
                        help="synthesize an instance with an exact "
                             "reference point")
    pg.add_argument("--n", type=int, required=True,
                    help="number of decision variables")
    pg.add_argument("--q", type=int, required=True,
                    help="order of the nuclear-norm matrix map")
    pg.add_argument("--m", type=int, required=True,
                    help="number of equality constraints")
    pg.add_argument("--p", type=int, required=True,
                    help="order of the semidefinite constraint")
    pg.add_argument("--profile", default="nondegen",
                    choices=["nondegen", "degen", "saddle"])
    pg.set_defaults(func=cmd_generate)
    return parser


def _setup_logging():
    level_name = os.environ.get("SDNOP_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    if level_name not in levels:
        print(f"SDNOP_LOG must be one of {sorted(levels)}, "
              f"got {level_name!r}", file=sys.stderr)
        return logging.ERROR
    return levels[level_name]


def main(argv=None):
    logging.basicConfig(level=_setup_logging(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
