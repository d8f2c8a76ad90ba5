"""
Command-line driver for the two-step integrators.

    python client.py integrate --problem pendulum3 --method mk --nodes lobatto --k 5 --h 0.125 --t-end 10
    python client.py converge --problem fhp6 --method mk --k 7 --h-list 2^-4..2^-7 --t-end 250
    python client.py drift --problem kepler --configs mk:lobatto:5,mk-lin:lobatto:5 --h 0.05 --t-end 50
    python client.py quadrature --family lobatto --k 5
    python client.py serve
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from api.logging_config import configure_logging
from api.settings import get_settings
from twostep.errors import TwoStepError
from twostep.harness import experiments, reports
from twostep.problems import PROBLEMS, load_problem
from twostep.quadrature import QuadratureFamily, make_rule, verified_degree

logger = logging.getLogger("twostep.cli")

METHODS = ["mk", "mk-lin", "hbvm4", "trap"]
FAMILIES = [f.value for f in QuadratureFamily]


def _write(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", newline="\n") as f:
        f.write(text)
    logger.info(f"wrote {out}")


def _problem(args):
    poly = None
    if args.poly_json:
        with open(args.poly_json) as f:
            poly = json.load(f)
    return load_problem(args.problem, args.eccentricity, poly, args.y0)


def _controls(args) -> dict:
    settings = get_settings()
    return {
        "fp_tol": settings.fp_tol if args.fp_tol is None else args.fp_tol,
        "fp_max_iter": settings.fp_max_iter if args.fp_max_iter is None else args.fp_max_iter,
        "predictor": args.predictor,
    }


def cmd_integrate(args) -> int:
    problem = _problem(args)
    config = experiments.build_config(problem, args.method, args.nodes, args.k,
                                      drift_correct=args.drift_correct, **_controls(args))
    trajectory = experiments.run_integration(problem, config, args.h, args.t_end)
    _write(reports.render(reports.trajectory_frame(trajectory), args.format), args.out)
    return 0


def cmd_converge(args) -> int:
    problem = _problem(args)
    config = experiments.build_config(problem, args.method, args.nodes, args.k,
                                      drift_correct=args.drift_correct, **_controls(args))
    workers = get_settings().max_workers if args.workers is None else args.workers
    report = experiments.run_convergence(problem, config, experiments.parse_h_list(args.h_list), args.t_end,
                                         reference_factor=args.reference_factor, max_workers=workers)
    logger.info(f"{report.method} on {report.problem}: error metric is the {report.error_metric}; "
                f"reference is the {report.reference}")
    _write(reports.render(report.to_frame(), args.format), args.out)
    return 0


def cmd_drift(args) -> int:
    problem = _problem(args)
    configs = experiments.parse_config_spec(problem, args.configs, **_controls(args))
    report = experiments.run_drift(problem, configs, args.h, args.t_end)
    _write(reports.render(report.to_frame(), args.format), args.out)
    return 0


def cmd_quadrature(args) -> int:
    rule = make_rule(args.family, args.k)
    payload = {
        "family": rule.family.value,
        "k": rule.k,
        "nodes": rule.nodes.tolist(),
        "weights": rule.weights.tolist(),
        "degree_of_precision": rule.degree,
        "verified_degree": verified_degree(rule),
    }
    _write(json.dumps(payload, indent=1) + "\n", args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("api.main:app", host=args.host, port=args.port)
    return 0


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_problem_arguments(p: argparse.ArgumentParser):
    p.add_argument("--problem", choices=sorted(PROBLEMS), default="pendulum3", help="Built-in problem (default: pendulum3).")
    p.add_argument("--eccentricity", type=float, default=None, help="Kepler eccentricity in [0, 1) (default: 0.6).")
    p.add_argument("--poly-json", dest="poly_json", default=None,
                   help="JSON file of [coefficient, [exponents...]] terms; replaces --problem.")
    p.add_argument("--y0", type=_float_list, default=None, help="Initial state q1,..,qm,p1,..,pm.")


def _add_method_arguments(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=METHODS, default="mk", help="Method kind (default: mk).")
    p.add_argument("--nodes", choices=FAMILIES, default="lobatto", help="Quadrature family (default: lobatto).")
    p.add_argument("--k", type=int, default=None,
                   help="Number of quadrature nodes (default: smallest energy-preserving k, 9 for non-polynomial H).")
    p.add_argument("--drift-correct", dest="drift_correct", action="store_true",
                   help="Project every point back onto the initial energy level.")


def _add_control_arguments(p: argparse.ArgumentParser):
    p.add_argument("--fp-tol", dest="fp_tol", type=float, default=None, help="Fixed-point tolerance (default: TWOSTEP_FP_TOL).")
    p.add_argument("--fp-max-iter", dest="fp_max_iter", type=int, default=None,
                   help="Fixed-point iteration cap (default: TWOSTEP_FP_MAX_ITER).")
    p.add_argument("--predictor", choices=["extrapolate", "linear_method"], default="extrapolate",
                   help="Initial guess for the corrected method (default: extrapolate).")


def _add_output_arguments(p: argparse.ArgumentParser):
    p.add_argument("--out", default=None, help="Output file (default: stdout).")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format (default: csv).")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostep", description="Energy-preserving two-step integrators for Hamiltonian systems.")
    parser.add_argument("--verbose", action="store_true", help="Also log to stderr, at DEBUG level.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="Integrate one problem and print per-step records.")
    _add_problem_arguments(p)
    _add_method_arguments(p)
    _add_control_arguments(p)
    p.add_argument("--h", type=float, required=True, help="Stepsize.")
    p.add_argument("--t-end", dest="t_end", type=float, default=None, help="Final time (default: the problem's interval).")
    _add_output_arguments(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("converge", help="Convergence study over a halving stepsize sequence.")
    _add_problem_arguments(p)
    _add_method_arguments(p)
    _add_control_arguments(p)
    p.add_argument("--h-list", dest="h_list", required=True, help="'2^-1..2^-8' or a comma list of halving stepsizes.")
    p.add_argument("--t-end", dest="t_end", type=float, required=True, help="Final time, a multiple of every h.")
    p.add_argument("--reference-factor", dest="reference_factor", type=int, default=8,
                   help="Self-reference runs use min(h) divided by this (default: 8).")
    p.add_argument("--workers", type=int, default=None, help="Concurrent cells (default: TWOSTEP_MAX_WORKERS).")
    _add_output_arguments(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("drift", help="Energy error over time for several configurations.")
    _add_problem_arguments(p)
    _add_control_arguments(p)
    p.add_argument("--configs", required=True, help="Comma list of method[:family[:k[:dc]]].")
    p.add_argument("--h", type=float, required=True, help="Stepsize.")
    p.add_argument("--t-end", dest="t_end", type=float, required=True, help="Final time.")
    _add_output_arguments(p)
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("quadrature", help="Print a quadrature rule as JSON.")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", default=None, help="Output file (default: stdout).")
    p.set_defaults(func=cmd_quadrature)

    p = sub.add_parser("serve", help="Run the HTTP service.")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(get_settings(), verbose=args.verbose)
    try:
        return args.func(args)
    except (TwoStepError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
