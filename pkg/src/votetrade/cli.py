"""Command-line entry point: ``votetrade {solve,welfare,simulate,ingest,export-grid}``.

Exit codes: 0 success, 1 usage or invalid input, 2 solver non-convergence,
3 file I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .distributions import DistributionError, DomainError, kde_from_survey, validate
from .equilibrium import MODES, ConvergenceError, SolverOptions, TradingError, find_equilibria, solve_equilibrium
from .geometry import density_grid, region_mask_grid
from .groupwide import effective_q
from .io import (
    SurveyFormatError,
    load_dist_spec,
    load_solution_theta,
    read_survey_csv,
    solution_to_dict,
    write_grid_csv,
    write_json,
)
from .simulator import SIM_MODES, simulate, vote_frequencies
from .welfare import beneficial_trade_probability, welfare_mask_grid

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("votetrade")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _odd(text):
    n = int(text)
    if n < 3 or n % 2 == 0:
        raise argparse.ArgumentTypeError(f"committee size must be odd and >= 3, got {n}")
    return n


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _resolution(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"grid resolution must be at least 2, got {v}")
    return v


def _shared(p, dist=True):
    if dist:
        p.add_argument("--dist", required=True, help="distribution spec JSON")
    p.add_argument("--n", type=_odd, default=11, help="committee size (odd, default 11)")
    p.add_argument("--mode", choices=MODES, default="myopic")
    p.add_argument("--tol", type=float, default=1e-8, help="fixed-point tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--starts", type=_positive_int, default=1, help="solver starts (1 = naive profile only)")
    p.add_argument("--out", required=True, help="output path")
    p.add_argument("--grid", type=_resolution, default=None, help="lattice resolution for grid exports")
    p.add_argument("--workers", type=_positive_int, default=1, help="threads; never changes results")


def build_parser():
    parser = _Parser(prog="votetrade", description="Vote-trading equilibria, welfare and simulation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="compute an equilibrium profile")
    _shared(p)
    p.add_argument("--max-iter", type=_positive_int, default=500)

    p = sub.add_parser("welfare", help="probability that equilibrium trades help the group")
    _shared(p)
    p.add_argument("--solution", help="solution JSON from 'solve' (otherwise solved inline)")

    p = sub.add_parser("simulate", help="Monte Carlo committees")
    _shared(p)
    p.add_argument("--solution", help="solution JSON from 'solve' (otherwise solved inline)")
    p.add_argument("--sim-mode", choices=SIM_MODES, default=None,
                   help="default: single for myopic, all-pairs for groupwide")
    p.add_argument("--dump", help="per-trial CSV (first --dump-limit trials)")
    p.add_argument("--dump-limit", type=_positive_int, default=1000)

    p = sub.add_parser("ingest", help="fit a kernel density to a survey CSV")
    _shared(p, dist=False)
    p.add_argument("--csv", required=True, help="survey CSV: header row, two integer columns")
    p.add_argument("--scale", type=int, nargs=2, default=(1, 7), metavar=("LO", "HI"))
    p.add_argument("--bandwidth", type=float, nargs="+", default=None, help="one or two kernel widths")

    p = sub.add_parser("export-grid", help="density or region lattice for plotting")
    _shared(p)
    p.add_argument("--solution", help="solution JSON for region grids")
    p.add_argument("--kind", choices=("density", "regions", "welfare"), default="density")
    return parser


def _options(args, **extra):
    return SolverOptions(n=args.n, tolerance=args.tol, starts=args.starts, seed=args.seed,
                         workers=args.workers, **extra)


def _solve(dist, args, **extra):
    opts = _options(args, **extra)
    if opts.starts > 1:
        sols = find_equilibria(dist, opts, args.mode)
        if not sols:
            raise ConvergenceError("no start converged", None, [])
        return sols[0], sols
    sol = solve_equilibrium(dist, opts, args.mode)
    return sol, [sol]


def _theta(dist, args):
    if getattr(args, "solution", None):
        theta, n, mode = load_solution_theta(args.solution)
        if n is not None and n != args.n:
            log.warning("solution file has n=%s but --n=%s; using --n", n, args.n)
        if mode is not None and mode != args.mode:
            log.warning("solution file has mode=%s but --mode=%s; using --mode", mode, args.mode)
        return theta
    return _solve(dist, args)[0].theta_star


def _stem(out):
    p = Path(out)
    return p.with_suffix("") if p.suffix else p


def cmd_solve(args):
    dist = load_dist_spec(args.dist)
    sol, sols = _solve(dist, args, max_iterations=args.max_iter)
    payload = solution_to_dict(sol, dist)
    if len(sols) > 1:
        payload["all_equilibria"] = [s.theta_star.tolist() for s in sols]
    write_json(args.out, payload)
    if args.grid:
        write_grid_csv(f"{_stem(args.out)}_regions.csv", region_mask_grid(sol.theta_star, args.grid), args.grid,
                       "region bitmask, bit i-1 set inside R_i", integer=True)
    return EXIT_OK


def cmd_welfare(args):
    dist = load_dist_spec(args.dist)
    theta = _theta(dist, args)
    report = beneficial_trade_probability(dist, theta, args.n, args.mode)
    write_json(args.out, report.to_dict())
    if args.grid:
        write_grid_csv(f"{_stem(args.out)}_mask.csv", welfare_mask_grid(report, args.grid), args.grid,
                       "bit0 offers issue 2, bit1 offers issue 1, bit2/bit3 beneficial as that offer", integer=True)
    return EXIT_OK


def cmd_simulate(args):
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    dist = load_dist_spec(args.dist)
    theta = _theta(dist, args)
    sim_mode = args.sim_mode or ("single" if args.mode == "myopic" else "all-pairs")
    report = simulate(dist, theta, args.n, sim_mode, args.trials, args.seed, args.workers, dump_path=args.dump,
                      dump_limit=args.dump_limit)
    payload = report.to_dict()
    payload["theta"] = theta
    payload["distribution"] = dist.to_spec()
    if sim_mode == "all-pairs":
        freq = vote_frequencies(dist, theta, args.n, args.trials, args.seed)
        analytic = effective_q(dist, theta, args.n).to_dict()
        check = {}
        for key, (mean, se) in freq.items():
            z = (mean - analytic[key]) / se if se > 0 else float("inf")
            check[key] = {"empirical": mean, "se": se, "analytic": analytic[key], "z": z}
        payload["effective_q_check"] = {"values": check, "passed": all(abs(v["z"]) <= 3 for v in check.values())}
    write_json(args.out, payload)
    return EXIT_OK


def cmd_ingest(args):
    records = read_survey_csv(args.csv, tuple(args.scale))
    bw = None
    if args.bandwidth is not None:
        if len(args.bandwidth) > 2:
            raise UsageError("--bandwidth takes one or two values")
        bw = args.bandwidth[0] if len(args.bandwidth) == 1 else args.bandwidth
    dist = kde_from_survey(records, bw, tuple(args.scale))
    report = validate(dist, tol=1e-6)
    out = Path(args.out)
    csv_ref = os.path.relpath(Path(args.csv).resolve(), out.resolve().parent)
    spec = {"family": "kde", "params": {"csv": csv_ref, "scale": list(args.scale),
                                         "bandwidth": dist.bandwidth.tolist()}}
    write_json(out, spec)
    validation = report.to_dict()
    validation["records"] = len(records)
    freq = np.zeros(4)
    for r in records:
        x, y = r.response_1 - sum(args.scale) / 2, r.response_2 - sum(args.scale) / 2
        if x > 0 and y > 0:
            freq[0] += 1
        elif x < 0 and y > 0:
            freq[1] += 1
        elif x < 0 and y < 0:
            freq[2] += 1
        elif x > 0 and y < 0:
            freq[3] += 1
    validation["sample_quadrant_frequencies"] = (freq / len(records)).tolist()
    validation["on_axis_fraction"] = 1.0 - freq.sum() / len(records)
    write_json(f"{_stem(out)}_validation.json", validation)
    if args.grid:
        write_grid_csv(f"{_stem(out)}_density.csv", density_grid(dist, args.grid), args.grid, "density")
    if not report.passed:
        log.warning("density failed validation: %s", "; ".join(report.messages))
    return EXIT_OK


def cmd_export_grid(args):
    res = args.grid or 201
    dist = load_dist_spec(args.dist)
    if args.kind == "density":
        write_grid_csv(args.out, density_grid(dist, res), res, "density")
        return EXIT_OK
    theta = _theta(dist, args)
    if args.kind == "regions":
        write_grid_csv(args.out, region_mask_grid(theta, res), res, "region bitmask, bit i-1 set inside R_i",
                       integer=True)
    else:
        report = beneficial_trade_probability(dist, theta, args.n, args.mode)
        write_grid_csv(args.out, welfare_mask_grid(report, res), res,
                       "bit0 offers issue 2, bit1 offers issue 1, bit2/bit3 beneficial as that offer", integer=True)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "welfare": cmd_welfare,
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "export-grid": cmd_export_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.history:
            print(f"residual history (last 5): {exc.history[-5:]}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (DistributionError, SurveyFormatError, DomainError, TradingError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
