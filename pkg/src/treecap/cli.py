"""Command-line interface.

Usage examples:

    treecap cap-tree --set "prefix:1/2"
    treecap cap-cond --set "union(shadow:2,0, shadow:2,3)" --n-max 8
    treecap extremal --set "shadow:1,0"
    treecap build-set --eps 0.3 --tol 1e-10
    treecap equal-split --eps 0.25 --n 3
    treecap solve-disc --set full --inner-radius 0.5
    treecap experiment blowup --set "prefix:1/2" --n-max 13
    treecap experiment plateau --eps 0.25 --n-max 12 --exact
    treecap experiment lowerbound --eps 0.2 --n-max 8 --samples 100 --seed 7
    treecap experiment compare --set "prefix:3/8" --n-max 6
    treecap experiment conjecture --delta 0.25,0.0625 --n-max 12

Exit codes: 0 on success (and a passing verdict), 1 when an experiment's
verdict fails, 2 on input or computation errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .builder import equal_split, set_of_capacity
from .capacity import (
    capacity,
    condenser_capacity,
    energy,
    equilibrium_measure,
    extremal,
)
from .disc import CondenserProblem, SolverGrid, solve
from .errors import TreecapError
from .experiments import (
    parse_set_spec,
    run_blowup,
    run_compare,
    run_conjecture,
    run_lowerbound,
    run_plateau,
)


def _add_output_flags(parser):
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", help="output format"
    )
    parser.add_argument(
        "--out", default=None, help="write output to this path instead of stdout"
    )


def _add_grid_flags(parser):
    parser.add_argument(
        "--grid-angular", type=int, default=1024, help="angular cells (power of two)"
    )
    parser.add_argument(
        "--grid-radial", type=int, default=200, help="radial layers"
    )


def _grid(args) -> SolverGrid:
    return SolverGrid(n_angular=args.grid_angular, n_radial=args.grid_radial)


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _rows_csv(rows) -> str:
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buffer.getvalue()


def _value(x):
    """JSON-safe number: fractions become 'p/q' strings."""
    return x if isinstance(x, float) else str(x)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecap",
        description="capacities of dyadic-tree boundary sets and disc condensers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cap-tree", help="capacity of a boundary set")
    p.add_argument("--set", required=True, help="set specification")
    p.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    p.add_argument("--tol", type=float, default=1e-9, help="tolerance for cap:/split: atoms")
    _add_output_flags(p)

    p = sub.add_parser("cap-cond", help="condenser capacities at cut levels 0..n-max")
    p.add_argument("--set", required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_output_flags(p)

    p = sub.add_parser("extremal", help="extremal flux, path sums, equilibrium measure")
    p.add_argument("--set", required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_output_flags(p)

    p = sub.add_parser("build-set", help="build a set of prescribed capacity")
    p.add_argument("--eps", type=float, required=True, help="target capacity")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_output_flags(p)

    p = sub.add_parser("equal-split", help="build an equal-split family member")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="split depth")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_output_flags(p)

    p = sub.add_parser("solve-disc", help="solve one disc condenser")
    p.add_argument("--set", required=True)
    p.add_argument("--inner-radius", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--field-out", default=None, help="dump the potential field as CSV")
    _add_grid_flags(p)
    _add_output_flags(p)

    exp = sub.add_parser("experiment", help="run a named experiment")
    exp_sub = exp.add_subparsers(dest="experiment", required=True)

    p = exp_sub.add_parser("blowup", help="condenser capacity growth for a fixed set")
    p.add_argument("--set", required=True)
    p.add_argument("--n-max", type=int, default=13)
    p.add_argument("--threshold", type=float, default=1e3)
    p.add_argument("--with-disc", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_grid_flags(p)
    _add_output_flags(p)

    p = exp_sub.add_parser("plateau", help="equal-split family stays bounded")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--exact", action="store_true")
    _add_output_flags(p)

    p = exp_sub.add_parser("lowerbound", help="sampled sharp lower bound")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_output_flags(p)

    p = exp_sub.add_parser("compare", help="tree vs disc condenser capacities")
    p.add_argument("--set", required=True)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_grid_flags(p)
    _add_output_flags(p)

    p = exp_sub.add_parser("conjecture", help="bound vs gap-form rescaling chart")
    p.add_argument(
        "--delta", required=True, help="comma-separated gap values in (0, 1/2)"
    )
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--with-disc", action="store_true")
    _add_grid_flags(p)
    _add_output_flags(p)

    return parser


def _cmd_cap_tree(args) -> int:
    bset = parse_set_spec(args.set, args.tol)
    value = capacity(bset, exact=args.exact)
    payload = {"set": args.set, "exact": args.exact, "capacity": _value(value)}
    if args.format == "csv":
        _emit(_rows_csv([payload]), args.out)
    else:
        _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_cap_cond(args) -> int:
    bset = parse_set_spec(args.set, args.tol)
    rows = [
        {"n": n, "value": _value(condenser_capacity(bset, n, exact=args.exact))}
        for n in range(args.n_max + 1)
    ]
    if args.format == "csv":
        _emit(_rows_csv(rows), args.out)
    else:
        payload = {"set": args.set, "exact": args.exact, "rows": rows}
        _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_extremal(args) -> int:
    bset = parse_set_spec(args.set, args.tol)
    flux = extremal(bset, exact=args.exact)
    measure = equilibrium_measure(bset, exact=args.exact)
    vertices = flux.to_json_obj()
    if args.format == "csv":
        _emit(_rows_csv(vertices), args.out)
        return 0
    payload = {
        "set": args.set,
        "capacity": _value(flux.root_capacity),
        "energy": _value(energy(flux)),
        "vertices": vertices,
        "measure": measure.to_json_obj(),
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_build_set(args) -> int:
    bset = set_of_capacity(args.eps, args.tol)
    if args.format == "csv":
        _emit(bset.to_text() + "\n", args.out)
        return 0
    payload = {
        "target": args.eps,
        "tol": args.tol,
        "capacity": capacity(bset),
        "resolution": bset.resolution,
        "set": bset.to_json_obj(),
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_equal_split(args) -> int:
    family = equal_split(args.eps, args.n, args.tol)
    obj = family.to_json_obj()
    obj["capacity"] = capacity(family.carrier)
    obj["condenser_at_n"] = condenser_capacity(family.carrier, args.n)
    if args.format == "csv":
        rows = [{"k": k, "e": v} for k, v in enumerate(family.e)]
        _emit(_rows_csv(rows), args.out)
        return 0
    _emit(json.dumps(obj, indent=2), args.out)
    return 0


def _cmd_solve_disc(args) -> int:
    bset = parse_set_spec(args.set, args.tol)
    problem = CondenserProblem.from_set(bset, args.inner_radius)
    solution = solve(problem, _grid(args))
    if args.field_out:
        with open(args.field_out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["rho", "theta", "u"])
            writer.writerows(solution.field_rows())
    payload = {
        "set": args.set,
        "inner_radius": args.inner_radius,
        "capacity": solution.capacity,
        "iterations": solution.iterations,
        "residual": solution.residual,
        "grid_angular": args.grid_angular,
        "grid_radial": args.grid_radial,
    }
    if args.format == "csv":
        _emit(_rows_csv([payload]), args.out)
    else:
        _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_experiment(args) -> int:
    if args.experiment == "blowup":
        report = run_blowup(
            parse_set_spec(args.set, args.tol),
            args.n_max,
            threshold=args.threshold,
            with_disc=args.with_disc,
            grid=_grid(args),
        )
        report.params["set"] = args.set
    elif args.experiment == "plateau":
        report = run_plateau(args.eps, args.n_max, tol=args.tol, exact=args.exact)
    elif args.experiment == "lowerbound":
        report = run_lowerbound(
            args.eps, args.n_max, args.samples, args.seed, tol=args.tol
        )
    elif args.experiment == "compare":
        report = run_compare(
            parse_set_spec(args.set, args.tol), args.n_max, grid=_grid(args)
        )
        report.params["set"] = args.set
    elif args.experiment == "conjecture":
        deltas = [float(part) for part in args.delta.split(",") if part.strip()]
        report = run_conjecture(
            deltas, args.n_max, with_disc=args.with_disc, grid=_grid(args)
        )
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(args.experiment)
    _emit(report.render(args.format), args.out)
    return 0 if report.verdict else 1


_HANDLERS = {
    "cap-tree": _cmd_cap_tree,
    "cap-cond": _cmd_cap_cond,
    "extremal": _cmd_extremal,
    "build-set": _cmd_build_set,
    "equal-split": _cmd_equal_split,
    "solve-disc": _cmd_solve_disc,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (TreecapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
