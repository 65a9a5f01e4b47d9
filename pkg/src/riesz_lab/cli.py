"""Command-line interface: ``riesz-lab <command> ...``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .analysis import CSV_HEADER, equidist_test, scaling_study, separation_study
from .constants import theoretical_limit
from .energy import DuplicatePointsError, RieszParams, nearest_neighbor_distances
from .formats import RunConfig, read_config_file, to_json, write_config_file
from .manifold import parse_manifold
from .optimize import INIT_STRATEGIES, OptimizerOptions, best_of_restarts, tile_cube_configuration


class UsageError(Exception):
    """Bad command-line input; carries the offending flag."""

    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: {message}\n")
        sys.exit(2)


def _jobs(value):
    env = os.environ.get("RIESZ_LAB_JOBS")
    raw = env if env else value
    try:
        jobs = int(raw) if raw is not None else (os.cpu_count() or 1)
    except ValueError:
        raise UsageError("--jobs", f"not an integer: {raw!r}") from None
    if jobs < 1:
        raise UsageError("--jobs", "must be >= 1")
    return jobs


def _manifold(text):
    try:
        return parse_manifold(text)
    except ValueError as exc:
        raise UsageError("--manifold", str(exc)) from None


def _params(s, m):
    try:
        return RieszParams(float(s), m.intrinsic_dim)
    except ValueError as exc:
        raise UsageError("--s", str(exc)) from None


def _read(path, flag="--in"):
    try:
        return read_config_file(path)
    except (OSError, ValueError) as exc:
        raise UsageError(flag, str(exc)) from None


def _options(args):
    try:
        return OptimizerOptions(max_iterations=args.max_iter, gradient_tolerance=args.tol,
                                relative_tolerance=args.rtol, restarts=args.restarts, seed=args.seed)
    except ValueError as exc:
        msg = str(exc)
        flag = ("--restarts" if "restarts" in msg else "--rtol" if "relative" in msg
                else "--tol" if "tolerance" in msg else "--max-iter")
        raise UsageError(flag, str(exc)) from None


def _emit(text, path=None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------- commands

def cmd_optimize(args) -> int:
    m = _manifold(args.manifold)
    params = _params(args.s, m)
    init = args.init
    if args.infile:
        init = _read(args.infile)
        n = init.N if args.n is None else args.n
    elif init == "file":
        raise UsageError("--in", "init strategy 'file' needs --in")
    else:
        if args.n is None:
            raise UsageError("--n", "required")
        n = args.n
    if n < 2:
        raise UsageError("--n", "need N >= 2")
    opts = _options(args)
    result = best_of_restarts(m, n, params, opts, init, jobs=_jobs(args.jobs))
    if args.out:
        write_config_file(args.out, result.config)
    run = RunConfig("optimize", str(m), params.s, n, None, args.infile and "file" or args.init,
                    opts.to_dict(), args.seed, {"out": args.out, "report": args.report})
    report = {
        "run": run.to_dict(),
        "energy_report": result.report.to_dict(),
        "iterations": result.iterations,
        "converged": result.converged,
        "status": result.status,
        "restart_energies": result.restart_energies,
    }
    text = to_json(report)
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_scaling(args) -> int:
    m = _manifold(args.manifold)
    params = _params(args.s, m)
    try:
        n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError("--n-list", f"expected comma-separated integers, got {args.n_list!r}") from None
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 2:
        raise UsageError("--n-list", "need at least three strictly increasing values >= 2")
    opts = _options(args)
    study, configs = scaling_study(m, params, n_list, opts, args.init, jobs=_jobs(args.jobs),
                                   timing=args.timing, keep_configs=True)
    if args.save_configs:
        out = Path(args.save_configs)
        out.mkdir(parents=True, exist_ok=True)
        for n, cfg in zip(n_list, configs):
            write_config_file(out / f"N{n}.pts", cfg)
    if args.json:
        run = RunConfig("scaling", str(m), params.s, None, n_list, args.init, opts.to_dict(), args.seed,
                        {"csv": args.csv, "json": args.json, "save_configs": args.save_configs})
        Path(args.json).write_text(to_json({"run": run.to_dict(), "study": study.to_dict()}))
    _emit(study.to_csv(), args.csv)
    return 0


def cmd_equidist(args) -> int:
    config = _read(args.infile)
    m = _manifold(args.manifold or config.manifold)
    try:
        report = equidist_test(config, m, args.cells)
    except ValueError as exc:
        raise UsageError("--cells", str(exc)) from None
    sys.stdout.write(to_json(report))
    return 0


def _pairs_from_csv(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"N", "min_sep"} <= set(reader.fieldnames):
                raise UsageError("--csv", f"expected a scaling CSV with columns {','.join(CSV_HEADER)}")
            return [(int(row["N"]), float(row["min_sep"])) for row in reader]
    except OSError as exc:
        raise UsageError("--csv", str(exc)) from None
    except ValueError as exc:
        raise UsageError("--csv", str(exc)) from None


def cmd_separation(args) -> int:
    if bool(args.csv) == bool(args.infiles):
        raise UsageError("--csv", "give either --csv or --in")
    if args.csv:
        pairs = _pairs_from_csv(args.csv)
    else:
        pairs = []
        for path in args.infiles:
            cfg = _read(path)
            pairs.append((cfg.N, float(nearest_neighbor_distances(cfg).min())))
    try:
        params = RieszParams(args.s, args.d)
    except ValueError as exc:
        raise UsageError("--s", str(exc)) from None
    sys.stdout.write(to_json(separation_study(pairs, params)))
    return 0


def cmd_constants(args) -> int:
    m = _manifold(args.manifold)
    d = m.intrinsic_dim if args.d is None else args.d
    if d != m.intrinsic_dim:
        raise UsageError("--d", f"manifold {m} has dimension {m.intrinsic_dim}")
    try:
        params = RieszParams(args.s, d)
    except ValueError as exc:
        raise UsageError("--s", str(exc)) from None
    lim = theoretical_limit(params, m)
    number = lim.value if lim.value is not None else lim.bound
    rows = [("manifold", str(m)), ("s", f"{lim.s:g}"), ("d", str(lim.d)),
            ("measure", format(lim.measure, ".17g")), ("kind", lim.kind),
            ("value" if lim.value is not None else "bound", "unknown" if number is None else format(number, ".17g")),
            ("formula", lim.description)]
    width = max(len(k) for k, _ in rows)
    sys.stdout.write("".join(f"{k:<{width}}  {v}\n" for k, v in rows))
    return 0


def cmd_tile(args) -> int:
    base = _read(args.infile)
    try:
        tiled = tile_cube_configuration(base, args.m, args.gamma)
    except ValueError as exc:
        flag = "--gamma" if "gamma" in str(exc) else "--m" if "m must" in str(exc) else "--in"
        raise UsageError(flag, str(exc)) from None
    write_config_file(args.out, tiled)
    sys.stdout.write(f"wrote {tiled.N} points to {args.out}\n")
    return 0


# --------------------------------------------------------------------------- parser

def _optimizer_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=INIT_STRATEGIES, default="lattice")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=None, help="absolute gradient tolerance")
    p.add_argument("--rtol", type=float, default=1e-6, help="scale-free gradient tolerance, used without --tol")
    p.add_argument("--jobs", default=None, help="worker processes (default: all cores; RIESZ_LAB_JOBS overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riesz-lab", description="Minimal Riesz s-energy configurations on compact sets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="optimize one configuration")
    p.add_argument("--manifold", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--in", dest="infile", help="start from a riesz-config file")
    p.add_argument("--out", help="write the optimized configuration here")
    p.add_argument("--report", help="also write the JSON report here")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("scaling", help="optimize a sweep of N and fit the scaling law")
    p.add_argument("--manifold", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--n-list", required=True, help="comma-separated, e.g. 50,100,200")
    p.add_argument("--csv", help="CSV output path (default: stdout)")
    p.add_argument("--json", help="JSON study report path")
    p.add_argument("--save-configs", help="directory for the optimized configurations")
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime_s (non-reproducible)")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("equidist", help="count points per cell")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--manifold", help="default: the manifold named in the file header")
    p.add_argument("--cells", default="quadrants")
    p.set_defaults(func=cmd_equidist)

    p = sub.add_parser("separation", help="scaled minimal separation across N")
    p.add_argument("--csv", help="scaling-study CSV")
    p.add_argument("--in", dest="infiles", nargs="+", help="configuration files")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_separation)

    p = sub.add_parser("constants", help="print the theoretical limit table")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--manifold", required=True)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("tile", help="tile a cube configuration into m^d shrunken copies")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (DuplicatePointsError, RuntimeError) as exc:
        sys.stderr.write(f"error: optimizer failed: {exc}\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
