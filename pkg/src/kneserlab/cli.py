"""Single executable exposing the library as subcommands.

Reports go to stdout (JSON by default, CSV for sweep outputs), logs to
stderr.  Every payload carries schema_version, and randomized commands echo
their effective seed, so identical invocations produce byte-identical output.
Exit codes: 0 success, 1 domain error, 2 guard or budget exceeded.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from contextlib import nullcontext

from . import SCHEMA_VERSION
from .errors import DomainError, GuardError
from .families import GroundParams, build_family, family_stats
from .graphs import (
    baranyai_partition,
    export_partition,
    extremal_subgraph,
    spectrum_cross_check,
    verify_ekr,
)
from .removal import RemovalConfig, case_table, center_set_check, removal_bound_check
from .spectral import decompose_affine, kneser_eigenvalue, residual_bound_check
from .threshold import (
    DEFAULT_EPSILON,
    ThresholdParams,
    analytic_bounds,
    critical_probabilities,
    estimate_probability,
    find_threshold,
)

DEFAULT_SEED = 1961  # fixed documented default; never time-based
DEFAULT_C_CONST = 2.0


def _default_workers() -> int:
    env = os.environ.get("KNESERLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kneserlab",
        description="Intersecting-family removal diagnostics and sparse EKR "
                    "thresholds on random Kneser subgraphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, family=False, ell=False, seedy=False):
        p.add_argument("--n", type=int, required=True, help="ground-set size")
        p.add_argument("--k", type=int, required=True, help="uniformity")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="output format (default: json; simulate: csv)")
        p.add_argument("--out", default=None,
                       help="output path (default: stdout)")
        if family:
            p.add_argument("--family", required=True,
                           help="family spec: star:<i> | antistar:<i> | "
                                "union:<i,..> | complement-of:<spec> | "
                                "random:<m>:<seed> | file:<path>")
        if ell:
            p.add_argument("--l", type=int, default=1, dest="ell",
                           help="number of stars l (default 1)")
            p.add_argument("--c-const", type=float, default=DEFAULT_C_CONST,
                           help=f"constant C > 1 (default {DEFAULT_C_CONST})")
        if seedy:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                           help=f"master seed (default {DEFAULT_SEED})")
            p.add_argument("--workers", type=int, default=_default_workers(),
                           help="worker processes; must not affect results")
        return p

    common(sub.add_parser("stats", help="family size/dp and (alpha,beta)"),
           family=True, ell=True)
    common(sub.add_parser("spectrum", help="eigenvalues and affine decomposition"),
           family=False, ell=True).add_argument(
        "--family", default=None, help="optional family spec to decompose")
    common(sub.add_parser("removal", help="nearest union of stars and bound"),
           family=True, ell=True)
    common(sub.add_parser("ekr", help="exact alpha and star uniqueness"))
    common(sub.add_parser("baranyai", help="perfect-matching partition (k | n)")
           ).add_argument("--partition-only", action="store_true",
                          help="skip the extremal subgraph statistics")
    sim = common(sub.add_parser("simulate", help="Monte Carlo EKR probability"),
                 seedy=True)
    sim.add_argument("--p", required=True,
                     help="edge probability, or comma list for a sweep")
    sim.add_argument("--trials", type=int, default=100)
    thr = common(sub.add_parser("threshold", help="bisection for the 1/2-crossing"),
                 seedy=True)
    thr.add_argument("--trials", type=int, default=200,
                     help="trials per bisection point")
    bnd = common(sub.add_parser("bounds", help="analytic bound report"))
    bnd.add_argument("--zeta", type=float, default=1.0 + DEFAULT_EPSILON)
    bnd.add_argument("--i", type=int, default=1)
    bnd.add_argument("--j", type=int, default=1)
    bnd.add_argument("--c-const", type=float, default=DEFAULT_C_CONST)
    bnd.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    return parser


def _emit_json(payload: dict, stream) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _emit_csv(rows: list[dict], stream, *, seed: int | None = None) -> None:
    stream.write(f"# schema_version={SCHEMA_VERSION}\n")
    if seed is not None:
        stream.write(f"# seed={seed}\n")
    if not rows:
        return
    cols = list(rows[0].keys())
    stream.write(",".join(cols) + "\n")
    for row in rows:
        stream.write(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols) + "\n")


def _cmd_stats(args) -> tuple[dict | list, int | None]:
    params = GroundParams(args.n, args.k)
    family = build_family(params, args.family)
    stats = family_stats(family, args.ell)
    payload = stats.to_json_dict()
    payload["family"] = args.family
    payload["preconditions_met"] = stats.removal_precondition_met(args.c_const)
    payload["c_const"] = args.c_const
    return payload, None


def _cmd_spectrum(args) -> tuple[dict, int | None]:
    params = GroundParams(args.n, args.k)
    payload: dict = {
        "n": args.n,
        "k": args.k,
        "eigenvalues": [
            {"index": i, "value": kneser_eigenvalue(params, i).value}
            for i in range(args.k + 1)
        ],
    }
    if args.family:
        family = build_family(params, args.family)
        payload["family"] = args.family
        payload["decomposition"] = decompose_affine(family).to_json_dict()
        payload["residual_bound"] = residual_bound_check(family, args.ell).to_json_dict()
        payload["ell"] = args.ell
    return payload, None


def _cmd_removal(args) -> tuple[dict | list, int | None]:
    params = GroundParams(args.n, args.k)
    family = build_family(params, args.family)
    cfg = RemovalConfig(args.ell, args.c_const)
    report = removal_bound_check(family, cfg)
    rows = case_table(family, cfg)
    if args.format == "csv":
        return rows, None
    payload = report.to_json_dict()
    payload["family"] = args.family
    payload["center_set"] = center_set_check(family, cfg).to_json_dict()
    payload["cases"] = rows
    return payload, None


def _cmd_ekr(args) -> tuple[dict, int | None]:
    return verify_ekr(GroundParams(args.n, args.k)), None


def _cmd_baranyai(args) -> tuple[dict, int | None]:
    params = GroundParams(args.n, args.k)
    partition = baranyai_partition(params)
    buf = io.StringIO()
    export_partition(partition, buf)
    payload: dict = {
        "n": args.n,
        "k": args.k,
        "num_classes": len(partition.classes),
        "class_size": args.n // args.k,
        "classes": buf.getvalue().splitlines(),
    }
    if not args.partition_only:
        stats = extremal_subgraph(params)
        payload["extremal"] = {
            key: stats[key]
            for key in ("alpha", "degree", "regular", "edges", "expected_edges")
        }
    return payload, None


def _cmd_simulate(args) -> tuple[list, int]:
    params = GroundParams(args.n, args.k)
    try:
        ps = [float(tok) for tok in str(args.p).split(",") if tok]
    except ValueError:
        raise DomainError(f"bad probability list {args.p!r}") from None
    rows = []
    for p in ps:
        tp = ThresholdParams(params, p, args.trials, args.seed)
        est = estimate_probability(tp, workers=args.workers)
        rows.append({
            "p": p,
            "trials": est["trials"],
            "successes": est["successes"],
            "fraction": est["fraction"],
            "ci_lo": est["ci_lo"],
            "ci_hi": est["ci_hi"],
            "mean_X": est["mean_x"],
        })
    return rows, args.seed


def _cmd_threshold(args) -> tuple[dict, int | None]:
    params = GroundParams(args.n, args.k)
    return find_threshold(params, args.trials, args.seed,
                          workers=args.workers), args.seed


def _cmd_bounds(args) -> tuple[dict, int | None]:
    params = GroundParams(args.n, args.k)
    report = analytic_bounds(params, args.zeta, args.i, args.j,
                             c_const=args.c_const, epsilon=args.epsilon)
    return report.to_json_dict(), None


_COMMANDS = {
    "stats": _cmd_stats,
    "spectrum": _cmd_spectrum,
    "removal": _cmd_removal,
    "ekr": _cmd_ekr,
    "baranyai": _cmd_baranyai,
    "simulate": _cmd_simulate,
    "threshold": _cmd_threshold,
    "bounds": _cmd_bounds,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result, seed = _COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GuardError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        print(f"seed={seed}", file=sys.stderr)
    fmt = args.format or ("csv" if args.command == "simulate" else "json")
    sink = open(args.out, "w") if args.out else nullcontext(sys.stdout)
    with sink as stream:
        if fmt == "csv":
            rows = result if isinstance(result, list) else [result]
            _emit_csv(rows, stream, seed=seed)
        else:
            if isinstance(result, list):
                _emit_json({"rows": result, "seed": seed} if seed is not None
                           else {"rows": result}, stream)
            else:
                if seed is not None:
                    result = {**result, "seed": seed}
                _emit_json(result, stream)
    return 0


if __name__ == "__main__":
    sys.exit(main())
