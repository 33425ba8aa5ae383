"""Command-line front end: parse -> lift -> relax -> solve -> certify.

Exit codes: 0 = certified optimum, 2 = bound only (no flat order), 1 =
error.  All results are emitted as JSON (schema ``result/1``) so runs are
machine-readable and reproducible: tolerances and seeds are part of the
output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import certify as certify_mod
from . import lift as lift_mod
from . import moment, oracle, sdp, sdpa
from .errors import SemialgError
from .parser import parse_problem

EXIT_CERTIFIED = 0
EXIT_ERROR = 1
EXIT_BOUND_ONLY = 2


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read())


def _build_lifted(spec, ball_M):
    return lift_mod.build_problem(
        spec.objective,
        spec.sense,
        spec.constraints,
        spec.box,
        ball_M=ball_M,
        var_names=spec.variables,
    )


def _orders(args, lp) -> list[int]:
    imin = moment.min_order(lp)
    if args.order is not None:
        return [args.order]
    if args.orders is not None:
        lo, _, hi = args.orders.partition("..")
        lo, hi = int(lo), int(hi or lo)
        if hi < lo:
            raise SemialgError(f"empty order range {args.orders!r}")
        return list(range(lo, hi + 1))
    return list(range(imin, imin + 4))


def _emit(payload: dict, out_path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_solve(args) -> int:
    t0 = time.time()
    spec = _load(args.input)
    lp = _build_lifted(spec, args.ball_M)
    rel_builder = moment.build_sparse_relaxation if args.sparse else moment.build_relaxation

    orders_out = []
    certificate = None
    for order in _orders(args, lp):
        rel = rel_builder(lp, order)
        sol = sdp.solve(rel, tol=args.tol)
        rho = lp.reported_value(sol.objective)
        record = {
            "order": order,
            "rho": rho,
            "status": sol.status,
            "iterations": sol.iterations,
            "residuals": sol.residuals,
            "flat": False,
            "d": None,
        }
        if sol.status == sdp.OPTIMAL:
            cert = certify_mod.certify_solution(sol, rel, rank_tol=args.rank_tol, seed=args.seed)
            record["flat"] = cert.flat
            record["d"] = cert.d
            if cert.flat:
                certificate = cert
        orders_out.append(record)
        if certificate is not None:
            break

    payload = {
        "schema": "result/1",
        "command": "solve",
        "input": args.input,
        "sense": spec.sense,
        "variables": spec.variables,
        "sparse": bool(args.sparse),
        "lifted": {
            "aux": lp.aux_names,
            "n_equalities": len(lp.equalities),
            "n_base_ineqs": len(lp.base_ineqs),
            "nonneg": lp.nonneg,
            "ball_M": lp.ball_M,
        },
        "orders": orders_out,
        "certificate": certify_mod.certificate_to_json(certificate, lp) if certificate else None,
        "tolerances": {"solver": args.tol, "rank": args.rank_tol},
        "seed": args.seed,
        "runtime_seconds": time.time() - t0,
    }
    _emit(payload, args.output)
    return EXIT_CERTIFIED if certificate is not None else EXIT_BOUND_ONLY


def _cmd_lift(args) -> int:
    spec = _load(args.input)
    lp = _build_lifted(spec, args.ball_M)
    _emit(lift_mod.lifted_problem_to_json(lp), args.output)
    return EXIT_CERTIFIED


def _cmd_export_sdpa(args) -> int:
    spec = _load(args.input)
    lp = _build_lifted(spec, args.ball_M)
    order = args.order if args.order is not None else moment.min_order(lp)
    rel_builder = moment.build_sparse_relaxation if args.sparse else moment.build_relaxation
    text = sdpa.export_sdpa(rel_builder(lp, order))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_CERTIFIED


def _cmd_oracle(args) -> int:
    spec = _load(args.input)
    result = oracle.grid_search(
        spec.objective,
        spec.constraints,
        spec.box,
        resolution=args.resolution,
        slack=args.slack,
        sense=spec.sense,
    )
    _emit(
        {
            "schema": "oracle/1",
            "input": args.input,
            "sense": spec.sense,
            "value": result.value,
            "argmin": list(result.argmin),
            "grid_resolution": result.grid_resolution,
            "refined": result.refined,
            "feasibility_slack": result.feasibility_slack,
        },
        args.output,
    )
    return EXIT_CERTIFIED


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semialg-opt",
        description="Globally optimize functions built from polynomials via "
        "{+, *, /, min, max, abs, roots} with certified moment relaxations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_orders=True):
        p.add_argument("input", help="problem file (.sa)")
        p.add_argument("--ball-M", type=float, default=None, dest="ball_M",
                       help="override the computed radius-squared bound")
        p.add_argument("-o", "--output", default=None, help="write JSON/text here")
        if with_orders:
            p.add_argument("--order", type=int, default=None, help="single relaxation order")

    for name in ("solve", "certify"):
        p = sub.add_parser(name, help="run the hierarchy and certify the optimum")
        common(p)
        p.add_argument("--orders", default=None, metavar="A..B", help="order range")
        p.add_argument("--tol", type=float, default=sdp.DEFAULT_TOL, help="solver tolerance")
        p.add_argument("--rank-tol", type=float, default=certify_mod.DEFAULT_RANK_TOL,
                       dest="rank_tol", help="relative rank tolerance")
        p.add_argument("--sparse", action="store_true", help="clique-sparse relaxation")
        p.add_argument("--seed", type=int, default=0, help="extraction seed")
        p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("lift", help="dump the lifted polynomial problem as JSON")
    common(p, with_orders=False)
    p.set_defaults(func=_cmd_lift)

    p = sub.add_parser("export-sdpa", help="write the relaxation in SDPA sparse format")
    common(p)
    p.add_argument("--sparse", action="store_true", help="clique-sparse relaxation")
    p.set_defaults(func=_cmd_export_sdpa)

    p = sub.add_parser("oracle", help="independent grid-search reference value")
    common(p, with_orders=False)
    p.add_argument("--resolution", type=int, default=101, help="grid points per axis")
    p.add_argument("--slack", type=float, default=1e-2, help="feasibility band for the grid")
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SemialgError as exc:
        json.dump({"error": {"code": exc.code, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_ERROR
    except OSError as exc:
        json.dump({"error": {"code": "io-error", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
