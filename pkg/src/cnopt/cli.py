"""Command-line front end.

Three subcommands:

``cnopt solve``   run the decomposed augmented-Lagrangian solver on a named
                  or configured problem and write a JSON report;
``cnopt check``   run an optimality check at a candidate point and write a
                  verdict JSON;
``cnopt table``   reproduce one of the benchmark tables as CSV.

Exit codes: solve 0 on optimal/approximate, 2 on iteration cap or
divergence; check 0 certified, 3 inconclusive, 4 refuted; any usage or
validation problem exits 1.  Report files are deterministic: reruns with
an identical manifest are byte-identical (wall times go to stderr only).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import CERTIFIED, INCONCLUSIVE, REFUTED
from .errors import CnoptError, LiftInfeasible
from .optimality import candidate, falsify_k_set, kkt_residual, lcnp_condition, wcnp_condition
from .problems import ProblemSpec, load_spec, make_problem
from .solver import SolverConfig, solve
from .tables import run_table

_EXIT_BY_STATUS = {"optimal": 0, "approximate": 0, "max_outer_iters": 2, "diverged": 2}
_EXIT_BY_VERDICT = {CERTIFIED: 0, INCONCLUSIVE: 3, REFUTED: 4}


def _manifest(command: str, payload: dict, seed: int) -> dict:
    body = {"command": command, "spec": payload, "seed": seed, "version": __version__}
    digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    return {**body, "content_hash": digest}


def _parse_vector(text: str) -> np.ndarray:
    path = Path(text)
    if path.suffix == ".csv" and path.exists():
        vals = []
        for line in path.read_text().splitlines():
            vals += [float(v) for v in line.replace(",", " ").split()]
        return np.asarray(vals, float)
    return np.array([float(v) for v in text.split(",")], float)


def _spec_from_args(args) -> ProblemSpec:
    if getattr(args, "config", None):
        return load_spec(args.config)
    return ProblemSpec(name=args.problem, n=args.n, e=args.e, lam=args.lam,
                       seed=args.seed)


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=["ex42", "ex43", "zero_norm_ls", "ex44", "ex45"])
    p.add_argument("--config", help="JSON problem config mirroring the flags")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--e", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)


def _json_ready(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj.ravel()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_json(path: str, payload: dict) -> None:
    text = json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_solve(args) -> int:
    spec = _spec_from_args(args)
    form, partition = make_problem(spec)
    w0 = None
    if args.w0 is not None:
        vec = _parse_vector(args.w0)
        w0 = float(vec[0]) if vec.size == 1 else vec
    cfg = SolverConfig(eps=args.eps, sigma1=args.sigma1, N=args.bigN,
                       alpha0=args.alpha0, w0=w0, max_outer=args.max_outer)
    t0 = time.perf_counter()
    report = solve(form, partition, cfg)
    wall = time.perf_counter() - t0
    manifest = _manifest("solve", {
        "problem": spec.name, "n": spec.n, "e": spec.e, "lambda": spec.lam,
        "eps": cfg.eps, "sigma1": cfg.sigma1, "N": cfg.N, "alpha0": args.alpha0,
        "w0": args.w0, "max_outer": cfg.max_outer,
    }, args.seed)
    payload = {
        "manifest": manifest,
        "status": report.status,
        "x": report.state.x,
        "f_value": report.state.f_value,
        "residual": report.state.residual,
        "iterations": report.state.k,
        "trace": [{"k": row.k, "residual": row.residual, "f_value": row.f_value,
                   "g_value": row.g_value, "hk": row.hk} for row in report.trace],
    }
    if args.out_format == "csv":
        lines = ["k,residual,f_value,g_value,hk"]
        lines += [f"{r.k},{r.residual:.10g},{r.f_value:.10g},{r.g_value:.10g},{r.hk:.10g}"
                  for r in report.trace]
        text = "\n".join(lines) + "\n"
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text)
    else:
        _write_json(args.out, payload)
    print(f"status={report.status} f={report.state.f_value:.6g} "
          f"residual={report.state.residual:.3e} k={report.state.k} "
          f"wall={wall:.2f}s", file=sys.stderr)
    return _EXIT_BY_STATUS[report.status]


def cmd_check(args) -> int:
    spec = _spec_from_args(args)
    form, _ = make_problem(spec)
    x = _parse_vector(args.x)
    y = _parse_vector(args.y) if args.y else None
    try:
        pt = candidate(form, x, y)
    except LiftInfeasible as exc:
        print(f"infeasible candidate: {exc}", file=sys.stderr)
        return 1
    method = args.method
    result: dict = {"method": method}
    if method == "wcnp":
        verdict, qp = wcnp_condition(form, pt)
        result["multipliers"] = qp.multipliers
        result["residuals"] = {
            "stationarity": verdict.info.get("stationarity"),
            "cone_value": qp.value,
            "set_model_min": verdict.info.get("set_model_min"),
            "kkt": kkt_residual(form, pt, qp.multipliers, d_star=qp.d_star),
        }
    elif method == "lcnp":
        verdict = lcnp_condition(form, pt)
    elif method in ("kw", "ku", "kc"):
        verdict = falsify_k_set(form, pt, method, n_samples=args.samples,
                                seed=args.seed)
    else:
        print(f"unknown method {method}", file=sys.stderr)
        return 1
    result["verdict"] = verdict.status
    if verdict.witness is not None:
        result["witness"] = verdict.witness
    manifest = _manifest("check", {
        "problem": spec.name, "n": spec.n, "e": spec.e, "lambda": spec.lam,
        "x": [float(v) for v in x], "method": method, "samples": args.samples,
    }, args.seed)
    result["manifest"] = manifest
    _write_json(args.out, result)
    print(f"verdict={verdict.status}", file=sys.stderr)
    return _EXIT_BY_VERDICT[verdict.status]


def cmd_table(args) -> int:
    if args.scale == "paper" and not args.allow_long:
        print("paper scale runs for hours; pass --allow-long to confirm", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    result = run_table(args.table, scale=args.scale, max_n=args.max_n)
    text = result.to_csv()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    print(f"table {args.table} ({args.scale}) in {time.perf_counter() - t0:.1f}s",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cnopt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"cnopt {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    ps = sub.add_parser("solve", help="run the decomposed solver")
    _add_problem_flags(ps)
    ps.add_argument("--eps", type=float, default=1e-4)
    ps.add_argument("--sigma1", type=float, default=5.0)
    ps.add_argument("--bigN", type=float, default=10.0)
    ps.add_argument("--w0", help="scalar fill or csv path / comma list")
    ps.add_argument("--alpha0", type=float, default=0.0)
    ps.add_argument("--max-outer", type=int, default=30)
    ps.add_argument("--out", default="-")
    ps.add_argument("--out-format", choices=["json", "csv"], default="json")
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("check", help="optimality checks at a candidate")
    _add_problem_flags(pc)
    pc.add_argument("--x", required=True, help="comma-separated values or csv path")
    pc.add_argument("--y", help="optional lifted point (default: lift of x)")
    pc.add_argument("--method", required=True, choices=["wcnp", "lcnp", "kw", "ku", "kc"])
    pc.add_argument("--samples", type=int, default=10000)
    pc.add_argument("--out", default="-")
    pc.set_defaults(func=cmd_check)

    pt = sub.add_parser("table", help="reproduce a benchmark table")
    pt.add_argument("--table", type=int, required=True)
    pt.add_argument("--scale", choices=["desk", "paper"], default="desk")
    pt.add_argument("--allow-long", action="store_true")
    pt.add_argument("--max-n", type=int, help="extra row cap for quick runs")
    pt.add_argument("--out", default="-")
    pt.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract here is 1
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (CnoptError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
