"""Benchmark-table harness: reruns the bundled problems over the published
row/column grids and emits CSV.

Desk scale filters rows to n <= 100 and p <= 20 so the whole suite stays
laptop-sized; the full grids (n up to 10000) sit behind an explicit
--allow-long flag in the CLI.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadSpec
from .problems import ProblemSpec, make_problem
from .solver import SolverConfig, solve

DESK_MAX_N = 100
DESK_MAX_P = 20

# |x|_0 in reports counts entries above the solver's stopping epsilon
ZERO_NORM_TOL = 1e-4


def zero_norm(x, tol: float = ZERO_NORM_TOL) -> int:
    return int(np.sum(np.abs(np.asarray(x)) > tol))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CNOPT_THREADS", "1")))
    except ValueError:
        return 1


def _run_cells(cells, worker):
    """Evaluate independent table cells, optionally in a thread pool;
    assembly order is by cell index either way."""
    n_threads = _threads()
    if n_threads == 1:
        return [worker(c) for c in cells]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(worker, cells))


def _ramp(total: int):
    return np.arange(1.0, total + 1.0)


def _solve_sparse(n: int, e: int, lam: float, max_outer: int = 12):
    form, part = make_problem(ProblemSpec("ex43", n=n, e=e, lam=lam))
    cfg = SolverConfig(eps=1e-4, sigma1=5.0, N=10.0, alpha0=0.0, w0=0.0,
                       max_outer=max_outer)
    return solve(form, part, cfg), form


def _solve_maxdiff(n: int, e: int, max_outer: int = 12):
    form, part = make_problem(ProblemSpec("ex44", n=n, e=e))
    cfg = SolverConfig(eps=1e-4, sigma1=5.0, N=10.0, alpha0=0.0,
                       w0=_ramp(form.dim), max_outer=max_outer)
    return solve(form, part, cfg), form


def _solve_chained(n: int, e: int, max_outer: int = 10):
    form, part = make_problem(ProblemSpec("ex45", n=n, e=e))
    cfg = SolverConfig(eps=1e-4, sigma1=5.0, N=100.0, alpha0=0.0,
                       w0=1.0, max_outer=max_outer)
    return solve(form, part, cfg), form


@dataclass(frozen=True)
class TableResult:
    table: int
    header: list
    rows: list

    def to_csv(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return f"{v:.6g}"
            return str(v)

        lines = [",".join(self.header)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def _desk_filter(pairs, scale: str):
    if scale == "paper":
        return list(pairs)
    return [(n, e) for n, e in pairs if n <= DESK_MAX_N and (n // e) <= DESK_MAX_P]


TABLE1_N = (5, 10, 30, 50, 100, 500, 1000)
TABLE1_LAMBDAS = (1.0, 10.0, 100.0, 500.0, 1000.0)
TABLE2_LAMBDAS = (10.0, 100.0, 1000.0, 2000.0, 3000.0, 5000.0, 8000.0,
                  10000.0, 15000.0, 20000.0, 21000.0)
TABLE3_N = (5, 10, 50, 250, 500, 1000)
TABLE4_N = (6, 30, 90, 300, 600, 1500)
TABLE5_EP = ((50, 1), (25, 2), (10, 5), (5, 10), (2, 25))
TABLE6_EP = ((20, 10), (10, 20), (5, 40), (4, 50), (2, 100))
TABLE7_EP = ((10, 100), (5, 200), (4, 250), (2, 500))
TABLE8_EP = ((5, 10), (2, 25), (5, 40), (2, 100), (5, 200), (2, 500),
             (5, 1000), (2, 2500), (5, 2000), (2, 5000))


def run_table(table: int, scale: str = "desk", max_n: Optional[int] = None) -> TableResult:
    """Run one benchmark table; returns header and rows ready for CSV."""
    if table not in range(1, 9):
        raise BadSpec(f"no table {table}")
    if scale not in ("desk", "paper"):
        raise BadSpec(f"unknown scale {scale!r}")

    if table == 1:
        ns = [n for n in TABLE1_N if scale == "paper" or (n <= DESK_MAX_N and n // 5 <= DESK_MAX_P)]
        if max_n:
            ns = [n for n in ns if n <= max_n]
        header = ["n"] + [f"lambda={lam:g}" for lam in TABLE1_LAMBDAS]
        cells = [(n, lam) for n in ns for lam in TABLE1_LAMBDAS]

        def worker(cell):
            n, lam = cell
            rep, _ = _solve_sparse(n, 5, lam)
            return zero_norm(rep.state.x)

        values = _run_cells(cells, worker)
        rows = []
        for i, n in enumerate(ns):
            rows.append([n] + values[i * len(TABLE1_LAMBDAS):(i + 1) * len(TABLE1_LAMBDAS)])
        return TableResult(1, header, rows)

    if table == 2:
        n = 100 if max_n is None else min(100, max_n)
        if n % 5:
            raise BadSpec("table 2 needs n divisible by 5")
        header = ["lambda", "zero_norm"]
        cells = list(TABLE2_LAMBDAS)

        def worker(lam):
            rep, _ = _solve_sparse(n, 5, lam)
            return zero_norm(rep.state.x)

        values = _run_cells(cells, worker)
        rows = [[lam, v] for lam, v in zip(TABLE2_LAMBDAS, values)]
        return TableResult(2, header, rows)

    if table in (3, 4):
        e = 5 if table == 3 else 3
        ns = TABLE3_N if table == 3 else TABLE4_N
        ns = [n for n in ns if scale == "paper" or (n <= DESK_MAX_N and n // e <= DESK_MAX_P)]
        if max_n:
            ns = [n for n in ns if n <= max_n]
        header = ["n", "k", "x", "x_spread", "f", "residual", "time_s"]

        def worker(n):
            import time

            t0 = time.perf_counter()
            rep, form = _solve_maxdiff(n, e)
            dt = time.perf_counter() - t0
            x = rep.state.x
            return [n, rep.state.k, float(x[0]), float(np.max(x) - np.min(x)),
                    float(rep.state.f_value), float(rep.state.residual), round(dt, 3)]

        rows = _run_cells(ns, worker)
        return TableResult(table, header, rows)

    if table in (5, 6, 7):
        pairs = {5: TABLE5_EP, 6: TABLE6_EP, 7: TABLE7_EP}[table]
        n_fixed = {5: 50, 6: 200, 7: 1000}[table]
        keep = _desk_filter([(n_fixed, e) for e, _ in pairs], scale)
        rows_ep = [(e, p) for (e, p) in pairs if (n_fixed, e) in keep]
        if max_n and n_fixed > max_n:
            rows_ep = []
        if not rows_ep:
            raise BadSpec(
                f"table {table} has no rows at desk scale (n={n_fixed}); rerun with --allow-long")
        header = ["e", "p", "f", "residual", "time_s"]

        def worker(cell):
            import time

            e, p = cell
            t0 = time.perf_counter()
            rep, form = _solve_chained(n_fixed, e)
            dt = time.perf_counter() - t0
            return [e, p, float(rep.state.f_value), float(rep.state.residual),
                    round(dt, 3)]

        rows = _run_cells(rows_ep, worker)
        return TableResult(table, header, rows)

    # table 8: objective of the tiled small solution vs the direct run
    pairs = [(e, p) for e, p in TABLE8_EP
             if scale == "paper" or (e * p <= DESK_MAX_N and p <= DESK_MAX_P)]
    if max_n:
        pairs = [(e, p) for e, p in pairs if e * p <= max_n]
    if not pairs:
        raise BadSpec("table 8 has no rows at desk scale; rerun with --allow-long")
    header = ["e", "p", "f_tiled", "f_solver"]

    base_cache: dict = {}

    def tiled_objective(e, p):
        n = e * p
        if e not in base_cache:
            rep_small, _ = _solve_chained(e, e)
            base_cache[e] = rep_small.state.x
        x = np.tile(base_cache[e], p)
        form, _ = make_problem(ProblemSpec("ex45", n=n, e=e))
        return float(form.f_direct(x))

    def worker(cell):
        e, p = cell
        f_tiled = tiled_objective(e, p)
        rep, _ = _solve_chained(e * p, e)
        return [e, p, f_tiled, float(rep.state.f_value)]

    rows = _run_cells(pairs, worker)
    return TableResult(8, header, rows)
