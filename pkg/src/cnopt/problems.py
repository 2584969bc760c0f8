"""Bundled nonsmooth/nonconvex benchmark problems in lifted convex form.

Each builder returns a :class:`~cnopt.core.CnForm` with closed-form
gradients and lifts plus a block :class:`~cnopt.solver.Partition` matching
the problem's natural decomposition:

``ex42``
    Two-variable least squares with half-power regularisation,
    (x1+x2-1)^2 + lam*(|x1|^(1/2) + |x2|^(1/2)).
``zero_norm_ls`` / ``ex43``
    Sparse least squares ||Ax-b||^2 + lam*||x||_0; ``ex43`` is the fixed
    instance with A = (1, 2, ..., n) and b = 2n.
``ex44``
    n*max_i |x_i| - sum_i |x_i|; every vector with equal |x_i| is optimal
    with value 0.
``ex45``
    Chained nonsmooth sum over consecutive pairs,
    sum_i (-x_i + 2(x_i^2+x_{i+1}^2-1) + 1.75|x_i^2+x_{i+1}^2-1|);
    adjacent blocks share one x coordinate, so partitions with p > 1 carry
    overlap links.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Array, CnForm, ConvexityGrade, ScalarField
from .errors import BadSpec, TooLarge
from .solver import OverlapLink, Partition

PROBLEM_NAMES = ("ex42", "zero_norm_ls", "ex43", "ex44", "ex45")


@dataclass(frozen=True)
class ProblemSpec:
    """Named problem instance; ``data`` is an (A, b) pair for zero_norm_ls."""

    name: str
    n: int = 2
    e: int = 1
    lam: float = 1.0
    data: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        if self.name not in PROBLEM_NAMES:
            raise BadSpec(f"unknown problem {self.name!r}")


def _box(n_rows_finite: Array, m: int) -> Array:
    inf = np.full((m, 2), np.inf)
    inf[:, 0] = -np.inf
    return np.vstack([n_rows_finite, inf])


# ---------------------------------------------------------------------------
# ex42: half-power regularised least squares, n = 2, m = 6, r = 6
# ---------------------------------------------------------------------------

def _make_ex42(lam: float):
    if lam <= 0:
        raise BadSpec("ex42 needs lam > 0")
    n, m = 2, 6
    dim = n + m

    def g_val(z):
        return (z[0] + z[1] - 1.0) ** 2 + lam * (z[2] + z[5])

    def g_grad(z):
        out = np.zeros(dim)
        s = 2.0 * (z[0] + z[1] - 1.0)
        out[0] = s
        out[1] = s
        out[2] = lam
        out[5] = lam
        return out

    def g_hv(z, d):
        out = np.zeros(dim)
        s = 2.0 * (d[0] + d[1])
        out[0] = s
        out[1] = s
        return out

    objective = ScalarField(dim, g_val, g_grad, g_hv)

    def quartic_pair(iy, ix_or_iy):
        # y_a^4 - y_b with y_a at index iy, y_b at ix_or_iy
        def val(z):
            return z[iy] ** 4 - z[ix_or_iy]

        def grad(z):
            out = np.zeros(dim)
            out[iy] = 4.0 * z[iy] ** 3
            out[ix_or_iy] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[iy] = 12.0 * z[iy] ** 2 * d[iy]
            return out

        return ScalarField(dim, val, grad, hv)

    def square_minus(ia, ib):
        def val(z):
            return z[ia] ** 2 - z[ib]

        def grad(z):
            out = np.zeros(dim)
            out[ia] = 2.0 * z[ia]
            out[ib] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[ia] = 2.0 * d[ia]
            return out

        return ScalarField(dim, val, grad, hv)

    # coordinates: z = (x1, x2, y1, y2, y3, y4, y5, y6)
    constraints = (
        quartic_pair(2, 4),   # y1^4 - y3
        square_minus(0, 4),   # x1^2 - y3
        square_minus(3, 2),   # y2^2 - y1
        quartic_pair(5, 7),   # y4^4 - y6
        square_minus(1, 7),   # x2^2 - y6
        square_minus(6, 5),   # y5^2 - y4
    )

    def lift_map(x):
        a1, a2 = abs(x[0]), abs(x[1])
        return np.array([a1 ** 0.5, a1 ** 0.25, x[0] ** 2,
                         a2 ** 0.5, a2 ** 0.25, x[1] ** 2])

    def lift_batch(X):
        a = np.abs(X)
        return np.column_stack([a[:, 0] ** 0.5, a[:, 0] ** 0.25, X[:, 0] ** 2,
                                a[:, 1] ** 0.5, a[:, 1] ** 0.25, X[:, 1] ** 2])

    def f_val(x):
        return (x[0] + x[1] - 1.0) ** 2 + lam * (abs(x[0]) ** 0.5 + abs(x[1]) ** 0.5)

    def f_grad(x):
        s = 2.0 * (x[0] + x[1] - 1.0)
        out = np.array([s, s])
        for i in range(2):
            a = abs(x[i])
            if a > 0:
                out[i] += lam * np.sign(x[i]) * 0.5 / np.sqrt(a)
        return out

    f_direct = ScalarField(n, f_val, f_grad)

    def f_batch(X):
        s = X[:, 0] + X[:, 1] - 1.0
        return s ** 2 + lam * (np.abs(X[:, 0]) ** 0.5 + np.abs(X[:, 1]) ** 0.5)

    B = np.zeros((dim, dim))
    B[:2, :2] = [[2.0, 2.0], [2.0, 2.0]]
    form = CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        lift=lift_map, lift_batch=lift_batch,
        domain_box=_box(np.tile([-2.0, 2.0], (n, 1)), m),
        grade=ConvexityGrade.constant_weak(B), exact=True,
        f_direct=f_direct, name=f"ex42(lam={lam:g})",
    )
    form = _attach_batches(form, f_batch=f_batch)
    partition = Partition(
        n=n, m=m,
        x_blocks=((0,), (1,)),
        y_blocks=((0, 1, 2), (3, 4, 5)),
        constraint_owner=(0, 0, 0, 1, 1, 1),
    )
    return form, partition


def _attach_batches(form: CnForm, f_batch=None, branch_batch=None) -> CnForm:
    from dataclasses import replace

    kw = {}
    if branch_batch is not None:
        kw["branch_batch"] = branch_batch
    if f_batch is not None:
        kw["f_batch"] = f_batch
    return replace(form, **kw) if kw else form


# ---------------------------------------------------------------------------
# zero-norm least squares (and ex43): m = 2n, r = 3n
# ---------------------------------------------------------------------------

def _make_zero_norm(A: Array, b: Array, lam: float, e: int, name: str, x_halfwidth: float = 3.0):
    if lam <= 0:
        raise BadSpec("zero-norm problems need lam > 0")
    A = np.atleast_2d(np.asarray(A, float))
    b = np.atleast_1d(np.asarray(b, float))
    n = A.shape[1]
    if A.shape[0] != b.size:
        raise BadSpec("A and b shapes disagree")
    if n % e:
        raise BadSpec("n must be divisible by the block width e")
    m = 2 * n
    dim = n + m
    AtA2 = 2.0 * (A.T @ A)

    # z = (x_1..x_n, u_1..u_n, w_1..w_n): u_i is the 0/1 support indicator,
    # w_i the auxiliary square.
    def g_val(z):
        x = z[:n]
        u = z[n:2 * n]
        r = A @ x - b
        return float(r @ r + lam * (u @ u))

    def g_grad(z):
        out = np.zeros(dim)
        x = z[:n]
        out[:n] = 2.0 * (A.T @ (A @ x - b))
        out[n:2 * n] = 2.0 * lam * z[n:2 * n]
        return out

    def g_hv(z, d):
        out = np.zeros(dim)
        out[:n] = AtA2 @ d[:n]
        out[n:2 * n] = 2.0 * lam * d[n:2 * n]
        return out

    objective = ScalarField(dim, g_val, g_grad, g_hv)

    def c_pair(i):
        xi, ui, wi = i, n + i, 2 * n + i

        def v1(z):
            return (z[xi] + z[ui] - 1.0) ** 2 - z[wi]

        def g1(z):
            out = np.zeros(dim)
            t = 2.0 * (z[xi] + z[ui] - 1.0)
            out[xi] = t
            out[ui] = t
            out[wi] = -1.0
            return out

        def h1(z, d):
            out = np.zeros(dim)
            t = 2.0 * (d[xi] + d[ui])
            out[xi] = t
            out[ui] = t
            return out

        def v2(z):
            return z[xi] ** 2 + (z[ui] - 1.0) ** 2 - z[wi]

        def g2(z):
            out = np.zeros(dim)
            out[xi] = 2.0 * z[xi]
            out[ui] = 2.0 * (z[ui] - 1.0)
            out[wi] = -1.0
            return out

        def h2(z, d):
            out = np.zeros(dim)
            out[xi] = 2.0 * d[xi]
            out[ui] = 2.0 * d[ui]
            return out

        def v3(z):
            return z[ui] ** 2 - z[ui]

        def g3(z):
            out = np.zeros(dim)
            out[ui] = 2.0 * z[ui] - 1.0
            return out

        def h3(z, d):
            out = np.zeros(dim)
            out[ui] = 2.0 * d[ui]
            return out

        return (ScalarField(dim, v1, g1, h1),
                ScalarField(dim, v2, g2, h2),
                ScalarField(dim, v3, g3, h3))

    pairs = [c_pair(i) for i in range(n)]
    constraints = tuple(p[0] for p in pairs) + tuple(p[1] for p in pairs) + tuple(p[2] for p in pairs)

    def lift_map(x):
        u = (x != 0.0).astype(float)
        w = np.where(u > 0.5, x ** 2, (x - 1.0) ** 2)
        return np.concatenate([u, w])

    def lift_branches(x):
        zeros = np.where(x == 0.0)[0]
        if zeros.size > 8:
            zeros = zeros[:8]
        base_u = (x != 0.0).astype(float)
        out = []
        for mask in range(1 << zeros.size):
            u = base_u.copy()
            for k, idx in enumerate(zeros):
                u[idx] = 1.0 if (mask >> k) & 1 else 0.0
            w = np.where(u > 0.5, x ** 2, (x - 1.0) ** 2)
            out.append(np.concatenate([u, w]))
        return out

    def branch_batch(X):
        # two sheets per coordinate exist only where x_i == 0; enumerate the
        # all-off sheet and per-coordinate flips (covers n <= 2 fully)
        N = X.shape[0]
        U0 = (X != 0.0).astype(float)
        outs = []

        def sheet(U):
            W = np.where(U > 0.5, X ** 2, (X - 1.0) ** 2)
            return np.hstack([U, W])

        outs.append((np.ones(N, bool), sheet(U0)))
        for i in range(X.shape[1]):
            mask = X[:, i] == 0.0
            if not mask.any():
                continue
            U = U0.copy()
            U[:, i] = 1.0
            outs.append((mask, sheet(U)))
        if X.shape[1] == 2:
            both = (X[:, 0] == 0.0) & (X[:, 1] == 0.0)
            if both.any():
                U = U0.copy()
                U[:, :2] = 1.0
                outs.append((both, sheet(U)))
        return outs

    def f_val(x):
        r = A @ x - b
        return float(r @ r + lam * np.count_nonzero(x))

    def f_grad(x):
        return 2.0 * (A.T @ (A @ x - b))

    f_direct = ScalarField(n, f_val, f_grad)

    def f_batch(X):
        R = X @ A.T - b
        return np.einsum("ij,ij->i", R, R) + lam * np.count_nonzero(X, axis=1)

    Bmat = np.zeros((dim, dim))
    Bmat[:n, :n] = AtA2
    Bmat[n:2 * n, n:2 * n] = 2.0 * lam * np.eye(n)
    form = CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        lift=lift_map, lift_branches=lift_branches,
        lift_batch=lambda X: np.hstack([(X != 0.0).astype(float),
                                        np.where(X != 0.0, X ** 2, (X - 1.0) ** 2)]),
        domain_box=_box(np.tile([-x_halfwidth, x_halfwidth], (n, 1)), m),
        grade=ConvexityGrade.constant_weak(Bmat), exact=False,
        f_direct=f_direct, name=name,
    )
    form = _attach_batches(form, f_batch=f_batch, branch_batch=branch_batch)

    p = n // e
    x_blocks = tuple(tuple(range(j * e, (j + 1) * e)) for j in range(p))
    y_blocks = tuple(tuple(range(j * e, (j + 1) * e)) + tuple(range(n + j * e, n + (j + 1) * e))
                     for j in range(p))
    owner = [0] * (3 * n)
    for i in range(n):
        blk = i // e
        owner[i] = blk
        owner[n + i] = blk
        owner[2 * n + i] = blk
    partition = Partition(n=n, m=m, x_blocks=x_blocks, y_blocks=y_blocks,
                          constraint_owner=tuple(owner))
    return form, partition


# ---------------------------------------------------------------------------
# ex44: n*max|x_i| - sum|x_i|; m = 2n + 1, r = 2n, 2n inequalities
# ---------------------------------------------------------------------------

def _make_ex44(n: int, e: int):
    if n % e:
        raise BadSpec("n must be divisible by the block width e")
    m = 2 * n + 1
    dim = n + m
    i_abs = lambda i: n + i            # |x_i| lift
    i_sq = lambda i: 2 * n + i         # x_i^2 lift
    i_max = 3 * n                      # shared max bound

    def g_val(z):
        return float(n * z[i_max] - np.sum(z[n:2 * n]))

    g_vec = np.zeros(dim)
    g_vec[n:2 * n] = -1.0
    g_vec[i_max] = n

    objective = ScalarField(dim, g_val, lambda z: g_vec.copy(),
                            lambda z, d: np.zeros(dim))

    def c_sq_abs(i):
        def val(z):
            return z[i_abs(i)] ** 2 - z[i_sq(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i_abs(i)] = 2.0 * z[i_abs(i)]
            out[i_sq(i)] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[i_abs(i)] = 2.0 * d[i_abs(i)]
            return out

        return ScalarField(dim, val, grad, hv)

    def c_sq_x(i):
        def val(z):
            return z[i] ** 2 - z[i_sq(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i] = 2.0 * z[i]
            out[i_sq(i)] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[i] = 2.0 * d[i]
            return out

        return ScalarField(dim, val, grad, hv)

    constraints = tuple(c_sq_abs(i) for i in range(n)) + tuple(c_sq_x(i) for i in range(n))

    def ineq_sign(i):
        def val(z):
            return -z[i_abs(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i_abs(i)] = -1.0
            return out

        return ScalarField(dim, val, grad, lambda z, d: np.zeros(dim))

    def ineq_max(i):
        def val(z):
            return z[i_abs(i)] - z[i_max]

        def grad(z):
            out = np.zeros(dim)
            out[i_abs(i)] = 1.0
            out[i_max] = -1.0
            return out

        return ScalarField(dim, val, grad, lambda z, d: np.zeros(dim))

    ineqs = tuple(ineq_sign(i) for i in range(n)) + tuple(ineq_max(i) for i in range(n))

    def lift_map(x):
        a = np.abs(x)
        return np.concatenate([a, x ** 2, [a.max()]])

    def f_val(x):
        a = np.abs(x)
        return float(n * a.max() - a.sum())

    def f_grad(x):
        a = np.abs(x)
        out = -np.sign(x)
        out[int(np.argmax(a))] += n * np.sign(x[int(np.argmax(a))])
        return out

    f_direct = ScalarField(n, f_val, f_grad)

    def f_batch(X):
        a = np.abs(X)
        return n * a.max(axis=1) - a.sum(axis=1)

    form = CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        ineq_constraints=ineqs, lift=lift_map,
        domain_box=_box(np.tile([-4.0, 4.0], (n, 1)), m),
        grade=ConvexityGrade.plain(), exact=False,
        f_direct=f_direct, name=f"ex44(n={n})",
    )
    form = _attach_batches(form, f_batch=f_batch)

    p = n // e
    x_blocks = tuple(tuple(range(j * e, (j + 1) * e)) for j in range(p))
    y_blocks = []
    for j in range(p):
        idx = list(range(j * e, (j + 1) * e)) + list(range(n + j * e, n + (j + 1) * e))
        if j == 0:
            idx.append(2 * n)  # the shared max bound lives in the first block
        y_blocks.append(tuple(idx))
    owner = [i // e for i in range(n)] * 2
    partition = Partition(n=n, m=m, x_blocks=x_blocks, y_blocks=tuple(y_blocks),
                          constraint_owner=tuple(owner))
    return form, partition


# ---------------------------------------------------------------------------
# ex45: chained pairwise nonsmooth sum; m = 3(n-1), r = 3(n-1)
# ---------------------------------------------------------------------------

def _make_ex45(n: int, e: int):
    if n < 2:
        raise BadSpec("ex45 needs n >= 2")
    if n % e:
        raise BadSpec("n must be divisible by the block width e")
    k = n - 1
    m = 3 * k
    dim = n + m
    i_v = lambda i: n + i          # pair value x_i^2 + x_{i+1}^2 - 1
    i_a = lambda i: n + k + i      # its absolute value
    i_s = lambda i: n + 2 * k + i  # its square

    def g_val(z):
        return float(-np.sum(z[:k]) + 2.0 * np.sum(z[n:n + k]) + 1.75 * np.sum(z[n + k:n + 2 * k]))

    g_vec = np.zeros(dim)
    g_vec[:k] = -1.0
    g_vec[n:n + k] = 2.0
    g_vec[n + k:n + 2 * k] = 1.75

    objective = ScalarField(dim, g_val, lambda z: g_vec.copy(),
                            lambda z, d: np.zeros(dim))

    def c_pair(i):
        def val(z):
            return z[i] ** 2 + z[i + 1] ** 2 - 1.0 - z[i_v(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i] = 2.0 * z[i]
            out[i + 1] = 2.0 * z[i + 1]
            out[i_v(i)] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[i] = 2.0 * d[i]
            out[i + 1] = 2.0 * d[i + 1]
            return out

        return ScalarField(dim, val, grad, hv)

    def c_abs_sq(i):
        def val(z):
            return z[i_a(i)] ** 2 - z[i_s(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i_a(i)] = 2.0 * z[i_a(i)]
            out[i_s(i)] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[i_a(i)] = 2.0 * d[i_a(i)]
            return out

        return ScalarField(dim, val, grad, hv)

    def c_val_sq(i):
        def val(z):
            return z[i_v(i)] ** 2 - z[i_s(i)]

        def grad(z):
            out = np.zeros(dim)
            out[i_v(i)] = 2.0 * z[i_v(i)]
            out[i_s(i)] = -1.0
            return out

        def hv(z, d):
            out = np.zeros(dim)
            out[i_v(i)] = 2.0 * d[i_v(i)]
            return out

        return ScalarField(dim, val, grad, hv)

    constraints = (tuple(c_pair(i) for i in range(k))
                   + tuple(c_abs_sq(i) for i in range(k))
                   + tuple(c_val_sq(i) for i in range(k)))

    def ineq_at(idx, shift):
        def val(z):
            return -z[idx] - shift

        def grad(z):
            out = np.zeros(dim)
            out[idx] = -1.0
            return out

        return ScalarField(dim, val, grad, lambda z, d: np.zeros(dim))

    ineqs = (tuple(ineq_at(i_v(i), 1.0) for i in range(k))
             + tuple(ineq_at(i_a(i), 0.0) for i in range(k))
             + tuple(ineq_at(i_s(i), 0.0) for i in range(k)))

    def lift_map(x):
        v = x[:-1] ** 2 + x[1:] ** 2 - 1.0
        return np.concatenate([v, np.abs(v), v ** 2])

    def f_val(x):
        v = x[:-1] ** 2 + x[1:] ** 2 - 1.0
        return float(np.sum(-x[:-1] + 2.0 * v + 1.75 * np.abs(v)))

    def f_grad(x):
        v = x[:-1] ** 2 + x[1:] ** 2 - 1.0
        coef = 4.0 + 3.5 * np.sign(v)
        out = np.zeros(n)
        out[:-1] += -1.0 + coef * x[:-1]
        out[1:] += coef * x[1:]
        return out

    f_direct = ScalarField(n, f_val, f_grad)

    def f_batch(X):
        V = X[:, :-1] ** 2 + X[:, 1:] ** 2 - 1.0
        return np.sum(-X[:, :-1] + 2.0 * V + 1.75 * np.abs(V), axis=1)

    form = CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        ineq_constraints=ineqs, lift=lift_map,
        domain_box=_box(np.tile([-2.0, 2.0], (n, 1)), m),
        grade=ConvexityGrade.plain(), exact=True,
        f_direct=f_direct, name=f"ex45(n={n})",
    )
    form = _attach_batches(form, f_batch=f_batch)

    p = n // e
    x_blocks = tuple(tuple(range(j * e, (j + 1) * e)) for j in range(p))
    y_blocks = []
    owner = [0] * (3 * k)
    for j in range(p):
        tr = [i for i in range(j * e, min((j + 1) * e, k))]
        y_blocks.append(tuple([i_v(i) - n for i in tr]
                              + [i_a(i) - n for i in tr]
                              + [i_s(i) - n for i in tr]))
        for i in tr:
            owner[i] = j
            owner[k + i] = j
            owner[2 * k + i] = j
    links = tuple(OverlapLink(x_index=(j + 1) * e, earlier=j, later=j + 1)
                  for j in range(p - 1))
    partition = Partition(n=n, m=m, x_blocks=x_blocks, y_blocks=tuple(y_blocks),
                          constraint_owner=tuple(owner), overlap_links=links)
    return form, partition


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def make_problem(spec: ProblemSpec):
    """Build the named problem; returns ``(form, partition)``."""
    if spec.name == "ex42":
        return _make_ex42(spec.lam)
    if spec.name == "ex43":
        a = np.arange(1, spec.n + 1, dtype=float).reshape(1, -1)
        b = np.array([2.0 * spec.n])
        return _make_zero_norm(a, b, spec.lam, spec.e, f"ex43(n={spec.n},lam={spec.lam:g})")
    if spec.name == "zero_norm_ls":
        if spec.data is None:
            raise BadSpec("zero_norm_ls needs (A, b) data")
        A, b = spec.data
        return _make_zero_norm(A, b, spec.lam, spec.e,
                               f"zero_norm_ls(n={np.atleast_2d(A).shape[1]},lam={spec.lam:g})")
    if spec.name == "ex44":
        return _make_ex44(spec.n, spec.e)
    if spec.name == "ex45":
        return _make_ex45(spec.n, spec.e)
    raise BadSpec(spec.name)


def direct_objective_batch(form: CnForm, X: Array) -> Array:
    """Vectorised f over rows of X (falls back to a Python loop)."""
    X = np.atleast_2d(np.asarray(X, float))
    if form.f_batch is not None:
        return np.asarray(form.f_batch(X), float)
    if form.f_direct is None:
        raise BadSpec("form has no direct objective")
    return np.array([form.f_direct(x) for x in X])


def brute_force_oracle(spec: ProblemSpec, box, grid_points_per_dim: int = 401):
    """Exhaustive grid minimum of the direct objective for n <= 3.

    Independent ground truth for the optimality checks; ties broken by the
    first grid point in row-major order (lexicographic in coordinates).
    """
    form, _ = make_problem(spec)
    n = form.n
    if n > 3:
        raise TooLarge("oracle restricted to n <= 3")
    box = np.asarray(box, float).reshape(n, 2)
    axes = [np.linspace(box[i, 0], box[i, 1], grid_points_per_dim) for i in range(n)]
    grids = np.meshgrid(*axes, indexing="ij")
    X = np.column_stack([g.ravel() for g in grids])
    vals = np.empty(X.shape[0])
    chunk = 200_000
    for s in range(0, X.shape[0], chunk):
        vals[s:s + chunk] = direct_objective_batch(form, X[s:s + chunk])
    k = int(np.argmin(vals))
    return X[k].copy(), float(vals[k])


def load_spec(path) -> ProblemSpec:
    """Read a problem spec from a JSON config.

    Keys: ``name`` (required), ``n``, ``e``, ``lambda``, ``seed`` and
    ``data`` (path of a CSV whose rows are [A | b] augmented).
    """
    cfg = json.loads(Path(path).read_text())
    data = None
    if cfg.get("data"):
        rows = []
        with open(Path(path).parent / cfg["data"], newline="") as fh:
            for row in csv.reader(fh):
                if row:
                    rows.append([float(v) for v in row])
        arr = np.asarray(rows, float)
        data = (arr[:, :-1], arr[:, -1])
    return ProblemSpec(
        name=cfg["name"],
        n=int(cfg.get("n", 2)),
        e=int(cfg.get("e", 1)),
        lam=float(cfg.get("lambda", 1.0)),
        data=data,
        seed=int(cfg.get("seed", 0)),
    )
