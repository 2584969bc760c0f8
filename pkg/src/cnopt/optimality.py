"""Global-optimality certificates for lifted convex forms.

All checks here are three-valued (:data:`~cnopt.core.CERTIFIED`,
:data:`~cnopt.core.INCONCLUSIVE`, :data:`~cnopt.core.REFUTED`): the
underlying conditions are sufficient, so a failed check never claims
non-optimality.

Two complementary mechanisms are implemented.  Direction subproblems
minimise a first- or second-order model of the lifted objective over the
cone of constraint-decreasing directions; a nonnegative optimum certifies
a global minimiser.  Set falsification instead samples the lifted
constraint set itself and looks for points where the model goes strictly
negative; an empty search certifies nothing but a found witness refutes
the corresponding emptiness condition.

The quadratic direction check runs in two layers.  Over the full
direction cone the model minimum is frequently negative even at a true
optimiser (the cone ignores the curvature of the constraint set), so a
negative cone optimum falls back to minimising the same model over the
lift-parameterised constraint set inside the domain box; nonnegativity
there certifies global optimality over the box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .core import (Array, CERTIFIED, CnForm, FEAS_TOL, GRADE_UNIFORM, INCONCLUSIVE,
                   Verdict, constraint_residual)
from .errors import GradeMismatch, LiftInfeasible, NoLift, NotDecomposable
from .inner import ConeQpResult, cone_lp_certificate, solve_cone_qp
from .solver import Partition, constraint_support

# Numerical zero for "model >= 0" verdicts, one order below the inner
# stationarity tolerance; witnesses must beat the stricter -1e-10 margin
# so roundoff at a flat boundary is never reported as a counterexample.
CERT_TOL = -1e-9
WITNESS_TOL = -1e-10


@dataclass(frozen=True)
class CandidatePoint:
    """A feasible lifted point at which optimality is examined."""

    x: Array
    y: Array
    in_Xf: bool = True

    @property
    def z(self) -> Array:
        return np.concatenate([self.x, self.y])


def candidate(form: CnForm, x: Array, y: Optional[Array] = None,
              feas_tol: float = FEAS_TOL) -> CandidatePoint:
    """Build a validated candidate; y defaults to the lift of x."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.asarray(form.lift(x), float) if y is None else np.atleast_1d(np.asarray(y, float))
    _, res = constraint_residual(form, x, y)
    if res > feas_tol:
        raise LiftInfeasible(f"candidate residual {res:.3e} exceeds {feas_tol:g}")
    in_xf = True
    if form.f_direct is not None:
        in_xf = abs(form.objective(form.point(x, y)) - form.f_direct(x)) <= 1e-6
    return CandidatePoint(x=x, y=y, in_Xf=in_xf)


@dataclass(frozen=True)
class DirectionCone:
    """Rows of constraint gradients at a candidate.

    With ``equality_mode`` the rows are enforced as equalities (the
    tangent subspace) instead of the one-sided cone.
    """

    A: Array
    equality_mode: bool = False

    @staticmethod
    def at(form: CnForm, pt: CandidatePoint, equality_mode: bool = False) -> "DirectionCone":
        rows = np.array([c.grad_at(pt.z) for c in form.constraints])
        return DirectionCone(A=rows, equality_mode=equality_mode)

    def inequality_rows(self) -> Array:
        """Halfspace representation; equality mode stacks +-rows."""
        if self.equality_mode:
            return np.vstack([self.A, -self.A])
        return self.A


def model_coefficients(form: CnForm, pt: CandidatePoint, kind: str):
    """(gradient, curvature matrix) of the direction model at the candidate.

    kind "kw" uses the grade's curvature minorant, "ku" the uniform
    rho_bar * I, "kc" no curvature at all.
    """
    q = form.objective.grad_at(pt.z)
    dim = form.dim
    if kind == "kc":
        return q, np.zeros((dim, dim))
    if kind == "ku":
        if form.grade.kind != GRADE_UNIFORM:
            raise GradeMismatch("uniform model needs a uniform grade (rho_bar)")
        return q, form.grade.rho_bar * np.eye(dim)
    if kind == "kw":
        return q, form.grade.curvature_at(pt.z, dim)
    raise ValueError(f"unknown model kind {kind!r}")


def model_values(q: Array, B: Array, Z: Array, z_star: Array) -> Array:
    """q'd + 0.5 d'Bd for every row of Z, d = row - z_star."""
    D = np.atleast_2d(Z) - z_star
    vals = D @ q
    if B is not None and np.any(B):
        vals = vals + 0.5 * np.einsum("ij,jk,ik->i", D, B, D)
    return vals


def _lift_sheets(form: CnForm, X: Array):
    """Yield (mask, Z) pairs covering the lift branches over rows of X."""
    X = np.atleast_2d(np.asarray(X, float))
    N = X.shape[0]
    if form.branch_batch is not None:
        for mask, Y in form.branch_batch(X):
            yield np.asarray(mask, bool), np.hstack([X, Y])
        return
    if form.lift_batch is not None:
        yield np.ones(N, bool), np.hstack([X, form.lift_batch(X)])
        return
    Z = np.empty((N, form.dim))
    extra = []
    for i, x in enumerate(X):
        branches = form.all_lifts(x)
        Z[i] = np.concatenate([x, branches[0]])
        for y in branches[1:]:
            extra.append(np.concatenate([x, y]))
    yield np.ones(N, bool), Z
    if extra:
        yield np.ones(len(extra), bool), np.array(extra)


def restricted_model_min(form: CnForm, pt: CandidatePoint, kind: str,
                         box: Optional[Array] = None, grid: int = 401,
                         polish: bool = True, multistarts: int = 48,
                         seed: int = 0):
    """Minimum of the direction model over the lift-parameterised
    constraint set inside the box.

    Exhaustive grid plus local polish for one or two x dimensions,
    multistart local search (with sparse-support starts) above that.
    Returns (min_value, argmin_z).
    """
    q, B = model_coefficients(form, pt, kind)
    z_star = pt.z
    box = form.x_box() if box is None else np.asarray(box, float).reshape(form.n, 2)

    def sheet_min(X):
        best_v, best_z = np.inf, None
        for mask, Z in _lift_sheets(form, X):
            if not mask.any():
                continue
            vals = model_values(q, B, Z[mask], z_star)
            k = int(np.argmin(vals))
            if vals[k] < best_v:
                best_v = float(vals[k])
                best_z = Z[mask][k]
        return best_v, best_z

    if form.n <= 2:
        axes = [np.linspace(box[i, 0], box[i, 1], grid) for i in range(form.n)]
        grids = np.meshgrid(*axes, indexing="ij")
        X = np.column_stack([g.ravel() for g in grids])
        best_v, best_z = sheet_min(X)
    else:
        rng = np.random.default_rng(seed)
        X = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((multistarts, form.n))
        X[rng.random(X.shape) < 0.4] = 0.0
        X = np.vstack([X, pt.x, np.zeros(form.n)])
        best_v, best_z = sheet_min(X)

    if polish and best_z is not None:
        def on_lift(xv):
            vals = [model_values(q, B, np.concatenate([xv, y])[None, :], z_star)[0]
                    for y in form.all_lifts(xv)]
            return min(vals)

        res = scipy_minimize(on_lift, best_z[: form.n], method="Nelder-Mead",
                             options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 2000})
        if res.fun < best_v and np.all(res.x >= box[:, 0] - 1e-12) \
                and np.all(res.x <= box[:, 1] + 1e-12):
            best_v = float(res.fun)
            y = min(form.all_lifts(res.x),
                    key=lambda yy: model_values(q, B, np.concatenate([res.x, yy])[None, :], z_star)[0])
            best_z = np.concatenate([res.x, y])
    return best_v, best_z


def wcnp_condition(form: CnForm, pt: CandidatePoint, grid: int = 401,
                   box: Optional[Array] = None):
    """Quadratic-model sufficient condition for a global minimiser.

    Layer one solves the model over the cone of constraint-decreasing
    directions; a nonnegative optimum certifies immediately and the KKT
    data (direction, multipliers, stationarity residual) is returned
    either way.  When the cone optimum is negative or unbounded, layer two
    minimises the same model over the lifted constraint set restricted to
    the domain box; nonnegativity there certifies global optimality over
    the box, anything else is inconclusive.
    """
    q, B = model_coefficients(form, pt, "kw")
    cone = DirectionCone.at(form, pt)
    qp = solve_cone_qp(q, B, cone.inequality_rows())
    info = {
        "cone_value": qp.value,
        "multipliers": qp.multipliers,
        "stationarity": _stationarity_residual(q, B, qp, cone.A),
        "slater_margin": _slater_margin(cone.A),
    }
    if qp.status == "optimal" and qp.value >= CERT_TOL:
        return Verdict(CERTIFIED, info=info), qp
    set_min, set_arg = restricted_model_min(form, pt, "kw", box=box, grid=grid)
    info["set_model_min"] = set_min
    if set_min >= CERT_TOL:
        return Verdict(CERTIFIED, info=info), qp
    info["set_model_argmin"] = set_arg
    return Verdict(INCONCLUSIVE, info=info), qp


def _stationarity_residual(q: Array, B: Array, qp: ConeQpResult, A: Array) -> float:
    if not np.all(np.isfinite(qp.d_star)):
        return np.nan
    vec = B @ qp.d_star + q + A.T @ qp.multipliers
    return float(np.linalg.norm(vec))


def _slater_margin(A: Array) -> float:
    """Optimum of min(max_i a_i'd) over the unit box: negative when some
    direction strictly decreases every constraint (reported, not enforced)."""
    from scipy.optimize import linprog

    r, dim = A.shape
    if r == 0:
        return -1.0
    c = np.zeros(dim + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A, -np.ones((r, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(r),
                  bounds=[(-1, 1)] * dim + [(None, None)], method="highs")
    return float(res.fun) if res.success else np.nan


def lcnp_condition(form: CnForm, pt: CandidatePoint) -> Verdict:
    """Linear-model sufficient condition over the direction cone.

    Certifies when no feasible descent direction exists; otherwise returns
    inconclusive together with the found descent direction (the condition
    is sufficient only, so no claim of non-optimality is made).
    """
    q, _ = model_coefficients(form, pt, "kc")
    cone = DirectionCone.at(form, pt)
    verdict = cone_lp_certificate(q, cone.inequality_rows())
    if verdict.is_certified:
        return Verdict.certified(**verdict.info)
    return Verdict(INCONCLUSIVE, witness=verdict.witness,
                   info={"descent_direction": verdict.witness, **verdict.info})


def kkt_residual(form: CnForm, pt: CandidatePoint, alpha: Array,
                 d_star: Optional[Array] = None, normalized: bool = False) -> float:
    """Norm of the stationarity vector grad g + sum_i alpha_i grad g_i.

    With ``d_star`` the curvature term B d* is included.  The normalised
    variant rescales (1, alpha) onto the simplex 1*eta + sum|alpha_i| = 1,
    which keeps the residual meaningful when multipliers grow with the
    penalty.
    """
    z = pt.z
    vec = form.objective.grad_at(z)
    alpha = np.asarray(alpha, float)
    for a, c in zip(alpha, form.constraints):
        vec = vec + a * c.grad_at(z)
    if d_star is not None:
        _, B = model_coefficients(form, pt, "kw")
        vec = vec + B @ np.asarray(d_star, float)
    if normalized:
        gamma = 1.0 + float(np.sum(np.abs(alpha)))
        return float(np.linalg.norm(vec) / gamma)
    return float(np.linalg.norm(vec))


def falsify_k_set(form: CnForm, pt: CandidatePoint, kind: str,
                  box: Optional[Array] = None, n_samples: int = 10000,
                  radius: Optional[float] = None, seed: int = 0) -> Verdict:
    """Sampling falsification of the model-nonnegativity condition.

    Draws points of the lifted constraint set (sampling x in the box,
    enumerating every lift branch, including sparse-support patterns so
    measure-zero sheets are reachable) and evaluates the direction model
    of the requested kind.  A strictly negative sample is a witness that
    the corresponding set intersection is nonempty (refuted); otherwise
    inconclusive, since sampling cannot prove emptiness.  With ``radius``
    only points within that distance of the candidate count (the local
    variant of the condition).
    """
    if form.lift is None:
        raise NoLift("falsification needs a lift")
    q, B = model_coefficients(form, pt, kind)
    z_star = pt.z
    box = form.x_box() if box is None else np.asarray(box, float).reshape(form.n, 2)
    if radius is not None:
        lo = np.maximum(box[:, 0], pt.x - radius)
        hi = np.minimum(box[:, 1], pt.x + radius)
        box = np.column_stack([lo, hi])
    rng = np.random.default_rng(seed)
    batch = 4096
    drawn = 0
    while drawn < n_samples:
        nb = min(batch, n_samples - drawn)
        X = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((nb, form.n))
        # half the batch gets a random sparse support so that lift sheets
        # existing only at exact zeros are reachable
        sparse = rng.random(nb) < 0.5
        mask0 = rng.random((nb, form.n)) < 0.5
        X[sparse] = np.where(mask0[sparse], 0.0, X[sparse])
        drawn += nb
        for mask, Z in _lift_sheets(form, X):
            if not mask.any():
                continue
            Zm = Z[mask]
            if radius is not None:
                keep = np.linalg.norm(Zm - z_star, axis=1) <= radius
                Zm = Zm[keep]
                if not Zm.shape[0]:
                    continue
            vals = model_values(q, B, Zm, z_star)
            k = int(np.argmin(vals))
            if vals[k] < WITNESS_TOL:
                witness = Zm[k]
                _, res = constraint_residual(form, witness[: form.n], witness[form.n:])
                if res <= FEAS_TOL:
                    return Verdict.refuted(witness, model_value=float(vals[k]),
                                           samples_used=drawn)
    return Verdict.inconclusive(samples=n_samples)


def blockwise_condition(form: CnForm, partition: Partition, pt: CandidatePoint):
    """Per-block sufficient conditions with every other block frozen.

    For each block the quadratic model restricted to the block (gradient
    slice, block-diagonal curvature slice, cone rows of the block's own
    constraints) is checked exactly like the monolithic condition: cone
    subproblem first, then the model minimum over the block's slice of
    the lifted constraint set.  The aggregate certifies only when every
    block does; by the cone product identity of decomposable forms the
    per-block cones multiply out to the full direction cone.

    Raises NotDecomposable when any constraint straddles blocks.
    """
    probes = [pt.z]
    rng = np.random.default_rng(5)
    box = form.x_box()
    for _ in range(3):
        x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(form.n)
        y = 0.25 + 0.5 * rng.random(form.m)
        probes.append(form.point(x, y))
    block_sets = [set(partition.block_indices(j).tolist()) for j in range(partition.p)]
    for i, c in enumerate(form.constraints):
        owner = partition.constraint_owner[i]
        support = set(constraint_support(c, probes).tolist())
        if not support <= block_sets[owner]:
            raise NotDecomposable(f"constraint {i} straddles blocks")

    q, B = model_coefficients(form, pt, "kw")
    verdicts = []
    for j in range(partition.p):
        idx = partition.block_indices(j)
        qj = q[idx]
        Bj = B[np.ix_(idx, idx)]
        rows = np.array([form.constraints[i].grad_at(pt.z)[idx]
                         for i in partition.owned_constraints(j)])
        if rows.size == 0:
            rows = rows.reshape(0, idx.size)
        qp = solve_cone_qp(qj, Bj, rows)
        if qp.status == "optimal" and qp.value >= CERT_TOL:
            verdicts.append(Verdict.certified(block=j, cone_value=qp.value))
            continue
        set_min = _block_restricted_min(form, partition, j, pt, q, B)
        if set_min >= CERT_TOL:
            verdicts.append(Verdict.certified(block=j, set_model_min=set_min))
        else:
            verdicts.append(Verdict.inconclusive(block=j, set_model_min=set_min,
                                                 cone_value=qp.value))
    if all(v.is_certified for v in verdicts):
        aggregate = Verdict.certified(blocks=partition.p)
    else:
        bad = [v.info.get("block") for v in verdicts if not v.is_certified]
        aggregate = Verdict.inconclusive(failed_blocks=bad)
    return verdicts, aggregate


def _block_restricted_min(form: CnForm, partition: Partition, j: int,
                          pt: CandidatePoint, q: Array, B: Array,
                          grid: int = 801) -> float:
    """Model minimum over the block's slice of the lifted set, other
    blocks pinned at the candidate."""
    idx = partition.block_indices(j)
    qj = q[idx]
    Bj = B[np.ix_(idx, idx)]
    xj = list(partition.x_blocks[j])
    box = form.x_box()[xj]

    def eval_at(xs):
        best = np.inf
        x_full = pt.x.copy()
        for row in np.atleast_2d(xs):
            x_full[xj] = row
            for y in form.all_lifts(x_full):
                z = np.concatenate([x_full, y])
                d = (z - pt.z)[idx]
                v = float(qj @ d + 0.5 * d @ Bj @ d)
                best = min(best, v)
        return best

    if len(xj) <= 2:
        axes = [np.linspace(box[i, 0], box[i, 1], grid) for i in range(len(xj))]
        grids = np.meshgrid(*axes, indexing="ij")
        X = np.column_stack([g.ravel() for g in grids])
    else:
        rng = np.random.default_rng(13 + j)
        X = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((64, len(xj)))
        X[rng.random(X.shape) < 0.4] = 0.0
        X = np.vstack([X, pt.x[xj]])
    best = eval_at(X)

    def single(xs):
        return eval_at(xs.reshape(1, -1))

    res = scipy_minimize(single, pt.x[xj], method="Nelder-Mead",
                         options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 1000})
    best = min(best, float(res.fun))
    return best
