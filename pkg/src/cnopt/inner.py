"""Inner solvers: smooth unconstrained minimisation and small cone-constrained
direction subproblems.

The smooth minimiser is a limited-memory quasi-Newton loop with Armijo
backtracking; the cone QP uses projected gradient steps with a Dykstra
projection onto the halfspace intersection plus a trust box that exposes
recession directions.  Both are meant for the small dense subproblems this
package generates, not for large-scale work.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from .core import Array, REFUTED, ScalarField, Verdict
from .errors import LineSearchFailed, NotPsd


@dataclass(frozen=True)
class InnerConfig:
    tol_grad: float = 1e-8
    max_iters: int = 5000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    memory: int = 10


def _two_loop(g: Array, s_hist, y_hist, rho_hist) -> Array:
    """Standard L-BFGS two-loop recursion for H*g."""
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / max(y @ y, 1e-300)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def minimize_smooth(field: ScalarField, x0: Array, cfg: InnerConfig = InnerConfig()):
    """Minimise a smooth field from x0.

    Returns (x, value, grad_norm).  The value sequence is non-increasing;
    the loop stops when the gradient norm drops below ``cfg.tol_grad`` or
    the iteration cap is reached, in which case the final gradient norm is
    simply reported.  Raises LineSearchFailed when backtracking cannot make
    progress against the reported gradient, or the field falls below -1e50
    (unbounded ray).

    Fields that carry a Hessian-vector product first get a trust-region
    Newton pass (much faster on stiff penalty subproblems); the
    quasi-Newton loop then polishes with a reduced iteration budget, or
    takes over entirely when no curvature product is available.
    """
    x = np.asarray(x0, float)
    if field.hess_vec is not None:
        x = _trust_newton_pass(field, x, cfg)
        polish = InnerConfig(tol_grad=cfg.tol_grad,
                             max_iters=min(cfg.max_iters, 300),
                             armijo_c=cfg.armijo_c, backtrack=cfg.backtrack,
                             memory=cfg.memory)
        return _lbfgs_loop(field, x, polish)
    return _lbfgs_loop(field, x, cfg)


def _trust_newton_pass(field: ScalarField, x0: Array, cfg: InnerConfig) -> Array:
    from scipy.optimize import minimize as scipy_minimize

    try:
        res = scipy_minimize(field.value, x0, jac=field.grad, hessp=field.hess_vec,
                             method="trust-ncg",
                             options={"gtol": cfg.tol_grad, "maxiter": cfg.max_iters})
    except Exception:
        return np.asarray(x0, float)
    if np.all(np.isfinite(res.x)) and np.isfinite(res.fun) and res.fun <= field(x0):
        return np.asarray(res.x, float)
    return np.asarray(x0, float)


def _lbfgs_loop(field: ScalarField, x0: Array, cfg: InnerConfig):
    x = np.asarray(x0, float).copy()
    f = field(x)
    g = field.grad_at(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise LineSearchFailed("non-finite value or gradient at the start point")

    s_hist: deque = deque(maxlen=cfg.memory)
    y_hist: deque = deque(maxlen=cfg.memory)
    rho_hist: deque = deque(maxlen=cfg.memory)

    gn = float(np.linalg.norm(g))
    for _ in range(cfg.max_iters):
        if gn <= cfg.tol_grad:
            break
        with np.errstate(all="ignore"):
            d = -_two_loop(g, s_hist, y_hist, rho_hist)
            dg = float(d @ g)
        dn = float(np.linalg.norm(d))
        if not np.all(np.isfinite(d)) or dg >= -1e-12 * gn * dn:
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
            d = -g
            dg = -gn * gn
        t = 1.0 if s_hist else min(1.0, 1.0 / max(gn, 1.0))
        ft = None
        accepted = False
        backtracks = 0
        for backtracks in range(80):
            xt = x + t * d
            ft = field(xt)
            if np.isfinite(ft) and ft <= f + cfg.armijo_c * t * dg:
                accepted = True
                break
            if not np.isfinite(ft):
                t *= 0.1
                continue
            # quadratic interpolation of the step, clipped into
            # [backtrack^2, backtrack] * t to keep progress guaranteed
            denom = 2.0 * (ft - f - t * dg)
            t_new = -dg * t * t / denom if denom > 0 else cfg.backtrack * t
            t = min(max(t_new, cfg.backtrack * cfg.backtrack * t), cfg.backtrack * t)
        if not accepted:
            # At machine precision the Armijo test can fail at a perfectly
            # good stationary point; only treat it as an error when the
            # predicted decrease was meaningful.
            if abs(dg) * t > 1e4 * np.finfo(float).eps * max(abs(f), 1.0):
                raise LineSearchFailed("no acceptable step along the computed direction")
            break
        gt = field.grad_at(xt)
        if not np.all(np.isfinite(gt)):
            raise LineSearchFailed("non-finite gradient at an accepted step")
        s = xt - x
        yv = gt - g
        sy = float(s @ yv)
        if sy > 1e-8 * np.linalg.norm(s) * max(np.linalg.norm(yv), 1e-300):
            s_hist.append(s)
            y_hist.append(yv)
            rho_hist.append(1.0 / sy)
        elif backtracks > 20:
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
        x, f, g = xt, float(ft), gt
        gn = float(np.linalg.norm(g))
        if f < -1e50:
            raise LineSearchFailed("field appears unbounded below")
    return x, f, gn


STATUS_OPTIMAL = "optimal"
STATUS_UNBOUNDED = "unbounded"
STATUS_MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class ConeQpResult:
    """Solution data of a cone-constrained quadratic direction subproblem.

    For status ``unbounded`` the field ``d_star`` carries the recession
    direction (scaled to unit sup-norm) and ``value`` is -inf.
    """

    d_star: Array
    value: float
    multipliers: Array
    status: str
    stationarity: float = np.nan


def _dykstra_project(d0: Array, A: Array, radius: float, cycles: int = 60, tol: float = 1e-13) -> Array:
    """Project onto {d : A d <= 0, |d|_inf <= radius} (Dykstra's alternating
    halfspace projections; the box is handled as one clip step)."""
    r = A.shape[0]
    d = np.clip(d0, -radius, radius)
    if r == 0:
        return d
    norms2 = np.einsum("ij,ij->i", A, A)
    corrections = np.zeros((r + 1, d.size))
    prev = None
    for _ in range(cycles):
        for i in range(r):
            if norms2[i] < 1e-300:
                continue
            v = d + corrections[i]
            viol = A[i] @ v
            new = v - (max(viol, 0.0) / norms2[i]) * A[i]
            corrections[i] = v - new
            d = new
        v = d + corrections[r]
        new = np.clip(v, -radius, radius)
        corrections[r] = v - new
        d = new
        if prev is not None and np.max(np.abs(d - prev)) < tol:
            break
        prev = d.copy()
    return d


def _kkt_multipliers(d: Array, q: Array, B: Array, A: Array, act_tol: float = 1e-7):
    """Nonnegative multipliers for the rows active at d, by NNLS fit of the
    stationarity equation; returns (mu over all rows, residual norm)."""
    grad = q + B @ d
    mu = np.zeros(A.shape[0])
    if A.shape[0]:
        act = np.where(A @ d >= -act_tol)[0]
    else:
        act = np.array([], int)
    if act.size:
        sol, _ = nnls(A[act].T, -grad)
        mu[act] = sol
    resid = float(np.linalg.norm(grad + A.T @ mu))
    return mu, resid


def solve_cone_qp(q: Array, B: Array, A: Array, trust_radius: float = 1e3,
                  max_iters: int = 20000) -> ConeQpResult:
    """Minimise q'd + 0.5 d'Bd over the cone {A d <= 0} inside a trust box.

    B must be symmetric PSD (checked by eigenvalues).  A boundary-active
    solution with a strictly descending recession ray (A dhat <= 0,
    B dhat ~ 0, q'dhat < -1e-8) is reported as unbounded, because scaling
    the ray drives the objective to -inf over the cone.
    """
    q = np.asarray(q, float)
    B = np.asarray(B, float)
    A = np.asarray(A, float).reshape(-1, q.size)
    if not np.allclose(B, B.T, atol=1e-10):
        raise NotPsd("curvature matrix is not symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (B + B.T))
    scale = max(float(eigs[-1]), 1.0)
    if eigs[0] < -1e-8 * scale:
        raise NotPsd(f"curvature matrix has negative eigenvalue {eigs[0]:.3e}")

    L = max(float(eigs[-1]), 0.0)
    step = 1.0 / L if L > 1e-12 else trust_radius / max(np.linalg.norm(q), 1e-12)
    d = np.zeros_like(q)
    status = STATUS_MAX_ITERS
    for it in range(max_iters):
        grad = q + B @ d
        d_new = _dykstra_project(d - step * grad, A, trust_radius)
        move = float(np.max(np.abs(d_new - d))) if d.size else 0.0
        d = d_new
        if it % 25 == 0 or move < 1e-12:
            on_box = float(np.max(np.abs(d))) >= trust_radius * (1 - 1e-9) if d.size else False
            if on_box:
                dhat = d / max(np.max(np.abs(d)), 1e-300)
                cone_ok = A.shape[0] == 0 or float(np.max(A @ dhat)) <= 1e-10
                if cone_ok and np.linalg.norm(B @ dhat) <= 1e-8 and q @ dhat < -1e-8:
                    return ConeQpResult(d_star=dhat, value=-np.inf,
                                        multipliers=np.zeros(A.shape[0]),
                                        status=STATUS_UNBOUNDED)
            else:
                mu, resid = _kkt_multipliers(d, q, B, A)
                if resid <= 1e-8:
                    status = STATUS_OPTIMAL
                    break
            if move < 1e-12 and it > 50:
                break
    mu, resid = _kkt_multipliers(d, q, B, A)
    if status != STATUS_OPTIMAL and resid <= 1e-6:
        status = STATUS_OPTIMAL
    value = float(q @ d + 0.5 * d @ B @ d)
    return ConeQpResult(d_star=d, value=value, multipliers=mu, status=status,
                        stationarity=resid)


def cone_lp_certificate(q: Array, A: Array) -> Verdict:
    """Linear direction certificate over {A d <= 0}.

    The LP min q'd over the cone intersected with the unit sup-norm box has
    optimum 0 (certified: no feasible descent direction) or a strictly
    negative optimum whose minimiser refutes with an explicit descent ray;
    by cone scaling a negative optimum means -inf over the whole cone.
    """
    q = np.asarray(q, float)
    A = np.asarray(A, float).reshape(-1, q.size)
    if A.shape[0]:
        res = linprog(q, A_ub=A, b_ub=np.zeros(A.shape[0]), bounds=[(-1, 1)] * q.size,
                      method="highs")
    else:
        res = linprog(q, bounds=[(-1, 1)] * q.size, method="highs")
    if not res.success:
        raise RuntimeError(f"cone LP failed: {res.message}")
    if res.fun >= -1e-9:
        return Verdict.certified(lp_value=float(res.fun))
    d = np.asarray(res.x, float)
    return Verdict(REFUTED, witness=d, info={"lp_value": float(res.fun)})
