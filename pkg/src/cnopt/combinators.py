"""Constructors that combine lifted forms into new ones.

Sums with positive weights, negation of exact forms, products via the
polarisation identity f1*f2 = ((f1+f2)^2 - f1^2 - f2^2)/2 with the squares
lifted by fresh equality constraints, monotone-convex composition and
difference-of-convex embedding.  Lifted coordinates of the inputs are
re-indexed into disjoint segments of the output's y vector, so constraint
namespaces never mix and decomposability by input is preserved.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import (Array, CnForm, ConvexityGrade, GRADE_PLAIN, GRADE_UNIFORM,
                   GRADE_WEAK_UNIFORM, GRADE_STRONG_UNIFORM, ScalarField)
from .errors import MonotonicityRefuted, NonExactNegativeScale, NotExact


def _embedded_field(f: ScalarField, sel: Array, out_dim: int) -> ScalarField:
    """View a field over a coordinate subset as a field over the full space."""
    sel = np.asarray(sel, int)

    def value(z):
        return f(z[sel])

    def grad(z):
        out = np.zeros(out_dim)
        out[sel] = f.grad_at(z[sel])
        return out

    hv = None
    if f.hess_vec is not None:
        def hv(z, d):
            out = np.zeros(out_dim)
            out[sel] = f.hess_vec_at(z[sel], d[sel])
            return out

    return ScalarField(out_dim, value, grad, hv)


def _sum_field(fields, weights, dim) -> ScalarField:
    def value(z):
        return sum(w * f(z) for w, f in zip(weights, fields))

    def grad(z):
        out = np.zeros(dim)
        for w, f in zip(weights, fields):
            out += w * f.grad_at(z)
        return out

    hv = None
    if all(f.hess_vec is not None for f in fields):
        def hv(z, d):
            out = np.zeros(dim)
            for w, f in zip(weights, fields):
                out += w * f.hess_vec_at(z, d)
            return out

    return ScalarField(dim, value, grad, hv)


def _selectors(n: int, m1: int, m2: int):
    """Index maps of the two inputs inside (x, y1, y2)."""
    sel1 = np.concatenate([np.arange(n), n + np.arange(m1)])
    sel2 = np.concatenate([np.arange(n), n + m1 + np.arange(m2)])
    return sel1, sel2


def _combined_grade(f1: CnForm, f2: CnForm, a1: float, a2: float,
                    sel1: Array, sel2: Array, dim: int) -> ConvexityGrade:
    g1, g2 = f1.grade, f2.grade
    if min(a1, a2) <= 0 or g1.kind == GRADE_PLAIN or g2.kind == GRADE_PLAIN:
        return ConvexityGrade.plain()
    if g1.kind == GRADE_UNIFORM and g2.kind == GRADE_UNIFORM:
        return ConvexityGrade.uniform(min(a1 * g1.rho_bar, a2 * g2.rho_bar))
    kind = GRADE_WEAK_UNIFORM
    if g1.strength >= 2 and g2.strength >= 2:
        kind = GRADE_STRONG_UNIFORM

    def b_provider(z):
        out = np.zeros((dim, dim))
        B1 = g1.curvature_at(z[sel1], sel1.size)
        B2 = g2.curvature_at(z[sel2], sel2.size)
        out[np.ix_(sel1, sel1)] += a1 * B1
        out[np.ix_(sel2, sel2)] += a2 * B2
        return out

    return ConvexityGrade(kind, b_provider=b_provider)


def scale_add(f1: CnForm, f2: CnForm, a1: float, a2: float) -> CnForm:
    """Weighted sum a1*f1 + a2*f2 over a shared x.

    Positive weights always combine; nonpositive weights are admitted only
    when both inputs are exact (then the lifted value is weight-invariant
    on the constraint set).
    """
    if f1.n != f2.n:
        raise ValueError("summands must share the x dimension")
    if (a1 <= 0 or a2 <= 0) and not (f1.exact and f2.exact):
        raise NonExactNegativeScale("nonpositive weight on a non-exact form")
    n = f1.n
    m = f1.m + f2.m
    dim = n + m
    sel1, sel2 = _selectors(n, f1.m, f2.m)
    e1 = _embedded_field(f1.objective, sel1, dim)
    e2 = _embedded_field(f2.objective, sel2, dim)
    objective = _sum_field([e1, e2], [a1, a2], dim)
    constraints = tuple(_embedded_field(c, sel1, dim) for c in f1.constraints) + \
        tuple(_embedded_field(c, sel2, dim) for c in f2.constraints)
    ineqs = tuple(_embedded_field(c, sel1, dim) for c in f1.ineq_constraints) + \
        tuple(_embedded_field(c, sel2, dim) for c in f2.ineq_constraints)

    def lift_map(x):
        return np.concatenate([f1.lift(x), f2.lift(x)])

    def lift_branches(x):
        return [np.concatenate([y1, y2])
                for y1 in f1.all_lifts(x) for y2 in f2.all_lifts(x)]

    f_direct = None
    if f1.f_direct is not None and f2.f_direct is not None:
        f_direct = _sum_field([f1.f_direct, f2.f_direct], [a1, a2], n)

    box = None
    if f1.domain_box is not None or f2.domain_box is not None:
        box = np.tile([-np.inf, np.inf], (dim, 1))
        if f1.domain_box is not None:
            b1 = np.asarray(f1.domain_box, float)
            box[sel1] = np.column_stack([np.maximum(box[sel1][:, 0], b1[:, 0]),
                                         np.minimum(box[sel1][:, 1], b1[:, 1])])
        if f2.domain_box is not None:
            b2 = np.asarray(f2.domain_box, float)
            box[sel2] = np.column_stack([np.maximum(box[sel2][:, 0], b2[:, 0]),
                                         np.minimum(box[sel2][:, 1], b2[:, 1])])

    return CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        ineq_constraints=ineqs, lift=lift_map, lift_branches=lift_branches,
        domain_box=box, grade=_combined_grade(f1, f2, a1, a2, sel1, sel2, dim),
        exact=f1.exact and f2.exact, f_direct=f_direct,
        name=f"{a1:g}*{f1.name or 'f1'} + {a2:g}*{f2.name or 'f2'}",
    )


def negate_exact(f: CnForm) -> CnForm:
    """-f for an exact form: flip the lifted objective, keep constraints.

    The negated objective is concave in general, so the curvature grade
    drops to plain; exactness is preserved.
    """
    if not f.exact:
        raise NotExact("negation needs an exact form")
    obj = f.objective

    def value(z):
        return -obj(z)

    def grad(z):
        return -obj.grad_at(z)

    hv = None
    if obj.hess_vec is not None:
        def hv(z, d):
            return -obj.hess_vec_at(z, d)

    f_direct = None
    if f.f_direct is not None:
        fd = f.f_direct
        f_direct = ScalarField(f.n, lambda x: -fd(x), lambda x: -fd.grad_at(x))
    return CnForm(
        n=f.n, m=f.m, objective=ScalarField(f.dim, value, grad, hv),
        constraints=f.constraints, ineq_constraints=f.ineq_constraints,
        lift=f.lift, lift_branches=f.lift_branches, lift_batch=f.lift_batch,
        domain_box=f.domain_box, grade=ConvexityGrade.plain(), exact=True,
        f_direct=f_direct, name=f"-({f.name or 'f'})",
    )


def product_exact(f1: CnForm, f2: CnForm) -> CnForm:
    """f1*f2 for exact forms via polarisation.

    Two fresh lifted scalars w1, w2 catch the squares of the input
    objectives through the equality constraints (g1)^2 - w1 = 0 and
    (g2)^2 - w2 = 0; the output objective is ((g1+g2)^2 - w1 - w2)/2,
    which equals f1*f2 on the constraint set.
    """
    if not (f1.exact and f2.exact):
        raise NotExact("product needs exact forms")
    if f1.n != f2.n:
        raise ValueError("factors must share the x dimension")
    n = f1.n
    m = f1.m + f2.m + 2
    dim = n + m
    sel1, sel2 = _selectors(n, f1.m, f2.m)
    iw1, iw2 = dim - 2, dim - 1
    e1 = _embedded_field(f1.objective, sel1, dim)
    e2 = _embedded_field(f2.objective, sel2, dim)

    def value(z):
        s = e1(z) + e2(z)
        return 0.5 * (s * s - z[iw1] - z[iw2])

    def grad(z):
        s = e1(z) + e2(z)
        out = s * (e1.grad_at(z) + e2.grad_at(z))
        out[iw1] -= 0.5
        out[iw2] -= 0.5
        return out

    objective = ScalarField(dim, value, grad)

    def square_constraint(e, iw):
        def val(z):
            v = e(z)
            return v * v - z[iw]

        def grd(z):
            v = e(z)
            out = 2.0 * v * e.grad_at(z)
            out[iw] -= 1.0
            return out

        return ScalarField(dim, val, grd)

    constraints = tuple(_embedded_field(c, sel1, dim) for c in f1.constraints) + \
        tuple(_embedded_field(c, sel2, dim) for c in f2.constraints) + \
        (square_constraint(e1, iw1), square_constraint(e2, iw2))
    ineqs = tuple(_embedded_field(c, sel1, dim) for c in f1.ineq_constraints) + \
        tuple(_embedded_field(c, sel2, dim) for c in f2.ineq_constraints)

    def lift_map(x):
        y1 = np.asarray(f1.lift(x), float)
        y2 = np.asarray(f2.lift(x), float)
        u1 = f1.objective(f1.point(x, y1))
        u2 = f2.objective(f2.point(x, y2))
        return np.concatenate([y1, y2, [u1 * u1, u2 * u2]])

    f_direct = None
    if f1.f_direct is not None and f2.f_direct is not None:
        fd1, fd2 = f1.f_direct, f2.f_direct

        def fval(x):
            return fd1(x) * fd2(x)

        def fgrad(x):
            return fd1(x) * fd2.grad_at(x) + fd2(x) * fd1.grad_at(x)

        f_direct = ScalarField(n, fval, fgrad)

    return CnForm(
        n=n, m=m, objective=objective, constraints=constraints,
        ineq_constraints=ineqs, lift=lift_map, grade=ConvexityGrade.plain(),
        exact=True, f_direct=f_direct,
        name=f"({f1.name or 'f1'})*({f2.name or 'f2'})",
    )


def _spot_check_monotone_convex(phi: ScalarField, seed: int = 0,
                                lo: float = -3.0, hi: float = 3.0) -> None:
    rng = np.random.default_rng(seed)
    ts = np.sort(lo + (hi - lo) * rng.random(64))
    for t in ts:
        if float(phi.grad_at(np.array([t]))[0]) < -1e-10:
            raise MonotonicityRefuted(f"phi decreasing at t={t:.4g}")
    vals = np.array([phi(np.array([t])) for t in ts])
    for i in range(len(ts) - 2):
        a, b, c = ts[i], ts[i + 1], ts[i + 2]
        lam = (b - a) / (c - a)
        chord = (1 - lam) * vals[i] + lam * vals[i + 2]
        if vals[i + 1] > chord + 1e-8 * max(1.0, abs(chord)):
            raise MonotonicityRefuted(f"phi fails secant convexity near t={b:.4g}")


def compose_monotone(phi: ScalarField, f: CnForm) -> CnForm:
    """phi(f) for convex increasing phi of one variable.

    The attestation is spot-checked by sampling (nonnegative slope,
    secant convexity); constraints and lifts pass through untouched and
    exactness is preserved.  No curvature information is propagated.
    """
    if phi.dim != 1:
        raise ValueError("outer map must be a field of one variable")
    _spot_check_monotone_convex(phi)
    obj = f.objective

    def value(z):
        return phi(np.array([obj(z)]))

    def grad(z):
        slope = float(phi.grad_at(np.array([obj(z)]))[0])
        return slope * obj.grad_at(z)

    f_direct = None
    if f.f_direct is not None:
        fd = f.f_direct

        def fval(x):
            return phi(np.array([fd(x)]))

        def fgrad(x):
            return float(phi.grad_at(np.array([fd(x)]))[0]) * fd.grad_at(x)

        f_direct = ScalarField(f.n, fval, fgrad)

    return CnForm(
        n=f.n, m=f.m, objective=ScalarField(f.dim, value, grad),
        constraints=f.constraints, ineq_constraints=f.ineq_constraints,
        lift=f.lift, lift_branches=f.lift_branches, lift_batch=f.lift_batch,
        domain_box=f.domain_box, grade=ConvexityGrade.plain(), exact=f.exact,
        f_direct=f_direct, name=f"phi({f.name or 'f'})",
    )


def from_dc(d: ScalarField, c: ScalarField,
            grade: Optional[ConvexityGrade] = None) -> CnForm:
    """Difference of attested-convex functions d - c as a lifted form.

    One fresh scalar z catches c through the constraint c(x) - z = 0; the
    lifted objective is d(x) - z.  The lift is unique, so the form is
    exact.
    """
    if d.dim != c.dim:
        raise ValueError("d and c must share a dimension")
    n = d.dim
    dim = n + 1

    def value(zv):
        return d(zv[:n]) - zv[n]

    def grad(zv):
        out = np.zeros(dim)
        out[:n] = d.grad_at(zv[:n])
        out[n] = -1.0
        return out

    hv = None
    if d.hess_vec is not None:
        def hv(zv, dv):
            out = np.zeros(dim)
            out[:n] = d.hess_vec_at(zv[:n], dv[:n])
            return out

    def cons_val(zv):
        return c(zv[:n]) - zv[n]

    def cons_grad(zv):
        out = np.zeros(dim)
        out[:n] = c.grad_at(zv[:n])
        out[n] = -1.0
        return out

    def fval(x):
        return d(x) - c(x)

    def fgrad(x):
        return d.grad_at(x) - c.grad_at(x)

    return CnForm(
        n=n, m=1, objective=ScalarField(dim, value, grad, hv),
        constraints=(ScalarField(dim, cons_val, cons_grad),),
        lift=lambda x: np.array([c(x)]),
        grade=grade or ConvexityGrade.plain(), exact=True,
        f_direct=ScalarField(n, fval, fgrad), name="dc_difference",
    )


def convex_exact_form(field: ScalarField, name: str = "") -> CnForm:
    """Wrap a convex function as a trivially lifted exact form.

    One dummy lifted scalar with the constraint 0*y = 0 keeps the
    constraint list nonempty while changing nothing.
    """
    n = field.dim
    dim = n + 1

    def value(z):
        return field(z[:n])

    def grad(z):
        out = np.zeros(dim)
        out[:n] = field.grad_at(z[:n])
        return out

    hv = None
    if field.hess_vec is not None:
        def hv(z, d):
            out = np.zeros(dim)
            out[:n] = field.hess_vec_at(z[:n], d[:n])
            return out

    zero = ScalarField(dim, lambda z: 0.0, lambda z: np.zeros(dim),
                       lambda z, d: np.zeros(dim))
    return CnForm(
        n=n, m=1, objective=ScalarField(dim, value, grad, hv),
        constraints=(zero,), lift=lambda x: np.zeros(1),
        grade=ConvexityGrade.plain(), exact=True, f_direct=field,
        name=name or "convex",
    )
