"""Lifted convex representations of nonsmooth and nonconvex objectives.

An objective f(x) that is nonconvex, nonsmooth or even discontinuous is
represented by a convex objective g(x, y) over extra lifted variables y
together with r >= 1 convex equality constraints g_i(x, y) = 0.  On the
constraint set the lifted objective reproduces f, so smooth convex
machinery (gradients, curvature minorants, multipliers) becomes available
for the original problem.

The central type is :class:`CnForm`; a form bundles the lifted objective,
the constraint list, a closed-form lift map x -> y, a convexity grade
(how much curvature g is known to retain) and, when available, the direct
objective f for reporting and cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import LiftInfeasible, MissingHessian

Array = np.ndarray

# Verdict statuses.  Checks in this package are three-valued: a sufficient
# condition that holds certifies, a found counterexample refutes, anything
# else is inconclusive and must never be reported as "not optimal".
CERTIFIED = "certified"
INCONCLUSIVE = "inconclusive"
REFUTED = "refuted"


@dataclass(frozen=True)
class Verdict:
    """Outcome of an optimality or sampling check."""

    status: str
    witness: Optional[Array] = None
    info: dict = field(default_factory=dict)

    @property
    def is_certified(self) -> bool:
        return self.status == CERTIFIED

    @property
    def is_refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def is_inconclusive(self) -> bool:
        return self.status == INCONCLUSIVE

    @staticmethod
    def certified(**info) -> "Verdict":
        return Verdict(CERTIFIED, info=info)

    @staticmethod
    def inconclusive(**info) -> "Verdict":
        return Verdict(INCONCLUSIVE, info=info)

    @staticmethod
    def refuted(witness, **info) -> "Verdict":
        return Verdict(REFUTED, witness=np.asarray(witness, float), info=info)


@dataclass(frozen=True)
class ScalarField:
    """Differentiable scalar function of a dense vector.

    ``value`` and ``grad`` are mandatory callables; ``hess_vec`` maps
    (point, direction) to the Hessian-vector product and may be omitted.
    """

    dim: int
    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    hess_vec: Optional[Callable[[Array, Array], Array]] = None

    def __call__(self, v: Array) -> float:
        return float(self.value(np.asarray(v, float)))

    def grad_at(self, v: Array) -> Array:
        return np.asarray(self.grad(np.asarray(v, float)), float)

    def hess_vec_at(self, v: Array, d: Array) -> Array:
        if self.hess_vec is None:
            raise MissingHessian("field has no Hessian-vector product")
        return np.asarray(self.hess_vec(np.asarray(v, float), np.asarray(d, float)), float)


def constant_field(dim: int, c: float) -> ScalarField:
    return ScalarField(
        dim=dim,
        value=lambda v: c,
        grad=lambda v: np.zeros(dim),
        hess_vec=lambda v, d: np.zeros(dim),
    )


def finite_difference_gradient(func: Callable[[Array], float], x: Array, rel_step: float = 1e-6) -> Array:
    """Central-difference gradient used for consistency checks."""
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (func(x + e) - func(x - e)) / (2.0 * h)
    return out


def gradient_rel_error(f: ScalarField, points: Sequence[Array]) -> float:
    """Max relative mismatch between grad and central differences."""
    worst = 0.0
    for p in points:
        g = f.grad_at(p)
        fd = finite_difference_gradient(f.value, p)
        err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1.0)
        worst = max(worst, float(err))
    return worst


def hess_vec_rel_error(f: ScalarField, points: Sequence[Array], dirs: Sequence[Array]) -> float:
    worst = 0.0
    for p, d in zip(points, dirs):
        hv = f.hess_vec_at(p, d)
        h = 1e-5 * max(np.linalg.norm(p), 1.0)
        fd = (f.grad_at(p + h * d) - f.grad_at(p - h * d)) / (2.0 * h)
        err = np.linalg.norm(hv - fd) / max(np.linalg.norm(fd), 1.0)
        worst = max(worst, float(err))
    return worst


# Convexity grades.  "plain" means no curvature information beyond
# convexity (the zero minorant B = 0).  Weak/strong grades carry a
# point-dependent PSD minorant matrix; the uniform grade carries a scalar
# rho_bar standing for rho_bar * I.
GRADE_PLAIN = "plain"
GRADE_WEAK_UNIFORM = "weak_uniform"
GRADE_STRONG_UNIFORM = "strong_uniform"
GRADE_UNIFORM = "uniform"

_GRADE_STRENGTH = {
    GRADE_PLAIN: 0,
    GRADE_WEAK_UNIFORM: 1,
    GRADE_STRONG_UNIFORM: 2,
    GRADE_UNIFORM: 3,
}


@dataclass(frozen=True)
class ConvexityGrade:
    kind: str
    b_provider: Optional[Callable[[Array], Array]] = None
    rho_bar: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _GRADE_STRENGTH:
            raise ValueError(f"unknown grade kind {self.kind!r}")
        if self.kind == GRADE_UNIFORM and (self.rho_bar is None or self.rho_bar <= 0):
            raise ValueError("uniform grade needs rho_bar > 0")
        if self.kind in (GRADE_WEAK_UNIFORM, GRADE_STRONG_UNIFORM) and self.b_provider is None:
            raise ValueError(f"{self.kind} grade needs a curvature provider")

    @property
    def strength(self) -> int:
        return _GRADE_STRENGTH[self.kind]

    def curvature_at(self, z: Array, dim: int) -> Array:
        """Curvature minorant matrix at z (zero matrix for plain grade)."""
        if self.kind == GRADE_PLAIN:
            return np.zeros((dim, dim))
        if self.kind == GRADE_UNIFORM:
            return self.rho_bar * np.eye(dim)
        return np.asarray(self.b_provider(np.asarray(z, float)), float)

    @staticmethod
    def plain() -> "ConvexityGrade":
        return ConvexityGrade(GRADE_PLAIN)

    @staticmethod
    def weak_uniform(b_provider) -> "ConvexityGrade":
        return ConvexityGrade(GRADE_WEAK_UNIFORM, b_provider=b_provider)

    @staticmethod
    def strong_uniform(b_provider) -> "ConvexityGrade":
        return ConvexityGrade(GRADE_STRONG_UNIFORM, b_provider=b_provider)

    @staticmethod
    def uniform(rho_bar: float) -> "ConvexityGrade":
        return ConvexityGrade(GRADE_UNIFORM, rho_bar=rho_bar)

    @staticmethod
    def constant_weak(matrix: Array) -> "ConvexityGrade":
        m = np.asarray(matrix, float)
        return ConvexityGrade(GRADE_WEAK_UNIFORM, b_provider=lambda z: m)


# Feasibility tolerances.  Membership in the constraint set is held one
# order tighter than the solver's default stopping epsilon; value
# identities get the looser 1e-6.
FEAS_TOL = 1e-8
VALUE_TOL = 1e-6


@dataclass(frozen=True)
class CnForm:
    """Lifted convex form of a (possibly nonconvex) objective.

    Parameters
    ----------
    n, m : int
        Dimensions of the original variable x and the lifted variable y.
    objective : ScalarField
        Convex g over the concatenated (x, y), dimension n + m.
    constraints : tuple of ScalarField
        Convex equality constraints g_i(x, y) = 0, at least one.
    lift : callable
        Closed-form map x -> y landing on the constraint set; for
        non-exact forms it must return an objective-minimising branch.
    ineq_constraints : tuple of ScalarField
        Convex functions required <= 0 (box/sign restrictions of the
        lifted domain); empty when the domain is the whole space.
    domain_box : (n+m, 2) array, optional
        Per-coordinate bounds of the domain; +-inf where unbounded.
        Sampling utilities use the finite part of the x rows.
    grade : ConvexityGrade
        Curvature information carried by g.
    exact : bool
        True when g equals f at every constraint-feasible point, not just
        at the lift.
    f_direct : ScalarField, optional
        The original objective over x, for reporting and oracles.
    lift_branches : callable, optional
        x -> list of feasible y vectors, enumerating every lift branch
        (needed when the constraint set has several sheets over x).
    lift_batch : callable, optional
        Vectorised main-branch lift, (N, n) -> (N, m).
    branch_batch : callable, optional
        Vectorised branch enumeration: (N, n) -> list of (mask, Y) pairs
        where mask flags rows for which the branch exists.
    """

    n: int
    m: int
    objective: ScalarField
    constraints: tuple
    lift: Callable[[Array], Array]
    ineq_constraints: tuple = ()
    domain_box: Optional[Array] = None
    grade: ConvexityGrade = field(default_factory=ConvexityGrade.plain)
    exact: bool = False
    f_direct: Optional[ScalarField] = None
    lift_branches: Optional[Callable[[Array], list]] = None
    lift_batch: Optional[Callable[[Array], Array]] = None
    branch_batch: Optional[Callable[[Array], list]] = None
    f_batch: Optional[Callable[[Array], Array]] = None
    name: str = ""

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if len(self.constraints) < 1:
            raise ValueError("a lifted form needs at least one equality constraint")
        for c in list(self.constraints) + list(self.ineq_constraints):
            if c.dim != self.dim:
                raise ValueError("constraint dimension mismatch")
        if self.objective.dim != self.dim:
            raise ValueError("objective dimension mismatch")

    @property
    def dim(self) -> int:
        return self.n + self.m

    @property
    def r(self) -> int:
        return len(self.constraints)

    def point(self, x: Array, y: Array) -> Array:
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float)) if self.m else np.zeros(0)
        return np.concatenate([x, y])

    def x_box(self, fallback: float = 3.0) -> Array:
        """Finite per-coordinate bounds for sampling x."""
        box = np.tile([-fallback, fallback], (self.n, 1)).astype(float)
        if self.domain_box is not None:
            b = np.asarray(self.domain_box, float)[: self.n]
            finite = np.isfinite(b)
            box[finite] = b[finite]
        return box

    def all_lifts(self, x: Array) -> list:
        if self.lift_branches is not None:
            return [np.asarray(y, float) for y in self.lift_branches(np.asarray(x, float))]
        return [np.asarray(self.lift(np.asarray(x, float)), float)]


def sample_in_box(box: Array, rng: np.random.Generator, size: int) -> Array:
    box = np.asarray(box, float)
    lo, hi = box[:, 0], box[:, 1]
    return lo + (hi - lo) * rng.random((size, box.shape[0]))


def constraint_residual(form: CnForm, x: Array, y: Array):
    """Equality residual vector with hinge values of any inequality
    constraints appended, plus its Euclidean norm."""
    z = form.point(x, y)
    vals = [c(z) for c in form.constraints]
    vals += [max(c(z), 0.0) for c in form.ineq_constraints]
    vec = np.array(vals, float)
    return vec, float(np.linalg.norm(vec))


def lift(form: CnForm, x: Array) -> Array:
    """Validated lift: returns y with constraint residual below 1e-8."""
    y = np.asarray(form.lift(np.asarray(x, float)), float)
    _, nrm = constraint_residual(form, x, y)
    if nrm > FEAS_TOL:
        raise LiftInfeasible(f"lift residual {nrm:.3e} exceeds {FEAS_TOL:g}")
    return y


def eval_f_via_form(form: CnForm, x: Array) -> float:
    """Evaluate the objective through its lifted form, f(x) = g(x, lift(x))."""
    x = np.asarray(x, float)
    y = np.asarray(form.lift(x), float)
    _, nrm = constraint_residual(form, x, y)
    if nrm > VALUE_TOL:
        raise LiftInfeasible(f"lift residual {nrm:.3e} exceeds {VALUE_TOL:g}")
    return form.objective(form.point(x, y))


def check_weak_uniform(form: CnForm, samples: int, seed: int) -> Verdict:
    """Sampled falsification of the claimed curvature minorant.

    Draws random points z in the domain box and unit directions d and
    compares the true quadratic form d' H(z) d against d' B(z) d.  A
    violation refutes the grade; absence of violations is inconclusive
    because sampling cannot certify the inequality everywhere.
    """
    if form.objective.hess_vec is None:
        raise MissingHessian("check needs hess_vec on the lifted objective")
    rng = np.random.default_rng(seed)
    dim = form.dim
    box = np.tile([-2.0, 2.0], (dim, 1)).astype(float)
    if form.domain_box is not None:
        b = np.asarray(form.domain_box, float)
        finite = np.isfinite(b)
        box[finite] = b[finite]
    pts = sample_in_box(box, rng, samples)
    for z in pts:
        d = rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        lhs = float(d @ form.objective.hess_vec_at(z, d))
        rhs = float(d @ form.grade.curvature_at(z, dim) @ d)
        if lhs < rhs - 1e-8:
            return Verdict.refuted(np.concatenate([z, d]), quad_gap=lhs - rhs)
    return Verdict.inconclusive(samples=samples)


def validate_form(form: CnForm, n_points: int = 100, seed: int = 0,
                  feas_tol: float = FEAS_TOL, value_tol: float = VALUE_TOL) -> dict:
    """Spot-check lift feasibility and the evaluation identity at random x.

    Returns the worst residual and worst value mismatch found; raises
    nothing so tests can assert on the numbers.
    """
    rng = np.random.default_rng(seed)
    xs = sample_in_box(form.x_box(), rng, n_points)
    worst_res = 0.0
    worst_val = 0.0
    for x in xs:
        y = np.asarray(form.lift(x), float)
        _, nrm = constraint_residual(form, x, y)
        worst_res = max(worst_res, nrm)
        if form.f_direct is not None:
            gap = abs(form.objective(form.point(x, y)) - form.f_direct(x))
            worst_val = max(worst_val, gap)
    return {"max_residual": worst_res, "max_value_gap": worst_val,
            "feas_ok": worst_res <= feas_tol, "value_ok": worst_val <= value_tol}
