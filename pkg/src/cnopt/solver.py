"""Block-coordinate augmented-Lagrangian solver for lifted convex forms.

The outer loop keeps per-block multipliers alpha_j and a growing penalty
sigma.  One sweep minimises, block by block in ascending order, the
augmented Lagrangian

    A_j = g + alpha_j' g_j + (sigma/2) ||g_j||^2

as a function of block j with every other block held at its most recent
value (Gauss-Seidel), hinge penalties sigma*max(h, 0)^2 for inequality
constraints touching the block, and a consensus anchor
sigma*(x_shared_anchor - x_shared)^2 for coordinates shared across blocks.
After a sweep the multipliers move along the constraint values and sigma
is multiplied by N, until either the iterate is a feasible fixed point
with a sampled-convex Lagrangian (stop: optimal) or the summed block
residual drops below eps (stop: approximate).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import Array, CnForm, ScalarField, Verdict, constraint_residual
from .errors import BlockIndexOutOfRange, InnerFailure, LineSearchFailed, NotDecomposable
from .inner import InnerConfig, minimize_smooth


@dataclass(frozen=True)
class OverlapLink:
    """One x coordinate read by an earlier block but owned by a later one."""

    x_index: int
    earlier: int
    later: int


@dataclass(frozen=True)
class Partition:
    """Block decomposition of the lifted variables.

    ``x_blocks`` and ``y_blocks`` hold 0-based coordinate indices into x
    and y respectively; together they must partition all coordinates.
    ``constraint_owner[i]`` names the block whose sweep carries equality
    constraint i.  ``overlap_links`` lists coordinates shared between
    blocks of a non-decomposable form.
    """

    n: int
    m: int
    x_blocks: tuple
    y_blocks: tuple
    constraint_owner: tuple
    overlap_links: tuple = ()

    def __post_init__(self):
        if len(self.x_blocks) != len(self.y_blocks):
            raise ValueError("x_blocks and y_blocks disagree on block count")
        if self.p < 1:
            raise ValueError("need at least one block")
        seen_x = sorted(i for blk in self.x_blocks for i in blk)
        seen_y = sorted(i for blk in self.y_blocks for i in blk)
        if seen_x != list(range(self.n)) or seen_y != list(range(self.m)):
            raise ValueError("blocks must partition the coordinates exactly")
        if any(o < 0 or o >= self.p for o in self.constraint_owner):
            raise ValueError("constraint owner outside the partition")

    @property
    def p(self) -> int:
        return len(self.x_blocks)

    def block_indices(self, j: int) -> np.ndarray:
        """Flat indices of block j inside the concatenated (x, y) vector."""
        if j < 0 or j >= self.p:
            raise BlockIndexOutOfRange(f"block {j} of {self.p}")
        return np.array(list(self.x_blocks[j]) + [self.n + i for i in self.y_blocks[j]], int)

    def owned_constraints(self, j: int) -> list:
        return [i for i, o in enumerate(self.constraint_owner) if o == j]


def monolithic_partition(form: CnForm) -> Partition:
    """Degenerate single-block partition (p = 1)."""
    return Partition(
        n=form.n, m=form.m,
        x_blocks=(tuple(range(form.n)),),
        y_blocks=(tuple(range(form.m)),),
        constraint_owner=tuple(0 for _ in form.constraints),
    )


def constraint_support(c: ScalarField, probe_points) -> np.ndarray:
    """Coordinates a constraint actually reads, by sampled gradients."""
    mask = np.zeros(c.dim, bool)
    for z in probe_points:
        mask |= np.abs(c.grad_at(z)) > 1e-12
    return np.where(mask)[0]


def validate_partition(form: CnForm, partition: Partition, rng=None, strict: bool = True) -> None:
    """Check that each constraint's support stays in its owner block.

    Coordinates covered by overlap links are tolerated when ``strict`` is
    false (the solver's consensus handling); a strict check raises
    NotDecomposable on any straddling constraint.
    """
    if partition.n != form.n or partition.m != form.m:
        raise ValueError("partition dimensions disagree with the form")
    if len(partition.constraint_owner) != form.r:
        raise ValueError("constraint_owner length disagrees with the form")
    rng = rng or np.random.default_rng(7)
    box = form.x_box()
    probes = []
    for _ in range(4):
        x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(form.n)
        y = 0.25 + 0.5 * rng.random(form.m)
        probes.append(form.point(x, y))
    allowed_extra: dict = {}
    if not strict:
        for link in partition.overlap_links:
            allowed_extra.setdefault(link.earlier, set()).add(link.x_index)
    for i, c in enumerate(form.constraints):
        owner = partition.constraint_owner[i]
        block = set(partition.block_indices(owner).tolist())
        extra = allowed_extra.get(owner, set())
        support = constraint_support(c, probes)
        stray = [k for k in support if k not in block and k not in extra]
        if stray:
            raise NotDecomposable(
                f"constraint {i} reads coordinates {stray} outside block {owner}")


@dataclass(frozen=True)
class SolverConfig:
    """Outer-loop parameters; defaults follow the reference runs."""

    eps: float = 1e-4
    sigma1: float = 5.0
    N: float = 10.0
    alpha0: float = 0.0
    w0: Optional[Array] = None
    max_outer: int = 30
    inner: InnerConfig = field(default_factory=lambda: InnerConfig(tol_grad=1e-6))
    sigma_cap: float = 1e12
    step3_convexity_samples: int = 200
    overlap_anchor: str = "current"  # or "previous": sweep-start value
    fixed_point_tol: float = 1e-10
    # extra Gauss-Seidel passes per outer iteration until shared coordinates
    # settle; only partitions with overlap links use more than one
    consensus_sweeps: int = 8
    # weight of the consensus anchor term w*(anchor - x_shared)^2:
    # "sigma1" holds it at the initial penalty (a growing weight freezes
    # shared coordinates before blocks agree), "sigma_k" tracks the penalty,
    # a float fixes it explicitly
    anchor_weight: object = "sigma1"

    def __post_init__(self):
        if self.N <= 1:
            raise ValueError("penalty growth factor must exceed 1")
        if self.eps <= 0 or self.sigma1 <= 0:
            raise ValueError("eps and sigma1 must be positive")


@dataclass
class SolverState:
    k: int
    x: Array
    y: Array
    alpha: list
    sigma: float
    residual: float = np.inf
    hk: float = np.nan
    f_value: float = np.nan


STATUS_OPTIMAL = "optimal"
STATUS_APPROXIMATE = "approximate"
STATUS_MAX_OUTER = "max_outer_iters"
STATUS_DIVERGED = "diverged"


@dataclass(frozen=True)
class TraceRow:
    k: int
    residual: float
    f_value: float
    g_value: float
    hk: float
    wall_time: float


@dataclass
class SolveReport:
    status: str
    state: SolverState
    trace: list
    certificate: Optional[Verdict] = None
    block_grad_norms: Optional[list] = None

    @property
    def x(self) -> Array:
        return self.state.x

    @property
    def f_value(self) -> float:
        return self.state.f_value

    @property
    def max_hk(self) -> float:
        return max((row.hk for row in self.trace), default=np.nan)

    @property
    def max_g_value(self) -> float:
        """Largest lifted-objective value along the trace (level-set bound)."""
        return max((row.g_value for row in self.trace), default=np.nan)


def _ineq_touching(form: CnForm, partition: Partition):
    """For each block, the inequality constraints whose support meets it."""
    if not form.ineq_constraints:
        return [[] for _ in range(partition.p)]
    rng = np.random.default_rng(11)
    box = form.x_box()
    probes = []
    for _ in range(3):
        x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(form.n)
        y = 0.25 + 0.5 * rng.random(form.m)
        probes.append(form.point(x, y))
    supports = [set(constraint_support(h, probes).tolist()) for h in form.ineq_constraints]
    out = []
    for j in range(partition.p):
        block = set(partition.block_indices(j).tolist())
        out.append([idx for idx, sup in enumerate(supports) if sup & block])
    return out


def augmented_lagrangian(form: CnForm, partition: Partition, j: int,
                         x: Array, y: Array, alpha_j: Array, sigma: float,
                         anchors: Optional[dict] = None,
                         ineq_idx: Optional[list] = None,
                         anchor_weight: Optional[float] = None) -> ScalarField:
    """Augmented Lagrangian of block j as a field over the block coordinates.

    Every other coordinate is frozen at the supplied (x, y).  ``anchors``
    maps shared x indices to their consensus values, penalised with weight
    ``anchor_weight`` (default: sigma); ``ineq_idx`` preselects the
    inequality constraints whose hinge penalties involve this block (all
    of them when omitted).
    """
    idx = partition.block_indices(j)
    z_fixed = form.point(x, y)
    owned = partition.owned_constraints(j)
    cons = [form.constraints[i] for i in owned]
    alpha_j = np.asarray(alpha_j, float)
    if alpha_j.size != len(owned):
        raise ValueError(f"alpha for block {j} must have length {len(owned)}")
    if ineq_idx is None:
        ineq_idx = list(range(len(form.ineq_constraints)))
    hinges = [form.ineq_constraints[i] for i in ineq_idx]
    anchors = anchors or {}
    anchor_items = [(int(c), float(v)) for c, v in anchors.items()]
    w_anchor = sigma if anchor_weight is None else float(anchor_weight)

    def embed(u):
        z = z_fixed.copy()
        z[idx] = u
        return z

    def value(u):
        z = embed(u)
        total = form.objective(z)
        for a, c in zip(alpha_j, cons):
            cv = c(z)
            total += a * cv + 0.5 * sigma * cv * cv
        for h in hinges:
            hv = max(h(z), 0.0)
            total += sigma * hv * hv
        for cidx, anchor in anchor_items:
            diff = anchor - z[cidx]
            total += w_anchor * diff * diff
        return total

    def grad(u):
        z = embed(u)
        gz = form.objective.grad_at(z)
        for a, c in zip(alpha_j, cons):
            cv = c(z)
            gz += (a + sigma * cv) * c.grad_at(z)
        for h in hinges:
            hv = h(z)
            if hv > 0.0:
                gz += 2.0 * sigma * hv * h.grad_at(z)
        for cidx, anchor in anchor_items:
            gz[cidx] += 2.0 * w_anchor * (z[cidx] - anchor)
        return gz[idx]

    curvature_ready = (form.objective.hess_vec is not None
                       and all(c.hess_vec is not None for c in cons)
                       and all(h.hess_vec is not None for h in hinges))
    hess_vec = None
    if curvature_ready:
        def hess_vec(u, du):
            z = embed(u)
            dz = np.zeros_like(z)
            dz[idx] = du
            out = form.objective.hess_vec_at(z, dz)
            for a, c in zip(alpha_j, cons):
                cv = c(z)
                gc = c.grad_at(z)
                out += (a + sigma * cv) * c.hess_vec_at(z, dz) + sigma * float(gc @ dz) * gc
            for h in hinges:
                hv = h(z)
                if hv > 0.0:
                    gh = h.grad_at(z)
                    out += 2.0 * sigma * (hv * h.hess_vec_at(z, dz) + float(gh @ dz) * gh)
            for cidx, _ in anchor_items:
                out[cidx] += 2.0 * w_anchor * dz[cidx]
            return out[idx]

    return ScalarField(dim=idx.size, value=value, grad=grad, hess_vec=hess_vec)


def full_augmented_lagrangian_value(form: CnForm, partition: Partition,
                                    x: Array, y: Array, alpha: list, sigma: float,
                                    anchors: Optional[dict] = None) -> float:
    """The single global function the Gauss-Seidel sweep descends on."""
    z = form.point(x, y)
    total = form.objective(z)
    for j in range(partition.p):
        owned = partition.owned_constraints(j)
        for a, i in zip(np.asarray(alpha[j], float), owned):
            cv = form.constraints[i](z)
            total += a * cv + 0.5 * sigma * cv * cv
    for h in form.ineq_constraints:
        hv = max(h(z), 0.0)
        total += sigma * hv * hv
    for cidx, anchor in (anchors or {}).items():
        diff = anchor - z[int(cidx)]
        total += sigma * diff * diff
    return total


def block_residuals(form: CnForm, partition: Partition, x: Array, y: Array) -> list:
    z = form.point(x, y)
    out = []
    for j in range(partition.p):
        vals = np.array([form.constraints[i](z) for i in partition.owned_constraints(j)])
        out.append(float(np.linalg.norm(vals)) if vals.size else 0.0)
    return out


def step4_residual(form: CnForm, partition: Partition, x: Array, y: Array) -> float:
    """Stopping quantity: the sum over blocks of per-block residual norms."""
    return float(sum(block_residuals(form, partition, x, y)))


def _resolve_anchor_weight(cfg: SolverConfig) -> Optional[float]:
    if cfg.anchor_weight == "sigma_k":
        return None
    if cfg.anchor_weight == "sigma1":
        return cfg.sigma1
    return float(cfg.anchor_weight)


def block_sweep(form: CnForm, partition: Partition, state: SolverState,
                cfg: SolverConfig) -> list:
    """One Gauss-Seidel pass over all blocks; mutates the state in place.

    Returns the per-block gradient norms reported by the inner solver.
    """
    ineq_map = _ineq_touching(form, partition)
    z = form.point(state.x, state.y)
    sweep_start = z.copy()
    grad_norms = []
    w_anchor = _resolve_anchor_weight(cfg)
    for j in range(partition.p):
        anchors = {}
        for link in partition.overlap_links:
            if link.later == j:
                src = sweep_start if cfg.overlap_anchor == "previous" else z
                anchors[link.x_index] = float(src[link.x_index])
        field_j = augmented_lagrangian(
            form, partition, j, z[: form.n], z[form.n:],
            state.alpha[j], state.sigma, anchors=anchors, ineq_idx=ineq_map[j],
            anchor_weight=w_anchor)
        idx = partition.block_indices(j)
        try:
            u, _, gn = minimize_smooth(field_j, z[idx], cfg.inner)
        except LineSearchFailed as exc:
            raise InnerFailure(j, str(exc)) from exc
        z[idx] = u
        grad_norms.append(gn)
    state.x = z[: form.n].copy()
    state.y = z[form.n:].copy()
    return grad_norms


def multiplier_update(state: SolverState, form: CnForm, partition: Partition,
                      cfg: SolverConfig) -> None:
    """Move multipliers along the constraint values and grow the penalty."""
    z = form.point(state.x, state.y)
    for j in range(partition.p):
        vals = np.array([form.constraints[i](z) for i in partition.owned_constraints(j)])
        state.alpha[j] = state.alpha[j] + state.sigma * vals
    state.sigma = min(state.sigma * cfg.N, cfg.sigma_cap)
    state.k += 1


def _lagrangian_sampled_convex(form: CnForm, alpha_flat: Array, samples: int,
                               seed: int = 3) -> bool:
    """Necessary-condition proxy for convexity of g + alpha'g: sampled
    quadratic forms of the Hessian (finite differences of the assembled
    gradient) must all be >= -1e-8."""
    rng = np.random.default_rng(seed)
    dim = form.dim
    box = np.tile([-2.0, 2.0], (dim, 1)).astype(float)
    if form.domain_box is not None:
        b = np.asarray(form.domain_box, float)
        finite = np.isfinite(b)
        box[finite] = b[finite]

    def lag_grad(z):
        g = form.objective.grad_at(z)
        for a, c in zip(alpha_flat, form.constraints):
            g += a * c.grad_at(z)
        return g

    for _ in range(samples):
        z = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(dim)
        d = rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        h = 1e-5 * max(np.linalg.norm(z), 1.0)
        quad = float(d @ (lag_grad(z + h * d) - lag_grad(z - h * d)) / (2.0 * h))
        if quad < -1e-8:
            return False
    return True


def _flatten_alpha(partition: Partition, alpha: list, r: int) -> Array:
    flat = np.zeros(r)
    for j in range(partition.p):
        for a, i in zip(np.asarray(alpha[j], float), partition.owned_constraints(j)):
            flat[i] = a
    return flat


def _init_state(form: CnForm, partition: Partition, cfg: SolverConfig) -> SolverState:
    dim = form.dim
    if cfg.w0 is None:
        w = np.zeros(dim)
    elif np.isscalar(cfg.w0):
        w = np.full(dim, float(cfg.w0))
    else:
        w = np.asarray(cfg.w0, float).copy()
        if w.size != dim:
            raise ValueError(f"w0 must have length {dim}")
    alpha = []
    for j in range(partition.p):
        rj = len(partition.owned_constraints(j))
        if np.isscalar(cfg.alpha0):
            alpha.append(np.full(rj, float(cfg.alpha0)))
        else:
            alpha.append(np.asarray(cfg.alpha0[j], float).copy())
    return SolverState(k=1, x=w[: form.n].copy(), y=w[form.n:].copy(),
                       alpha=alpha, sigma=cfg.sigma1)


def solve(form: CnForm, partition: Optional[Partition] = None,
          cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Run the outer loop until a stopping test fires.

    Status is ``optimal`` for the fixed-point stop (feasible iterate with
    sampled-convex Lagrangian), ``approximate`` when the summed block
    residual drops below eps, ``max_outer_iters`` at the iteration cap and
    ``diverged`` when the capped penalty can no longer reduce the residual.
    """
    partition = partition or monolithic_partition(form)
    validate_partition(form, partition, strict=False)
    state = _init_state(form, partition, cfg)
    trace: list = []
    t0 = time.perf_counter()
    status = STATUS_MAX_OUTER
    grad_norms: list = []
    at_cap_failures = 0
    shared_idx = np.array(sorted({l.x_index for l in partition.overlap_links}), int)
    passes = cfg.consensus_sweeps if shared_idx.size else 1
    while True:
        prev = form.point(state.x, state.y)
        for _ in range(passes):
            before = state.x[shared_idx].copy() if shared_idx.size else None
            grad_norms = block_sweep(form, partition, state, cfg)
            if shared_idx.size:
                moved = float(np.max(np.abs(state.x[shared_idx] - before)))
                if moved <= max(1e-10, 1e-3 / state.sigma):
                    break
        z = form.point(state.x, state.y)
        state.residual = step4_residual(form, partition, state.x, state.y)
        eq_vals = np.array([c(z) for c in form.constraints])
        g_val = form.objective(z)
        state.hk = g_val + state.sigma * float(eq_vals @ eq_vals)
        state.f_value = form.f_direct(state.x) if form.f_direct is not None else g_val
        trace.append(TraceRow(k=state.k, residual=state.residual, f_value=state.f_value,
                              g_value=g_val, hk=state.hk,
                              wall_time=time.perf_counter() - t0))

        fixed_point = float(np.max(np.abs(z - prev))) <= cfg.fixed_point_tol
        _, full_res = constraint_residual(form, state.x, state.y)
        in_xf = full_res <= 1e-8 and (
            form.f_direct is None
            or abs(form.f_direct(state.x) - g_val) <= 1e-6)
        if fixed_point and in_xf:
            alpha_flat = _flatten_alpha(partition, state.alpha, form.r)
            if _lagrangian_sampled_convex(form, alpha_flat, cfg.step3_convexity_samples):
                status = STATUS_OPTIMAL
                break
        if state.residual < cfg.eps:
            status = STATUS_APPROXIMATE
            break
        if state.k >= cfg.max_outer:
            status = STATUS_MAX_OUTER
            break
        if state.sigma >= cfg.sigma_cap:
            at_cap_failures += 1
            if at_cap_failures >= 2:
                status = STATUS_DIVERGED
                break
        multiplier_update(state, form, partition, cfg)
    return SolveReport(status=status, state=state, trace=trace,
                       block_grad_norms=grad_norms)


def certify_solution(form: CnForm, partition: Partition, report: SolveReport) -> Verdict:
    """Post-solve quality check at the final iterate.

    Computes the scale-normalised stationarity residual with the final
    multipliers and, when the blockwise sufficient condition also
    certifies, upgrades the verdict to certified; otherwise the residual
    is reported as a quality score.
    """
    from .optimality import blockwise_condition, candidate, kkt_residual

    if report.status not in (STATUS_OPTIMAL, STATUS_APPROXIMATE):
        raise ValueError("certify_solution expects an optimal or approximate report")
    state = report.state
    _, res = constraint_residual(form, state.x, state.y)
    pt = candidate(form, state.x, state.y, feas_tol=max(2.0 * res, 1e-8))
    alpha_flat = _flatten_alpha(partition, state.alpha, form.r)
    score = kkt_residual(form, pt, alpha_flat, normalized=True)
    try:
        _, aggregate = blockwise_condition(form, partition, pt)
    except NotDecomposable:
        aggregate = Verdict.inconclusive(reason="partition not decomposable")
    if aggregate.is_certified:
        return Verdict.certified(normalized_residual=score)
    return Verdict.inconclusive(normalized_residual=score,
                                blockwise=aggregate.status)
