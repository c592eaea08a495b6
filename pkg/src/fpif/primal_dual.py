"""Composite primal-dual solver with subspace constraints on both sides.

The primal inclusion couples a maximally monotone A and a lipschitz C on H
with m dual blocks (B_i, D_i, L_i) carrying their own subspaces V_i. The
iteration needs the resolvents of the partially inverted B_i and a
lipschitz realization of the partially inverted D_i; convenience
constructors cover the closed-form regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, NoClosedFormError
from .hilbert import LinearMap, Point, Projector, as_coords, product_space
from .operators import (
    LipschitzMap,
    ResolventOp,
    inverse_resolvent,
    linear_monotone_map,
    partial_inverse_resolvent_linear,
)
from .splitting import default_gamma
from .tseng import (
    CONVERGED,
    DIVERGED,
    MAX_ITER,
    SolveTrace,
    StepSchedule,
    StopRule,
)


def power_iteration_norm(L, iters=50, tol=1e-10, margin=1.01, seed=7):
    """Estimate the metric operator norm of a LinearMap by power iteration.

    Power iteration approaches the norm from below; ``margin`` inflates the
    estimate so step-size bounds computed from it stay admissible.
    """
    rng = np.random.default_rng(seed)
    dom, cod = L.domain, L.codomain
    Lstar = L.adjoint().matrix
    v = rng.standard_normal(dom.dim)
    nv = dom.norm(v)
    if nv == 0:
        return 0.0
    v /= nv
    rayleigh = 0.0
    for _ in range(iters):
        u = L.matrix @ v
        w = Lstar @ u
        new_rayleigh = dom.inner(v, w)
        nw = dom.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new_rayleigh - rayleigh) <= tol * max(1.0, new_rayleigh):
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    return float(margin * math.sqrt(max(rayleigh, 0.0)))


def partially_inverted_resolvent(B, V):
    """ResolventOp computing J_{gamma (B)_{Vperp}} from a catalog operator B.

    Closed forms: V = G (plain inverse, via the scaled inversion identity),
    V = {0} (B itself), and affine B for arbitrary V (direct solve of the
    partial-inverse resolvent system).
    """
    if B.space != V.space:
        raise DimensionMismatchError("operator and subspace live in different spaces")
    if V.is_identity:
        def res(gamma, x):
            return inverse_resolvent(B, gamma, x)
        return ResolventOp(B.space, res, name=f"pinv({B.name})@full")
    if V.is_zero:
        return ResolventOp(B.space, B.resolvent, name=f"pinv({B.name})@zero")
    if B.is_linear:
        Pperp = V.complement()

        def res(gamma, x):
            return partial_inverse_resolvent_linear(B, Pperp, 1.0, gamma, x)

        return ResolventOp(B.space, res, name=f"pinv({B.name})")
    raise NoClosedFormError(
        "no closed form for the partially inverted resolvent: supply an affine "
        "operator or a subspace equal to the whole space or {0}"
    )


def lipschitz_partial_inverse(D, P, beta, nu):
    """LipschitzMap realizing D_V for a beta-strongly monotone,
    nu-cocoercive single-valued D, with V = ran(P).

    The result is alpha-cocoercive and alpha-strongly monotone for
    alpha = min(beta, nu)/2, hence (1/alpha)-lipschitzian; affine D is
    materialized once, anything else is evaluated through the damped
    inner iteration.
    """
    from .operators import partial_inverse_apply_singlevalued

    if D.space != P.space:
        raise DimensionMismatchError("map and subspace live in different spaces")
    if beta <= 0 or nu <= 0:
        raise ValueError("certificates beta and nu must be positive")
    alpha = min(beta, nu) / 2.0
    space = D.space
    if D.is_linear:
        n = space.dim
        Pv = P.matrix
        Pperp = np.eye(n) - Pv
        M = D.matrix
        c = D.shift if D.shift is not None else np.zeros(n)
        inv = np.linalg.inv(Pv + Pperp @ M)
        Mv = (Pv @ M + Pperp) @ inv
        cv = Pv @ c - Mv @ (Pperp @ c)
        out = linear_monotone_map(space, Mv, shift=cv)
        out.alpha = alpha
        return out

    def func(u):
        return partial_inverse_apply_singlevalued(D, P, u, beta, nu)

    out = LipschitzMap(space, func, chi=1.0 / alpha, name=f"partial_inverse({D.name})")
    out.alpha = alpha
    return out


def coercive_linear_partial_inverse(space, M, P, shift=None):
    """D_V for a linear D with <x, Dx> >= beta ||x||^2; nu = beta / ||D||^2."""
    M = np.asarray(M, dtype=float)
    D = linear_monotone_map(space, M, shift=shift)
    W = space.weights
    WM = W[:, None] * M
    sym_std = 0.5 * (WM + WM.T) / np.sqrt(np.outer(W, W))
    beta = float(np.linalg.eigvalsh(sym_std)[0])
    if beta <= 0:
        raise ValueError(f"matrix is not coercive (beta = {beta:.3e})")
    nu = beta / D.chi**2
    return lipschitz_partial_inverse(D, P, beta, nu)


@dataclass
class PDBlock:
    """One dual block: resolvent of the partially inverted B_i, the
    lipschitz realization of the partially inverted D_i, the coupling map
    L_i, the subspace V_i, and the offset b_i."""

    B_pinv: ResolventOp
    D_pinv: LipschitzMap
    L: LinearMap
    V: Projector
    b: object

    def __post_init__(self):
        G = self.B_pinv.space
        if self.D_pinv.space != G or self.V.space != G or self.L.codomain != G:
            raise DimensionMismatchError("block members must agree on the dual space")
        self.b = as_coords(G, self.b).copy()


@dataclass
class PDProblem:
    """Primal operator data (A, U, C, z) plus the m dual blocks."""

    A: ResolventOp
    U: Projector
    C: LipschitzMap
    z: object
    blocks: list = field(default_factory=list)
    gamma: float = None

    def __post_init__(self):
        H = self.A.space
        if self.U.space != H or self.C.space != H:
            raise DimensionMismatchError("A, U and C must live on the primal space")
        self.z = as_coords(H, self.z).copy()
        if not self.blocks:
            raise ConfigurationError("at least one dual block is required")
        for blk in self.blocks:
            if blk.L.domain != H:
                raise DimensionMismatchError("coupling maps must start from the primal space")
        self.L_norms = [power_iteration_norm(blk.L) for blk in self.blocks]
        self.chi = max([self.C.chi] + [blk.D_pinv.chi for blk in self.blocks]) + math.sqrt(
            sum(nl**2 for nl in self.L_norms)
        )
        if self.gamma is None:
            self.gamma = default_gamma(self.chi)
        self.gamma = float(self.gamma)
        if self.gamma <= 0 or (self.chi > 0 and self.gamma >= 1.0 / self.chi):
            raise ConfigurationError(
                f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / self.chi if self.chi > 0 else 'inf'}[, "
                f"got {self.gamma}"
            )

    @property
    def space(self):
        return self.A.space

    @property
    def m(self):
        return len(self.blocks)

    def state_space(self):
        spaces = [self.space] + [blk.B_pinv.space for blk in self.blocks]
        return product_space(spaces)


@dataclass(frozen=True)
class PDSolution:
    """Projected primal P_U(x) and duals P_{V_i}(u_i), plus the raw state."""

    x: Point
    u: list
    x_raw: Point
    u_raw: list


def pd_solve(prob, x0=None, u0=None, schedule=None, stop=None, record_iterates=True):
    """Run the primal-dual splitting; returns (PDSolution, SolveTrace).

    The trace residual is the product-space norm of (t - r) across the
    primal and all dual blocks; per-block dual gaps are recorded as extra
    columns dual_residual_i.
    """
    H = prob.space
    gamma = prob.gamma
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(gamma * prob.chi)
    if not schedule.delta_is_unit:
        raise ConfigurationError("the primal-dual splitting uses unit inner steps only")

    PU = prob.U.matrix
    blocks = prob.blocks
    m = prob.m
    PV = [blk.V.matrix for blk in blocks]
    Lmat = [blk.L.matrix for blk in blocks]
    Lstar = [blk.L.adjoint().matrix for blk in blocks]
    b_proj = [PV[i] @ blocks[i].b for i in range(m)]

    x = H.zeros() if x0 is None else as_coords(H, x0).copy()
    us = (
        [blk.B_pinv.space.zeros() for blk in blocks]
        if u0 is None
        else [as_coords(blocks[i].B_pinv.space, u0[i]).copy() for i in range(m)]
    )

    state_space, dims = prob.state_space()
    extra_cols = tuple(f"dual_residual_{i + 1}" for i in range(m))
    trace = SolveTrace(state_space, record_iterates=record_iterates, extra_columns=extra_cols)
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        lam = schedule.lam_at(n)
        PUx = PU @ x
        coupling = sum(Lstar[i] @ (PV[i] @ us[i]) for i in range(m))
        r1 = x - gamma * (PU @ (prob.C(PUx) + coupling))
        p1 = prob.A.resolvent(gamma, r1 + gamma * prob.z)
        s1 = 2.0 * (PU @ p1) - p1 + r1 - PU @ r1
        PUs1 = PU @ s1

        d2, s2 = [], []
        for i, blk in enumerate(blocks):
            PVu = PV[i] @ us[i]
            r2i = us[i] - gamma * (PV[i] @ (blk.D_pinv(PVu) - Lmat[i] @ PUx))
            p2i = blk.B_pinv.resolvent(gamma, r2i - gamma * b_proj[i])
            s2i = 2.0 * (PV[i] @ p2i) - p2i + r2i - PV[i] @ r2i
            t2i = s2i - gamma * (PV[i] @ (blk.D_pinv(PV[i] @ s2i) - Lmat[i] @ PUs1))
            s2.append(s2i)
            d2.append(t2i - r2i)

        t1 = s1 - gamma * (
            PU @ (prob.C(PUs1) + sum(Lstar[i] @ (PV[i] @ s2[i]) for i in range(m)))
        )
        d1 = t1 - r1

        finite = bool(np.all(np.isfinite(d1)) and all(np.all(np.isfinite(d)) for d in d2))
        if finite:
            dual_gaps = [blocks[i].B_pinv.space.norm(d2[i]) for i in range(m)]
            residual = math.sqrt(H.norm(d1) ** 2 + sum(g**2 for g in dual_gaps))
            state = np.concatenate([x] + us)
            state_norm = state_space.norm(state)
        else:
            dual_gaps = [float("nan")] * m
            residual, state_norm = float("nan"), 0.0
            state = np.concatenate([x] + us)
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, state_norm)
        if trace.should_record(n) or done:
            trace.record(
                n, state, residual, 1.0, lam, step_norm,
                extra={f"dual_residual_{i + 1}": dual_gaps[i] for i in range(m)},
            )
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        x = x + lam * d1
        us = [us[i] + lam * d2[i] for i in range(m)]
    trace.finish(status, n + 1)

    sol = PDSolution(
        x=Point(H, PU @ x),
        u=[Point(blocks[i].B_pinv.space, PV[i] @ us[i]) for i in range(m)],
        x_raw=Point(H, x),
        u_raw=[Point(blocks[i].B_pinv.space, us[i]) for i in range(m)],
    )
    return sol, trace


def pd_solution_residuals(prob, x_raw, u_raw):
    """Fixed-point and subspace residuals at a raw primal-dual state."""
    H = prob.space
    x = as_coords(H, x_raw)
    us = [as_coords(prob.blocks[i].B_pinv.space, u_raw[i]) for i in range(prob.m)]
    stop = StopRule(residual_tol=1e-300, iterate_tol=1e-300, max_iter=1)
    _, trace = pd_solve(prob, x0=x, u0=us, stop=stop, record_iterates=False)
    PU = prob.U.matrix
    out = {
        "fixed_point": trace.final_residual / max(1.0, prob.state_space()[0].norm(np.concatenate([x] + us))),
        "subspace_primal": H.norm(x - PU @ x),
    }
    for i, blk in enumerate(prob.blocks):
        G = blk.B_pinv.space
        out[f"subspace_dual_{i + 1}"] = G.norm(us[i] - blk.V.matrix @ us[i])
    return out


def pd_reduction_check(prob, x0=None, u0=None, n_iter=200):
    """Max iterate deviation when the (numerically near-identity)
    projectors U = H and V_i = G_i are replaced by exact identities."""
    for P, label in [(prob.U, "U")] + [(blk.V, f"V_{i}") for i, blk in enumerate(prob.blocks)]:
        if not P.is_identity:
            raise ConfigurationError(f"reduction check requires {label} to be the whole space")
    stop = StopRule(residual_tol=1e-300, iterate_tol=1e-300, max_iter=n_iter)
    schedule = StepSchedule(lam=1.0)
    _, trace_a = pd_solve(prob, x0=x0, u0=u0, schedule=schedule, stop=stop)

    ident_blocks = [
        PDBlock(
            B_pinv=blk.B_pinv,
            D_pinv=blk.D_pinv,
            L=blk.L,
            V=Projector.identity(blk.V.space),
            b=blk.b,
        )
        for blk in prob.blocks
    ]
    ident = PDProblem(
        A=prob.A,
        U=Projector.identity(prob.U.space),
        C=prob.C,
        z=prob.z,
        blocks=ident_blocks,
        gamma=prob.gamma,
    )
    _, trace_b = pd_solve(ident, x0=x0, u0=u0, schedule=schedule, stop=stop)
    space = prob.state_space()[0]
    gaps = [
        space.norm(a.coords - b.coords)
        for a, b in zip(trace_a.iterates, trace_b.iterates)
    ]
    return max(gaps) if gaps else 0.0


def pd_two_op_solve(B1, B2, x0=None, u10=None, u20=None, gamma=None, schedule=None,
                    stop=None, record_iterates=True):
    """Primal-dual iteration for 0 in B1(x) + B2(x) using inverse resolvents.

    Per iteration: p_i = J_{gamma B_i^{-1}}(u_i + gamma x);
    x <- x - gamma lam (p1 + p2);
    u_i <- (1 - lam) u_i + lam (p_i - gamma^2 (u1 + u2)).
    Updates primal and dual variables simultaneously.
    """
    if B1.space != B2.space:
        raise DimensionMismatchError("B1 and B2 must share a space")
    space = B1.space
    # coupling with two identity maps: chi = sqrt(2)
    chi = math.sqrt(2.0)
    gamma = default_gamma(chi) if gamma is None else float(gamma)
    if gamma <= 0 or gamma >= 1.0 / chi:
        raise ConfigurationError(f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / chi}[, got {gamma}")
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(gamma * chi)

    x = space.zeros() if x0 is None else as_coords(space, x0).copy()
    u1 = space.zeros() if u10 is None else as_coords(space, u10).copy()
    u2 = space.zeros() if u20 is None else as_coords(space, u20).copy()
    state_space, _ = product_space([space] * 3)
    trace = SolveTrace(state_space, record_iterates=record_iterates,
                       extra_columns=("dual_residual_1", "dual_residual_2"))
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        lam = schedule.lam_at(n)
        p1 = inverse_resolvent(B1, gamma, u1 + gamma * x)
        p2 = inverse_resolvent(B2, gamma, u2 + gamma * x)
        d1 = -gamma * (p1 + p2)
        du1 = p1 - gamma**2 * (u1 + u2) - u1
        du2 = p2 - gamma**2 * (u1 + u2) - u2
        finite = bool(np.all(np.isfinite(d1)) and np.all(np.isfinite(du1)) and np.all(np.isfinite(du2)))
        if finite:
            g1, g2 = space.norm(du1), space.norm(du2)
            residual = math.sqrt(space.norm(d1) ** 2 + g1**2 + g2**2)
            state_norm = state_space.norm(np.concatenate([x, u1, u2]))
        else:
            g1 = g2 = float("nan")
            residual, state_norm = float("nan"), 0.0
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, state_norm)
        if trace.should_record(n) or done:
            trace.record(
                n, np.concatenate([x, u1, u2]), residual, 1.0, lam, step_norm,
                extra={"dual_residual_1": g1, "dual_residual_2": g2},
            )
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        x = x + lam * d1
        u1 = u1 + lam * du1
        u2 = u2 + lam * du2
    trace.finish(status, n + 1)
    return Point(space, x), trace
