"""Forward-partial-inverse-forward solver for 0 in Ax + Bx + N_V(x).

The iteration runs on the combined state z = x + gamma * y with x in V and
y in Vperp. With unit inner steps each pass is a forward evaluation of B,
one reflected resolvent of A interleaved with projections onto V (a
Douglas-Rachford step), and a second forward evaluation. Non-unit inner
steps are supported for affine A only, through a direct solve of the
partial-inverse resolvent system.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UnsupportedConfigurationError
from .hilbert import Point, Projector, as_coords
from .operators import partial_inverse_resolvent_linear
from .tseng import (
    CONVERGED,
    DIVERGED,
    MAX_ITER,
    SolveTrace,
    StepSchedule,
    StopRule,
)


def default_gamma(chi):
    """0.9 / chi for chi > 0, and 1.0 for the unconstrained case chi = 0."""
    return 0.9 / chi if chi > 0 else 1.0


@dataclass
class InclusionProblem:
    """Data for 0 in Ax + Bx + N_V(x): operators, subspace, and step gamma."""

    A: object
    B: object
    V: Projector
    gamma: float = None

    def __post_init__(self):
        if self.A.space != self.B.space or self.A.space != self.V.space:
            raise ConfigurationError("A, B and V must share one space")
        chi = self.B.chi
        if self.gamma is None:
            self.gamma = default_gamma(chi)
        self.gamma = float(self.gamma)
        if self.gamma <= 0 or (chi > 0 and self.gamma >= 1.0 / chi):
            raise ConfigurationError(
                f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / chi if chi > 0 else 'inf'}[, "
                f"got {self.gamma}"
            )

    @property
    def space(self):
        return self.A.space


@dataclass(frozen=True)
class PrimalDualPoint:
    """A primal point in V paired with a dual point in Vperp."""

    x: Point
    y: Point


def _projected_start(space, P, value, complement, label):
    if value is None:
        return space.zeros()
    coords = as_coords(space, value).copy()
    mat = P.matrix if not complement else np.eye(space.dim) - P.matrix
    projected = mat @ coords
    drift = space.norm(coords - projected)
    if drift > 1e-12 * max(1.0, space.norm(coords)):
        warnings.warn(
            f"{label} is not in the required subspace (off by {drift:.3e}); projecting",
            stacklevel=3,
        )
    return projected


def fpif_solve(prob, x0=None, y0=None, schedule=None, stop=None, record_iterates=True):
    """Solve 0 in Ax + Bx + N_V(x); returns the primal-dual pair and trace.

    Starting points are projected onto V and Vperp (with a warning when
    they are off). The trace stores the combined state z_n = x_n + gamma y_n;
    the returned pair is x = P_V z, y = P_Vperp z / gamma.

    Inner steps delta_n != 1 require an affine A (resolvent of the scaled
    partial inverse is obtained by a dense solve); otherwise
    UnsupportedConfigurationError is raised.
    """
    space = prob.space
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    gamma = prob.gamma
    schedule.validate(gamma * prob.B.chi)
    if not schedule.delta_is_unit and not prob.A.is_linear:
        raise UnsupportedConfigurationError(
            "inner steps delta != 1 are only supported for affine operators A"
        )

    x_start = _projected_start(space, prob.V, x0, False, "x0")
    y_start = _projected_start(space, prob.V, y0, True, "y0")
    z = x_start + gamma * y_start

    P = prob.V.matrix
    A, B = prob.A, prob.B
    trace = SolveTrace(space, record_iterates=record_iterates)
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        delta = schedule.delta_at(n)
        lam = schedule.lam_at(n)
        r = z - delta * gamma * (P @ B(P @ z))
        if delta == 1.0:
            p = A.resolvent(gamma, r)
            s = 2.0 * (P @ p) - p + r - P @ r
        else:
            s = partial_inverse_resolvent_linear(A, prob.V, gamma, delta, r)
        t = s - delta * gamma * (P @ B(P @ s))
        d = t - r
        finite = bool(np.all(np.isfinite(d)) and np.all(np.isfinite(z)))
        residual = space.norm(d) if finite else float("nan")
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, space.norm(z) if finite else 0.0)
        if trace.should_record(n) or done:
            trace.record(n, z, residual, delta, lam, step_norm)
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        z = z + lam * d
    trace.finish(status, n + 1)

    x_bar = P @ z
    y_bar = (z - x_bar) / gamma
    return PrimalDualPoint(Point(space, x_bar), Point(space, y_bar)), trace


def split_state(prob, z):
    """Decompose a combined state into its (x, y) components."""
    coords = as_coords(prob.space, z)
    x = prob.V.matrix @ coords
    return x, (coords - x) / prob.gamma


def solution_residuals(prob, x, y):
    """Residuals certifying an (x, y) pair: subspace gaps, fixed-point gap,
    and the dual membership gap y in Ax + P_V Bx tested through A's resolvent."""
    space = prob.space
    xc, yc = as_coords(space, x), as_coords(space, y)
    P = prob.V.matrix
    gamma = prob.gamma
    sub_primal = space.norm(xc - P @ xc)
    sub_dual = space.norm(P @ yc)
    z = xc + gamma * yc
    r = z - gamma * (P @ prob.B(P @ z))
    p = prob.A.resolvent(gamma, r)
    s = 2.0 * (P @ p) - p + r - P @ r
    t = s - gamma * (P @ prob.B(P @ s))
    fixed_point = space.norm(t - r) / max(1.0, space.norm(z))
    w = xc + gamma * (yc - P @ prob.B(xc))
    membership = space.norm(xc - prob.A.resolvent(gamma, w))
    return {
        "subspace_primal": sub_primal,
        "subspace_dual": sub_dual,
        "fixed_point": fixed_point,
        "dual_membership": membership,
    }


def reduce_to_tseng_check(prob, z0, n_iter=500, lam=1.0):
    """Max deviation between this solver with V = H and the plain
    forward-backward-forward recursion run on the same data."""
    from .tseng import tseng_solve

    if not prob.V.is_identity:
        raise ConfigurationError("reduction to the forward-backward-forward method needs V = H")
    stop = StopRule(residual_tol=1e-300, iterate_tol=1e-300, max_iter=n_iter)
    schedule = StepSchedule(delta=1.0, lam=lam)
    _, trace_fpif = fpif_solve(prob, x0=z0, schedule=schedule, stop=stop)
    # same arithmetic with the step gamma folded into the inner step size
    t_schedule = StepSchedule(delta=prob.gamma, lam=lam, epsilon=min(1e-9, prob.gamma / 2))
    _, trace_t = tseng_solve(prob.A, prob.B, z0, schedule=t_schedule, stop=stop)
    return _max_iterate_gap(prob.space, trace_fpif, trace_t)


def reduce_to_dr_check(prob, z0, n_iter=500, lam=1.0):
    """Max deviation between this solver with B = 0 and the reflected
    averaging recursion s = (z + R_{N_V} R_{gamma A} z)/2, z += lam (s - z)."""
    if prob.B.chi != 0 or np.any(prob.B(prob.space.zeros())):
        raise ConfigurationError("reduction to the reflected recursion needs B = 0")
    space, P, gamma = prob.space, prob.V.matrix, prob.gamma
    z0c = as_coords(space, z0)
    x0 = P @ z0c
    y0 = (z0c - x0) / gamma
    stop = StopRule(residual_tol=1e-300, iterate_tol=1e-300, max_iter=n_iter)
    schedule = StepSchedule(delta=1.0, lam=lam)
    _, trace_fpif = fpif_solve(prob, x0=x0, y0=y0, schedule=schedule, stop=stop)

    # mirror the solver's projected start bit for bit
    z = (P @ x0) + gamma * ((np.eye(space.dim) - P) @ y0)
    reference = []
    lam_rule = StepSchedule(delta=1.0, lam=lam)
    for n in range(len(trace_fpif.iterates)):
        reference.append(z.copy())
        refl = 2.0 * prob.A.resolvent(gamma, z) - z
        s = 0.5 * (z + 2.0 * (P @ refl) - refl)
        z = z + lam_rule.lam_at(n) * (s - z)
    gaps = [
        space.norm(p.coords - ref) for p, ref in zip(trace_fpif.iterates, reference)
    ]
    return max(gaps) if gaps else 0.0


def _max_iterate_gap(space, trace_a, trace_b):
    pairs = zip(trace_a.iterates, trace_b.iterates)
    gaps = [space.norm(a.coords - b.coords) for a, b in pairs]
    return max(gaps) if gaps else 0.0
