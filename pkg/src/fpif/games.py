"""Zero-sum game equilibria via splitting with kernel projections.

Linearly-constrained convex-concave saddle problems are solved without
ever projecting onto the strategy sets S_i = {x in C_i : L_i x = b_i};
the iteration alternates projections onto C_i with projections onto
ker(L_i) obtained from the cached pseudoinverse of L_i*. Finite matrix
games and grid-discretized continuous games go through a dedicated
bilinear kernel (numba with a numpy fallback, see _kernels).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DimensionMismatchError
from .hilbert import LinearMap, Point, Space, as_coords, product_space, pseudoinverse
from .splitting import default_gamma
from .tseng import (
    CONVERGED,
    DIVERGED,
    MAX_ITER,
    SolveTrace,
    StepSchedule,
    StopRule,
)

log = logging.getLogger("fpif.games")


# ---------------------------------------------------------------------------
# cone-set descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Orthant:
    """The nonnegative orthant; projection clips at zero."""

    def project(self, x):
        return np.maximum(x, 0.0)

    def contains_interior(self, x, margin=0.0):
        return bool(np.all(np.asarray(x) > margin))


@dataclass(frozen=True)
class Box:
    """A coordinate box [lower, upper]; projection clips both sides."""

    lower: float = -np.inf
    upper: float = np.inf

    def project(self, x):
        return np.clip(x, self.lower, self.upper)

    def contains_interior(self, x, margin=0.0):
        x = np.asarray(x)
        return bool(np.all(x > self.lower + margin) and np.all(x < self.upper - margin))


# ---------------------------------------------------------------------------
# generic saddle problems
# ---------------------------------------------------------------------------


class SaddleProblem:
    """A convex-concave saddle problem with cone and affine constraints.

    Player i plays over S_i = {x in C_i : L_i x = b_i} with b_i = L_i e_i.
    ``grad`` maps a pair of strategies to (grad_1 f, grad_2 f); ``chi`` is
    a lipschitz constant of the joint gradient. ``value``, when supplied,
    enables finite-difference consistency checks of the oracle.
    """

    def __init__(self, space1, space2, cone1, cone2, L1, L2, e1, e2, grad, chi,
                 b1=None, b2=None, value=None):
        self.space1, self.space2 = space1, space2
        self.cone1, self.cone2 = cone1, cone2
        if L1.domain != space1 or L2.domain != space2:
            raise DimensionMismatchError("constraint maps must act on the player spaces")
        self.L1, self.L2 = L1, L2
        self.e1 = as_coords(space1, e1).copy()
        self.e2 = as_coords(space2, e2).copy()
        self.grad = grad
        self.chi = float(chi)
        self.value = value
        self.b1 = L1.apply(self.e1) if b1 is None else as_coords(L1.codomain, b1).copy()
        self.b2 = L2.apply(self.e2) if b2 is None else as_coords(L2.codomain, b2).copy()
        for label, L, e, b in (("1", L1, self.e1, self.b1), ("2", L2, self.e2, self.b2)):
            gap = L.codomain.norm(L.apply(e) - b)
            if gap > 1e-10 * max(1.0, L.codomain.norm(b)):
                raise ConfigurationError(f"L{label} e{label} != b{label} (gap {gap:.3e})")
        # kernel projections through the adjoint pseudoinverse, cached once
        self.K1 = self._kernel_matrix(L1)
        self.K2 = self._kernel_matrix(L2)
        for label, cone, e in (("1", cone1, self.e1), ("2", cone2, self.e2)):
            if hasattr(cone, "contains_interior") and not cone.contains_interior(e):
                log.info("anchor e%s is not strictly interior to C%s; the constraint "
                         "qualification is assumed, not verified", label, label)

    @staticmethod
    def _kernel_matrix(L):
        Lstar = L.adjoint()
        return Lstar.matrix @ pseudoinverse(Lstar).matrix

    def state_space(self):
        return product_space([self.space1, self.space2])


def saddle_solve(prob, z10=None, z20=None, gamma=None, schedule=None, stop=None,
                 record_iterates=True):
    """Solve the saddle problem; returns (x1, x2, trace).

    All projections in the loop are onto C_i (shifted by e_i) and onto
    ker(L_i) through the cached matrices K_i = L_i* (L_i*)^+; the strategy
    sets S_i are never projected onto, yet the limits are feasible. The
    returned strategies are the kernel-projected states plus the anchors,
    x_i = (z_i - K_i z_i) + e_i; the K_i z_i component carries the dual
    multiplier of the affine constraint and does not vanish in general.
    """
    H1, H2 = prob.space1, prob.space2
    gamma = default_gamma(prob.chi) if gamma is None else float(gamma)
    if gamma <= 0 or (prob.chi > 0 and gamma >= 1.0 / prob.chi):
        raise ConfigurationError(
            f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / prob.chi if prob.chi > 0 else 'inf'}[, "
            f"got {gamma}"
        )
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(gamma * prob.chi)
    if not schedule.delta_is_unit:
        raise ConfigurationError("the saddle iteration uses unit inner steps only")

    z1 = H1.zeros() if z10 is None else as_coords(H1, z10).copy()
    z2 = H2.zeros() if z20 is None else as_coords(H2, z20).copy()
    K1, K2 = prob.K1, prob.K2
    e1, e2 = prob.e1, prob.e2
    state_space, _ = prob.state_space()
    trace = SolveTrace(state_space, record_iterates=record_iterates)
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        lam = schedule.lam_at(n)
        u1 = z1 - K1 @ z1
        u2 = z2 - K2 @ z2
        ga1, ga2 = prob.grad(e1 + u1, e2 + u2)
        g1 = ga1 - K1 @ ga1
        g2 = -(ga2 - K2 @ ga2)
        r1 = z1 - gamma * g1
        r2 = z2 - gamma * g2
        p1 = prob.cone1.project(r1 + e1) - e1
        p2 = prob.cone2.project(r2 + e2) - e2
        v1 = p1 - K1 @ p1
        v2 = p2 - K2 @ p2
        s1 = 2.0 * v1 - p1 + K1 @ r1
        s2 = 2.0 * v2 - p2 + K2 @ r2
        hb1, hb2 = prob.grad(e1 + v1, e2 + v2)
        h1 = hb1 - K1 @ hb1
        h2 = -(hb2 - K2 @ hb2)
        d1 = (s1 - gamma * h1) - r1
        d2 = (s2 - gamma * h2) - r2
        finite = bool(np.all(np.isfinite(d1)) and np.all(np.isfinite(d2)))
        if finite:
            residual = math.sqrt(H1.norm(d1) ** 2 + H2.norm(d2) ** 2)
            state_norm = math.sqrt(H1.norm(z1) ** 2 + H2.norm(z2) ** 2)
        else:
            residual, state_norm = float("nan"), 0.0
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, state_norm)
        if trace.should_record(n) or done:
            trace.record(n, np.concatenate([z1, z2]), residual, 1.0, lam, step_norm)
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        z1 = z1 + lam * d1
        z2 = z2 + lam * d2
    trace.finish(status, n + 1)
    x1 = (z1 - K1 @ z1) + e1
    x2 = (z2 - K2 @ z2) + e2
    return Point(H1, x1), Point(H2, x2), trace


def saddle_feasibility(prob, x1, x2):
    """Cone and affine feasibility defects of a strategy pair."""
    x1 = as_coords(prob.space1, x1)
    x2 = as_coords(prob.space2, x2)
    return {
        "cone_1": prob.space1.norm(x1 - prob.cone1.project(x1)),
        "cone_2": prob.space2.norm(x2 - prob.cone2.project(x2)),
        "affine_1": prob.L1.codomain.norm(prob.L1.apply(x1) - prob.b1),
        "affine_2": prob.L2.codomain.norm(prob.L2.apply(x2) - prob.b2),
    }


def check_gradient_oracle(prob, n_points=100, seed=42, step=1e-6):
    """Max relative error of the gradient oracle against central finite
    differences of ``prob.value``. Requires the payoff function."""
    if prob.value is None:
        raise ValueError("the saddle problem carries no payoff function")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        x1 = rng.uniform(-1.0, 1.0, prob.space1.dim)
        x2 = rng.uniform(-1.0, 1.0, prob.space2.dim)
        g1, g2 = prob.grad(x1, x2)
        fd1 = np.empty_like(g1)
        for k in range(x1.size):
            dx = np.zeros_like(x1)
            dx[k] = step
            fd1[k] = (prob.value(x1 + dx, x2) - prob.value(x1 - dx, x2)) / (2 * step)
        fd2 = np.empty_like(g2)
        for k in range(x2.size):
            dx = np.zeros_like(x2)
            dx[k] = step
            fd2[k] = (prob.value(x1, x2 + dx) - prob.value(x1, x2 - dx)) / (2 * step)
        scale = max(1.0, float(np.max(np.abs(g1))), float(np.max(np.abs(g2))))
        worst = max(
            worst,
            float(np.max(np.abs(fd1 - g1))) / scale,
            float(np.max(np.abs(fd2 - g2))) / scale,
        )
    return worst


# ---------------------------------------------------------------------------
# matrix games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixGame:
    """Finite zero-sum game; the row player minimizes x1' F x2."""

    payoff: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.payoff, dtype=float)
        if F.ndim != 2 or F.size == 0:
            raise ValueError("payoff must be a nonempty 2-d array")
        if not np.all(np.isfinite(F)):
            raise ValueError("payoff contains non-finite entries")
        F = F.copy()
        F.setflags(write=False)
        object.__setattr__(self, "payoff", F)

    @property
    def shape(self):
        return self.payoff.shape

    def chi(self):
        return float(np.linalg.svd(self.payoff, compute_uv=False)[0])


def matrix_game_saddle_problem(game):
    """Assemble the saddle form: orthant cones, all-ones constraint rows,
    uniform anchors, bilinear gradient, chi = largest singular value."""
    n1, n2 = game.shape
    F = game.payoff
    H1, H2 = Space(n1), Space(n2)
    R1 = Space(1)
    L1 = LinearMap(H1, R1, np.ones((1, n1)))
    L2 = LinearMap(H2, R1, np.ones((1, n2)))

    def grad(x1, x2):
        return F @ x2, F.T @ x1

    def value(x1, x2):
        return float(x1 @ F @ x2)

    return SaddleProblem(
        H1, H2, Orthant(), Orthant(), L1, L2,
        e1=np.full(n1, 1.0 / n1), e2=np.full(n2, 1.0 / n2),
        grad=grad, chi=game.chi(), b1=[1.0], b2=[1.0], value=value,
    )


def duality_gap(game, x1, x2):
    """max_j (x1' F)_j - min_i (F x2)_i; zero exactly at equilibrium.

    Inputs far from the simplex are projected onto it first, with a warning.
    """
    F = game.payoff
    x1 = np.asarray(as_coords(Space(F.shape[0]), x1), dtype=float)
    x2 = np.asarray(as_coords(Space(F.shape[1]), x2), dtype=float)
    x1 = _simplex_guard(x1, "x1")
    x2 = _simplex_guard(x2, "x2")
    return float(np.max(x1 @ F) - np.min(F @ x2))


def _simplex_guard(x, label, tol=1e-6):
    if abs(float(np.sum(x)) - 1.0) <= tol and float(np.min(x)) >= -tol:
        return x
    warnings.warn(f"{label} is not on the simplex; projecting", stacklevel=3)
    return _project_simplex(x)


def _project_simplex(x):
    # Euclidean projection onto the probability simplex (sort-based)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, x.size + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def matrix_game_value(game, x1, x2):
    return float(np.asarray(x1) @ game.payoff @ np.asarray(x2))


# ---------------------------------------------------------------------------
# grid-discretized continuous games
# ---------------------------------------------------------------------------


def quadrature_grid(a, b, n, rule="trapezoid"):
    """Sample points and weights for one player's strategy interval."""
    if n < 2:
        raise ValueError("a grid needs at least two points")
    if b <= a:
        raise ValueError("grid interval must have positive length")
    if rule == "trapezoid":
        xs = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
    elif rule == "midpoint":
        h = (b - a) / n
        xs = a + (np.arange(n) + 0.5) * h
        w = np.full(n, h)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return xs, w


@dataclass(frozen=True)
class GridGame:
    """A continuous zero-sum game sampled on product grids.

    ``kernel[i, j]`` is the payoff at (grid1[i], grid2[j]); ``w1``/``w2``
    are the quadrature weights, and the masses are their sums.
    """

    kernel: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    grid1: np.ndarray = None
    grid2: np.ndarray = None

    def __post_init__(self):
        F = np.asarray(self.kernel, dtype=float)
        w1 = np.asarray(self.w1, dtype=float)
        w2 = np.asarray(self.w2, dtype=float)
        if F.ndim != 2 or F.shape != (w1.size, w2.size):
            raise DimensionMismatchError("kernel shape must match the weight lengths")
        if np.any(w1 <= 0) or np.any(w2 <= 0):
            raise ValueError("quadrature weights must be positive")
        if not (np.sum(w1) > 0 and np.sum(w2) > 0):
            raise ValueError("grids must carry positive measure")
        for name, arr in (("kernel", F), ("w1", w1), ("w2", w2)):
            a = arr.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def from_function(cls, f, x1_range, x2_range, n1, n2, rule="trapezoid"):
        xs1, w1 = quadrature_grid(*x1_range, n1, rule)
        xs2, w2 = quadrature_grid(*x2_range, n2, rule)
        F = np.array([[f(x, y) for y in xs2] for x in xs1], dtype=float)
        return cls(F, w1, w2, grid1=xs1, grid2=xs2)

    @property
    def masses(self):
        return float(np.sum(self.w1)), float(np.sum(self.w2))

    def chi(self):
        """Quadrature norm of the kernel, sqrt(sum w1_i w2_j F_ij^2)."""
        return float(np.sqrt(np.sum(self.w1[:, None] * self.w2[None, :] * self.kernel**2)))

    def spaces(self):
        return Space(self.w1.size, self.w1), Space(self.w2.size, self.w2)


def grid_duality_gap(game, rho1, rho2):
    """Duality gap of density strategies on the induced finite game."""
    pi1 = game.w1 * np.asarray(rho1, dtype=float)
    pi2 = game.w2 * np.asarray(rho2, dtype=float)
    return float(np.max(pi1 @ game.kernel) - np.min(game.kernel @ pi2))


# ---------------------------------------------------------------------------
# bilinear kernel driver (shared by matrix and grid games)
# ---------------------------------------------------------------------------

GAME_STOP = StopRule(residual_tol=1e-10, iterate_tol=1e-300, max_iter=1_000_000)
GAP_CHECK_STRIDE = 64


def _run_bilinear(F, w1, w2, chi, gamma, schedule, stop, gap_tol, feas_tol, backend,
                  z10=None, z20=None):
    gamma = default_gamma(chi) if gamma is None else float(gamma)
    if gamma <= 0 or (chi > 0 and gamma >= 1.0 / chi):
        raise ConfigurationError(
            f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / chi if chi > 0 else 'inf'}[, "
            f"got {gamma}"
        )
    schedule = schedule or StepSchedule()
    stop = stop or GAME_STOP
    schedule.validate(gamma * chi)
    if not schedule.delta_is_unit:
        raise ConfigurationError("the bilinear kernel uses unit inner steps only")

    n1, n2 = F.shape
    m1, m2 = float(np.sum(w1)), float(np.sum(w2))
    inv_m1, inv_m2 = 1.0 / m1, 1.0 / m2
    G1, G2 = _kernels.centered_side_means(F, w1, w2, inv_m1, inv_m2)
    z1 = np.zeros(n1) if z10 is None else np.asarray(z10, dtype=float).copy()
    z2 = np.zeros(n2) if z20 is None else np.asarray(z20, dtype=float).copy()

    lams = np.array([schedule.lam_at(k) for k in range(stop.max_iter)])
    res_out = np.empty(stop.max_iter)
    n_done, reason = _kernels.bilinear_saddle_loop(
        np.ascontiguousarray(F), w1, w2, inv_m1, inv_m2, G1, G2, gamma, lams,
        z1, z2, res_out, stop.residual_tol, gap_tol, feas_tol,
        GAP_CHECK_STRIDE, backend=backend,
    )

    status = {
        _kernels.STOP_EXHAUSTED: MAX_ITER,
        _kernels.STOP_RESIDUAL: CONVERGED,
        _kernels.STOP_GAP: CONVERGED,
        _kernels.STOP_DIVERGED: DIVERGED,
    }[reason]
    state_space = Space(n1 + n2, np.concatenate([w1, w2]))
    trace = SolveTrace(state_space, record_iterates=False)
    for k in range(n_done):
        if trace.should_record(k) or k == n_done - 1:
            lam = float(lams[k])
            trace.record(k, None, res_out[k], 1.0, lam, lam * res_out[k])
    trace.finish(status, n_done)
    trace.backend = _kernels.active_backend(backend)
    x1, x2 = _kernels.extract_strategies(w1, w2, z1, z2, inv_m1, inv_m2)
    return x1, x2, trace


def matrix_game_solve(game, gamma=None, stop=None, schedule=None, gap_tol=1e-6,
                      feas_tol=1e-9, backend=None):
    """Solve a finite zero-sum game; returns (mixed1, mixed2, value, trace).

    Strategies are never projected onto the simplex: the affine part is
    satisfied by the kernel-projected extraction, nonnegativity only up to
    the convergence tolerance.
    """
    F = game.payoff
    n1, n2 = F.shape
    w1, w2 = np.ones(n1), np.ones(n2)
    x1, x2, trace = _run_bilinear(
        F, w1, w2, game.chi(), gamma, schedule, stop, gap_tol, feas_tol, backend,
    )
    value = matrix_game_value(game, x1, x2)
    return Point(Space(n1), x1), Point(Space(n2), x2), value, trace


def grid_game_solve(game, gamma=None, stop=None, schedule=None, gap_tol=1e-7,
                    feas_tol=1e-9, backend=None):
    """Solve a grid-discretized continuous game; returns (density1, density2, trace).

    Output densities are nonnegative up to tolerance and integrate to one
    against the quadrature weights.
    """
    rho1, rho2, trace = _run_bilinear(
        game.kernel, game.w1, game.w2, game.chi(), gamma, schedule, stop,
        gap_tol, feas_tol, backend,
    )
    S1, S2 = game.spaces()
    return Point(S1, rho1), Point(S2, rho2), trace
