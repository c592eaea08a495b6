"""Monotone operators represented through resolvents and lipschitz maps.

Set-valued maximally monotone operators are only ever touched through
their resolvents J_{gamma A} = (Id + gamma A)^(-1); graphs are never
materialized. Single-valued monotone maps carry a certified lipschitz
constant. Partial inverses with respect to a subspace are evaluated
either by the reflected closed form (unit inner step) or, for linear
operators, by a direct solve of the defining inclusion.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateCertificateError,
    DimensionMismatchError,
    NoClosedFormError,
)
from .hilbert import LinearMap, Point, Projector, Space, as_coords


class ResolventOp:
    """A maximally monotone operator given by its resolvent map.

    Parameters
    ----------
    space : Space
    resolvent : callable
        ``resolvent(gamma, x) -> ndarray`` evaluating J_{gamma A}(x) on
        coordinate arrays, for any gamma > 0.
    name : str, optional
    matrix, shift : ndarray, optional
        Present when the operator is the affine map x -> matrix @ x + shift;
        enables direct linear solves elsewhere.
    """

    def __init__(self, space, resolvent, name="", matrix=None, shift=None, point=None):
        self.space = space
        self._resolvent = resolvent
        self.name = name
        self.matrix = None if matrix is None else np.asarray(matrix, dtype=float)
        self.shift = None if shift is None else np.asarray(shift, dtype=float)
        self.point = None if point is None else np.asarray(point, dtype=float)

    @property
    def is_linear(self):
        return self.matrix is not None

    @property
    def is_zero(self):
        return self.is_linear and not np.any(self.matrix) and (
            self.shift is None or not np.any(self.shift)
        )

    def resolvent(self, gamma, x):
        if gamma <= 0:
            raise ValueError(f"resolvent parameter must be positive, got {gamma}")
        return self._resolvent(float(gamma), np.asarray(x, dtype=float))

    def resolvent_point(self, gamma, x):
        return Point(self.space, self.resolvent(gamma, as_coords(self.space, x)))

    def __repr__(self):
        return f"ResolventOp({self.name or 'custom'}, dim={self.space.dim})"


def reflect(A, gamma, x):
    """Reflected resolvent 2 J_{gamma A} - Id, a nonexpansive map."""
    coords = as_coords(A.space, x)
    out = 2.0 * A.resolvent(gamma, coords) - coords
    return Point(A.space, out) if isinstance(x, Point) else out


# ---------------------------------------------------------------------------
# catalog of standard operators
# ---------------------------------------------------------------------------


def zero_operator(space):
    """The zero operator; its resolvent is the identity."""
    return ResolventOp(
        space,
        lambda gamma, x: x.copy(),
        name="zero",
        matrix=np.zeros((space.dim, space.dim)),
        shift=np.zeros(space.dim),
    )


def box_normal_cone(space, lower, upper):
    """Normal cone of a box [lower, upper]; resolvent = clipping.

    Infinite bounds are allowed (use -inf/inf for one-sided boxes). With a
    diagonal metric the projection stays componentwise.
    """
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (space.dim,)).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (space.dim,)).copy()
    if np.any(lo > hi):
        raise ValueError("box bounds must satisfy lower <= upper")
    return ResolventOp(space, lambda gamma, x: np.clip(x, lo, hi), name="box_normal_cone")


def point_normal_cone(space, c):
    """Normal cone of the singleton {c}; resolvent is constant c."""
    cc = as_coords(space, c).copy()
    return ResolventOp(space, lambda gamma, x: cc.copy(), name="point_normal_cone", point=cc)


def halfspace_normal_cone(space, normal, offset):
    """Normal cone of {x : <a, x> <= b} in the space metric."""
    a = as_coords(space, normal)
    nrm2 = space.inner(a, a)
    if nrm2 <= 0:
        raise ValueError("half-space normal must be nonzero")
    b = float(offset)

    def res(gamma, x):
        excess = space.inner(a, x) - b
        if excess <= 0:
            return x.copy()
        return x - (excess / nrm2) * a

    return ResolventOp(space, res, name="halfspace_normal_cone")


def affine_set_normal_cone(space, L, b):
    """Normal cone of {x : L x = b}; resolvent = metric projection.

    ``L`` is a LinearMap from ``space``; the projection uses the metric
    pseudoinverse, so inconsistent b is projected onto the range first.
    """
    from .hilbert import pseudoinverse

    if L.domain != space:
        raise DimensionMismatchError("affine constraint map must act on the given space")
    b = as_coords(L.codomain, b)
    pinv = pseudoinverse(L).matrix

    def res(gamma, x):
        return x - pinv @ (L.matrix @ x - b)

    return ResolventOp(space, res, name="affine_set_normal_cone")


def _check_monotone_matrix(space, M, tol=1e-10):
    """Reject matrices whose symmetric part (in the metric) has an
    eigenvalue below -tol."""
    WM = space.weights[:, None] * M
    sym = 0.5 * (WM + WM.T)
    lam_min = float(np.linalg.eigvalsh(sym)[0])
    # normalize back to the metric scale
    lam_min /= float(np.min(space.weights))
    if lam_min < -tol:
        raise ValueError(f"matrix is not monotone (symmetric-part eigenvalue {lam_min:.3e})")


def monotone_linear(space, M, shift=None):
    """The affine operator x -> M x + c for a monotone matrix M.

    The resolvent (Id + gamma M)^(-1)(x - gamma c) is evaluated by a dense
    linear solve. Non-monotone matrices are rejected at construction.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (space.dim, space.dim):
        raise DimensionMismatchError(f"matrix has shape {M.shape}, expected {(space.dim,) * 2}")
    _check_monotone_matrix(space, M)
    c = np.zeros(space.dim) if shift is None else as_coords(space, shift).copy()
    eye = np.eye(space.dim)

    def res(gamma, x):
        return np.linalg.solve(eye + gamma * M, x - gamma * c)

    return ResolventOp(space, res, name="monotone_linear", matrix=M, shift=c)


def quadratic_subdifferential(space, Q, c=None):
    """Gradient of the quadratic x -> x'Qx/2 + <c, x> (Q monotone)."""
    return monotone_linear(space, Q, shift=c)


def abs_subdifferential(space, scale=1.0):
    """Subdifferential of scale * ||.||_1; resolvent = soft threshold."""
    scale = float(scale)
    if scale < 0:
        raise ValueError("scale must be nonnegative")

    def res(gamma, x):
        t = gamma * scale
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    return ResolventOp(space, res, name="abs_subdifferential")


def shifted(A, e):
    """The operator x -> A(x - e)."""
    ec = as_coords(A.space, e).copy()
    matrix = shift = None
    if A.is_linear:
        matrix = A.matrix
        shift = (A.shift if A.shift is not None else 0.0) - A.matrix @ ec

    def res(gamma, x):
        return ec + A.resolvent(gamma, x - ec)

    return ResolventOp(A.space, res, name=f"shifted({A.name})", matrix=matrix, shift=shift)


def plus_identity(A, c):
    """The operator A + c Id for c >= 0."""
    c = float(c)
    if c < 0:
        raise ValueError("identity coefficient must be nonnegative")
    matrix = shift = None
    if A.is_linear:
        matrix = A.matrix + c * np.eye(A.space.dim)
        shift = A.shift

    def res(gamma, x):
        scale = 1.0 + gamma * c
        return A.resolvent(gamma / scale, x / scale)

    return ResolventOp(A.space, res, name=f"{A.name}+{c}*id", matrix=matrix, shift=shift)


def inverse_resolvent(A, gamma, x):
    """J_{gamma A^(-1)}(x) through the scaled inversion identity."""
    coords = np.asarray(x, dtype=float)
    return coords - gamma * A.resolvent(1.0 / gamma, coords / gamma)


# ---------------------------------------------------------------------------
# lipschitzian monotone maps
# ---------------------------------------------------------------------------


class LipschitzMap:
    """A single-valued monotone map with a certified lipschitz constant."""

    def __init__(self, space, func, chi, name="", matrix=None, shift=None):
        if chi < 0:
            raise ValueError("lipschitz constant must be nonnegative")
        self.space = space
        self._func = func
        self.chi = float(chi)
        self.name = name
        self.matrix = None if matrix is None else np.asarray(matrix, dtype=float)
        self.shift = None if shift is None else np.asarray(shift, dtype=float)

    @property
    def is_linear(self):
        return self.matrix is not None

    def __call__(self, x):
        return self._func(np.asarray(x, dtype=float))

    def apply_point(self, x):
        return Point(self.space, self(as_coords(self.space, x)))

    def __repr__(self):
        return f"LipschitzMap({self.name or 'custom'}, chi={self.chi})"


def zero_map(space):
    return LipschitzMap(
        space,
        lambda x: np.zeros(space.dim),
        chi=0.0,
        name="zero",
        matrix=np.zeros((space.dim, space.dim)),
        shift=np.zeros(space.dim),
    )


def linear_monotone_map(space, M, shift=None, chi=None):
    """The affine map x -> M x + c with metric operator-norm constant."""
    M = np.asarray(M, dtype=float)
    if M.shape != (space.dim, space.dim):
        raise DimensionMismatchError(f"matrix has shape {M.shape}, expected {(space.dim,) * 2}")
    _check_monotone_matrix(space, M)
    c = np.zeros(space.dim) if shift is None else as_coords(space, shift).copy()
    if chi is None:
        chi = LinearMap(space, space, M).norm()

    def func(x):
        return M @ x + c

    return LipschitzMap(space, func, chi, name="linear", matrix=M, shift=c)


def translation_residual(space, target):
    """The map x -> x - target (gradient of half the squared distance)."""
    t = as_coords(space, target).copy()
    return linear_monotone_map(space, np.eye(space.dim), shift=-t, chi=1.0)


def lipschitz_from_callable(space, func, chi, name="custom"):
    return LipschitzMap(space, func, chi, name=name)


# ---------------------------------------------------------------------------
# partial inverses
# ---------------------------------------------------------------------------


class PartialInverseView:
    """The operator (gamma A)_V, accessed through its unit resolvent."""

    def __init__(self, base, projector, gamma):
        if base.space != projector.space:
            raise DimensionMismatchError("operator and projector live in different spaces")
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.base = base
        self.projector = projector
        self.gamma = float(gamma)


def partial_inverse_resolvent(view, x):
    """Unit resolvent of (gamma A)_V by the reflected closed form.

    Evaluates (x + R_{N_V}(R_{gamma A}(x))) / 2 where R_{N_V} = 2 P_V - Id,
    equivalently P_V J_{gamma A} x + P_{Vperp}(x - J_{gamma A} x).
    """
    P = view.projector
    coords = as_coords(P.space, x)
    refl = 2.0 * view.base.resolvent(view.gamma, coords) - coords
    out = 0.5 * (coords + 2.0 * P.apply(refl) - refl)
    return Point(P.space, out) if isinstance(x, Point) else out


def partial_inverse_resolvent_linear(A, P, gamma, delta, x):
    """Resolvent J_{delta (gamma A)_V}(x) for an affine operator A.

    Solves the defining inclusion directly: find p, q with x = p + gamma q
    and P_V q / delta + P_Vperp q = M (P_V p + P_Vperp p / delta) + c, then
    return P_V p + gamma P_Vperp q. Valid for every delta > 0.
    """
    if not A.is_linear:
        raise NoClosedFormError("direct partial-inverse solve requires an affine operator")
    if gamma <= 0 or delta <= 0:
        raise ValueError("gamma and delta must be positive")
    coords = as_coords(P.space, x)
    n = P.space.dim
    eye = np.eye(n)
    Pv = P.matrix
    Pperp = eye - Pv
    M = A.matrix
    c = A.shift if A.shift is not None else np.zeros(n)
    Sq = Pv / delta + Pperp
    Sp = Pv + Pperp / delta
    lhs = Sq / gamma + M @ Sp
    rhs = Sq @ coords / gamma - c
    p = np.linalg.solve(lhs, rhs)
    out = Pv @ p + Pperp @ (coords - p)
    return Point(P.space, out) if isinstance(x, Point) else out


def partial_inverse_apply_singlevalued(D, P, u, beta, nu, tol=1e-10, max_iter=10_000):
    """Evaluate D_V(u) for a strongly monotone, cocoercive single-valued D.

    The caller certifies beta-strong monotonicity and nu-cocoercivity.
    Writing a = P_V u + w with w in Vperp, the defining inclusion reduces
    to P_Vperp D(a) = P_Vperp u; linear maps are solved directly, anything
    else by a damped fixed-point iteration on w.
    """
    if beta <= 0 or nu <= 0:
        raise ValueError("certificates beta and nu must be positive")
    space = P.space
    coords = as_coords(space, u)
    Pv, n = P.matrix, space.dim
    Pperp = np.eye(n) - Pv
    if D.is_linear:
        M = D.matrix
        c = D.shift if D.shift is not None else np.zeros(n)
        a = np.linalg.solve(Pv + Pperp @ M, coords - Pperp @ c)
        out = Pv @ (M @ a + c) + Pperp @ a
        return Point(space, out) if isinstance(u, Point) else out

    base = Pv @ coords
    target = Pperp @ coords
    w = np.zeros(n)
    damping = 0.5 / (1.0 + D.chi)
    for _ in range(max_iter):
        Da = D(base + w)
        g = Pperp @ Da - target
        if space.norm(g) <= tol:
            return _pack_partial_inverse(space, u, Pv, Pperp, base + w, Da)
        w = w - damping * g
    raise DegenerateCertificateError(
        f"partial-inverse iteration did not reach {tol:.1e} in {max_iter} steps"
    )


def _pack_partial_inverse(space, u, Pv, Pperp, a, Da):
    out = Pv @ Da + Pperp @ a
    return Point(space, out) if isinstance(u, Point) else out


# ---------------------------------------------------------------------------
# partial sums
# ---------------------------------------------------------------------------


def partial_sum_resolvent(A, B, P, gamma, x, sum_resolvent=None):
    """Resolvent of the partial sum of A and B with respect to U = ran(P).

    Only the closed-form regimes are evaluated: U equal to the whole space
    (plain sum A + B) and U = {0} (parallel sum). Everything else raises
    NoClosedFormError; general subspaces are handled by the primal-dual
    solver, which never needs this resolvent directly.
    """
    if A.space != B.space or A.space != P.space:
        raise DimensionMismatchError("operands live in different spaces")
    coords = as_coords(P.space, x)

    if P.is_identity:
        if sum_resolvent is not None:
            out = sum_resolvent(gamma, coords)
        elif A.is_zero:
            out = B.resolvent(gamma, coords)
        elif B.is_zero:
            out = A.resolvent(gamma, coords)
        elif A.is_linear and B.is_linear:
            shift = (A.shift if A.shift is not None else 0.0) + (
                B.shift if B.shift is not None else 0.0
            )
            combined = monotone_linear(A.space, A.matrix + B.matrix, shift=shift)
            out = combined.resolvent(gamma, coords)
        else:
            raise NoClosedFormError("no closed form for the sum resolvent of these operators")
        return Point(P.space, out) if isinstance(x, Point) else out

    if P.is_zero:
        out = _parallel_sum_resolvent(A, B, gamma, coords)
        return Point(P.space, out) if isinstance(x, Point) else out

    raise NoClosedFormError(
        "partial-sum resolvent has no closed form for a proper subspace; "
        "route the problem through the primal-dual solver"
    )


def _parallel_sum_resolvent(A, B, gamma, coords):
    # normal cone of {0}: its inverse is the zero map, so that term drops
    if B.point is not None and not np.any(B.point):
        return A.resolvent(gamma, coords)
    if A.point is not None and not np.any(A.point):
        return B.resolvent(gamma, coords)
    if A.is_linear and B.is_linear and A.shift is not None and B.shift is not None:
        if np.any(A.shift) or np.any(B.shift):
            raise NoClosedFormError("parallel sum of affine operators with shifts is unsupported")
        try:
            inv = np.linalg.inv(np.linalg.inv(A.matrix) + np.linalg.inv(B.matrix))
        except np.linalg.LinAlgError as exc:
            raise NoClosedFormError(f"parallel sum needs invertible matrices: {exc}") from exc
        combined = monotone_linear(A.space, inv)
        return combined.resolvent(gamma, coords)
    raise NoClosedFormError("no closed form for the parallel-sum resolvent of these operators")


# ---------------------------------------------------------------------------
# sampling probes
# ---------------------------------------------------------------------------


def _sample_pairs(space, n_samples, radius, seed):
    rng = np.random.default_rng(seed)
    shape = (n_samples, space.dim)
    return rng.uniform(-radius, radius, shape), rng.uniform(-radius, radius, shape)


def probe_monotone(func, space, n_samples=1000, radius=5.0, seed=42):
    """Minimum sampled <x - y, Tx - Ty> over random pairs in a box."""
    xs, ys = _sample_pairs(space, n_samples, radius, seed)
    worst = np.inf
    for x, y in zip(xs, ys):
        worst = min(worst, space.inner(x - y, func(x) - func(y)))
    return worst


def probe_lipschitz(func, space, n_samples=1000, radius=5.0, seed=42):
    """Maximum sampled ratio ||Tx - Ty|| / ||x - y|| over random pairs."""
    xs, ys = _sample_pairs(space, n_samples, radius, seed)
    best = 0.0
    for x, y in zip(xs, ys):
        gap = space.norm(x - y)
        if gap < 1e-12:
            continue
        best = max(best, space.norm(func(x) - func(y)) / gap)
    return best


def probe_firm_nonexpansive(res_func, space, n_samples=1000, radius=5.0, seed=42):
    """Minimum sampled <x - y, Jx - Jy> - ||Jx - Jy||^2 (>= 0 for resolvents)."""
    xs, ys = _sample_pairs(space, n_samples, radius, seed)
    worst = np.inf
    for x, y in zip(xs, ys):
        dj = res_func(x) - res_func(y)
        worst = min(worst, space.inner(x - y, dj) - space.inner(dj, dj))
    return worst
