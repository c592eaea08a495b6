"""Finite-dimensional real Hilbert space primitives.

Spaces carry a diagonal metric (positive weights), points are dense
coordinate arrays, and closed subspaces are always materialized as
projector matrices. Pseudoinverses and kernel projectors are computed
through a rank-revealing SVD in the metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError

# Singular values below SV_CUTOFF * sigma_max are treated as zero.
SV_CUTOFF = 1e-12


def _as_float_array(values, dim=None, what="array"):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"{what} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    return arr


class Space:
    """A real inner-product space R^dim with a diagonal metric.

    Parameters
    ----------
    dim : int
        Dimension, at least 1.
    weights : array_like, optional
        Strictly positive diagonal metric weights. Defaults to all ones
        (the standard Euclidean inner product).
    """

    def __init__(self, dim, weights=None):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        if weights is None:
            w = np.ones(dim)
        else:
            w = _as_float_array(weights, dim, "weights").copy()
            if np.any(w <= 0):
                raise ValueError("metric weights must be strictly positive")
        self.weights = w
        self.weights.setflags(write=False)
        self._sqrt_w = np.sqrt(w)

    def inner(self, x, y):
        """Weighted inner product <x, y>."""
        return float(np.dot(self.weights * np.asarray(x), np.asarray(y)))

    def norm(self, x):
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def zeros(self):
        return np.zeros(self.dim)

    def point(self, coords):
        return Point(self, _as_float_array(coords, self.dim, "coords"))

    @property
    def is_standard(self):
        return bool(np.all(self.weights == 1.0))

    def __eq__(self, other):
        return (
            isinstance(other, Space)
            and self.dim == other.dim
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.dim, self.weights.tobytes()))

    def __repr__(self):
        metric = "standard" if self.is_standard else "weighted"
        return f"Space(dim={self.dim}, {metric})"


@dataclass(frozen=True)
class Point:
    """An element of a Space, held as a dense coordinate array."""

    space: Space
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        arr = _as_float_array(self.coords, self.space.dim, "coords").copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def norm(self):
        return self.space.norm(self.coords)

    def inner(self, other):
        return self.space.inner(self.coords, as_coords(self.space, other))

    def __add__(self, other):
        return Point(self.space, self.coords + as_coords(self.space, other))

    def __sub__(self, other):
        return Point(self.space, self.coords - as_coords(self.space, other))

    def __rmul__(self, scalar):
        return Point(self.space, float(scalar) * self.coords)

    def __neg__(self):
        return Point(self.space, -self.coords)


def as_coords(space, x):
    """Coerce a Point or array-like to a coordinate array of ``space``."""
    if isinstance(x, Point):
        if x.space != space:
            raise DimensionMismatchError(f"point lives in {x.space}, expected {space}")
        return x.coords
    return _as_float_array(x, space.dim, "coords")


class Projector:
    """Orthogonal projector onto a closed subspace, in the space metric.

    The matrix must be idempotent and self-adjoint with respect to the
    weighted inner product; both are checked at construction.
    """

    #: construction tolerances, scaled by dim
    IDEMPOTENCE_TOL = 1e-10
    ADJOINT_TOL = 1e-10

    def __init__(self, space, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (space.dim, space.dim):
            raise DimensionMismatchError(
                f"projector matrix has shape {matrix.shape}, expected {(space.dim,) * 2}"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("projector matrix contains non-finite entries")
        resid = np.linalg.norm(matrix @ matrix - matrix)
        if resid > self.IDEMPOTENCE_TOL * space.dim:
            raise ValueError(f"matrix is not idempotent (||P^2 - P|| = {resid:.3e})")
        wp = space.weights[:, None] * matrix
        asym = np.linalg.norm(wp - wp.T)
        if asym > self.ADJOINT_TOL * space.dim * max(1.0, float(np.max(space.weights))):
            raise ValueError(f"matrix is not self-adjoint in the metric (gap {asym:.3e})")
        self.space = space
        self.matrix = matrix.copy()
        self.matrix.setflags(write=False)

    @classmethod
    def identity(cls, space):
        return cls(space, np.eye(space.dim))

    @classmethod
    def zero(cls, space):
        return cls(space, np.zeros((space.dim, space.dim)))

    def complement(self):
        """Projector onto the orthogonal complement, Id - P."""
        return Projector(self.space, np.eye(self.space.dim) - self.matrix)

    def apply(self, x):
        return self.matrix @ np.asarray(x)

    @property
    def rank(self):
        return int(round(float(np.trace(self.matrix))))

    @property
    def is_identity(self):
        return bool(np.linalg.norm(self.matrix - np.eye(self.space.dim)) <= 1e-12 * self.space.dim)

    @property
    def is_zero(self):
        return bool(np.linalg.norm(self.matrix) <= 1e-12 * self.space.dim)

    def __repr__(self):
        return f"Projector(dim={self.space.dim}, rank={self.rank})"


def project(P, x):
    """Apply a projector to a point."""
    return Point(P.space, P.apply(as_coords(P.space, x)))


def projector_from_basis(space, basis):
    """Orthogonal projector onto the span of the given points.

    Rank-deficient spanning sets are accepted; an empty basis yields the
    zero projector.
    """
    vecs = [as_coords(space, b) for b in basis]
    if not vecs:
        return Projector.zero(space)
    B = np.column_stack(vecs)
    # orthonormalize in the metric: columns of W^(1/2) B
    Bt = space._sqrt_w[:, None] * B
    U, s, _ = np.linalg.svd(Bt, full_matrices=False)
    rank = int(np.sum(s > SV_CUTOFF * s[0])) if s.size else 0
    Q = U[:, :rank]
    P_std = Q @ Q.T
    P = (P_std * space._sqrt_w[None, :]) / space._sqrt_w[:, None]
    return Projector(space, P)


@dataclass(frozen=True)
class LinearMap:
    """A bounded linear map between two spaces, as a dense matrix."""

    domain: Space
    codomain: Space
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise DimensionMismatchError(
                f"matrix has shape {m.shape}, expected "
                f"{(self.codomain.dim, self.domain.dim)}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("linear map matrix contains non-finite entries")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, x):
        return self.matrix @ as_coords(self.domain, x)

    def adjoint(self):
        """Metric adjoint L*: codomain -> domain."""
        W1, W2 = self.domain.weights, self.codomain.weights
        mat = (self.matrix.T * W2[None, :]) / W1[:, None]
        return LinearMap(self.codomain, self.domain, mat)

    def norm(self):
        """Operator norm (largest singular value) in the space metrics."""
        s = np.linalg.svd(self._std_matrix(), compute_uv=False)
        return float(s[0]) if s.size else 0.0

    def _std_matrix(self):
        """Coordinates of the map between the standard metrics."""
        return (self.codomain._sqrt_w[:, None] * self.matrix) / self.domain._sqrt_w[None, :]


def pseudoinverse(L):
    """Moore-Penrose pseudoinverse of a linear map, in the space metrics.

    Small singular values (<= SV_CUTOFF * sigma_max) are truncated, so the
    result satisfies the four Penrose identities with metric adjoints.
    """
    A = L._std_matrix()
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size:
        keep = s > SV_CUTOFF * s[0]
        inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
        pinv_std = (Vt.T * inv_s[None, :]) @ U.T
    else:
        pinv_std = np.zeros((L.domain.dim, L.codomain.dim))
    mat = (pinv_std * L.codomain._sqrt_w[None, :]) / L.domain._sqrt_w[:, None]
    return LinearMap(L.codomain, L.domain, mat)


def projector_from_kernel(L):
    """Orthogonal projector onto ker(L), computed as Id - L* (L*)^+."""
    Lstar = L.adjoint()
    Lstar_pinv = pseudoinverse(Lstar)
    P = np.eye(L.domain.dim) - Lstar.matrix @ Lstar_pinv.matrix
    return Projector(L.domain, P)


def product_space(spaces):
    """Concatenate spaces into one block space with stacked weights."""
    dims = [s.dim for s in spaces]
    weights = np.concatenate([s.weights for s in spaces])
    return Space(sum(dims), weights), dims


def split_blocks(arr, dims):
    """Split a stacked coordinate array back into per-space blocks."""
    out = []
    offset = 0
    for d in dims:
        out.append(np.asarray(arr)[offset : offset + d])
        offset += d
    return out
