"""Solver for 0 in sum_i A_i(x) + B(x) via a consensus product space.

The m operator blocks are kept as separate points rather than one long
array; each iteration applies every resolvent at a rescaled step gamma/w_i,
mixes through the weighted consensus, and takes two forward steps on B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError
from .hilbert import Point, Space, as_coords
from .splitting import default_gamma
from .tseng import (
    CONVERGED,
    DIVERGED,
    MAX_ITER,
    SolveTrace,
    StepSchedule,
    StopRule,
)


@dataclass
class SumProblem:
    """m maximally monotone operators, one lipschitz map, consensus weights."""

    ops: list
    B: object
    weights: object = None
    gamma: float = None

    def __post_init__(self):
        if not self.ops:
            raise ConfigurationError("at least one operator block is required")
        space = self.ops[0].space
        for op in self.ops:
            if op.space != space:
                raise DimensionMismatchError("all operator blocks must share one space")
        if self.B.space != space:
            raise DimensionMismatchError("B must share the operators' space")
        m = len(self.ops)
        if self.weights is None:
            self.weights = np.full(m, 1.0 / m)
        else:
            self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (m,) or np.any(self.weights <= 0):
            raise ConfigurationError("weights must be m positive reals")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ConfigurationError(f"weights must sum to 1, got {np.sum(self.weights)}")
        if self.gamma is None:
            self.gamma = default_gamma(self.B.chi)
        self.gamma = float(self.gamma)
        chi = self.B.chi
        if self.gamma <= 0 or (chi > 0 and self.gamma >= 1.0 / chi):
            raise ConfigurationError(
                f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / chi if chi > 0 else 'inf'}[, "
                f"got {self.gamma}"
            )

    @property
    def space(self):
        return self.ops[0].space

    @property
    def m(self):
        return len(self.ops)

    def product_space(self):
        """The m-fold product with block weights w_i folded into the metric."""
        w = np.concatenate([wi * self.space.weights for wi in self.weights])
        return Space(self.m * self.space.dim, w)


def weighted_consensus(weights, vectors):
    """Exactly rounded weighted sum of blocks, coordinate by coordinate.

    math.fsum makes the result independent of block order, so permuting
    the (A_i, w_i, z_i) triples jointly is bitwise neutral.
    """
    terms = [w * v for w, v in zip(weights, vectors)]
    stacked = np.stack(terms)
    return np.array([math.fsum(stacked[:, k]) for k in range(stacked.shape[1])])


def sum_solve(prob, z0=None, schedule=None, stop=None, record_iterates=True):
    """Run the consensus splitting; returns (consensus point, trace).

    Per iteration and block: r_i = z_i - gamma B(x); p_i = J_{gamma A_i / w_i}(r_i);
    with q the consensus of the p_i, s_i = 2q - p_i + z_i - x and
    t_i = s_i - gamma B(q). The trace residual is max_i ||t_i - r_i|| and the
    extra column consensus_drift is max_i ||z_i - x||.
    """
    space = prob.space
    m, w, gamma = prob.m, prob.weights, prob.gamma
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(gamma * prob.B.chi)
    if not schedule.delta_is_unit:
        raise ConfigurationError("the consensus splitting uses unit inner steps only")

    if z0 is None:
        zs = [space.zeros() for _ in range(m)]
    else:
        if len(z0) != m:
            raise DimensionMismatchError(f"expected {m} starting blocks, got {len(z0)}")
        zs = [as_coords(space, zi).copy() for zi in z0]

    prod_space = prob.product_space()
    trace = SolveTrace(prod_space, record_iterates=record_iterates, extra_columns=("consensus_drift",))
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        lam = schedule.lam_at(n)
        x = weighted_consensus(w, zs)
        Bx = prob.B(x)
        rs = [zi - gamma * Bx for zi in zs]
        ps = [prob.ops[i].resolvent(gamma / w[i], rs[i]) for i in range(m)]
        q = weighted_consensus(w, ps)
        Bq = prob.B(q)
        ds = [(2.0 * q - ps[i] + zs[i] - x) - gamma * Bq - rs[i] for i in range(m)]
        finite = all(np.all(np.isfinite(d)) for d in ds) and np.all(np.isfinite(x))
        residual = max(space.norm(d) for d in ds) if finite else float("nan")
        drift = max(space.norm(zi - x) for zi in zs) if finite else float("nan")
        state_norm = prod_space.norm(np.concatenate(zs)) if finite else 0.0
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, state_norm)
        if trace.should_record(n) or done:
            trace.record(
                n, np.concatenate(zs), residual, 1.0, lam, step_norm,
                extra={"consensus_drift": drift},
            )
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        zs = [zs[i] + lam * ds[i] for i in range(m)]
    trace.finish(status, n + 1)
    return Point(space, weighted_consensus(w, zs)), trace


def solution_residuals(prob, zs):
    """Certificates at a state: inclusion gap ||sum_i y_i + B(q)|| with
    y_i = w_i (r_i - p_i)/gamma in A_i(p_i), plus spread of the p_i."""
    space, w, gamma = prob.space, prob.weights, prob.gamma
    zs = [as_coords(space, zi) for zi in zs]
    x = weighted_consensus(w, zs)
    Bx = prob.B(x)
    rs = [zi - gamma * Bx for zi in zs]
    ps = [prob.ops[i].resolvent(gamma / w[i], rs[i]) for i in range(prob.m)]
    q = weighted_consensus(w, ps)
    ys = [w[i] * (rs[i] - ps[i]) / gamma for i in range(prob.m)]
    inclusion = space.norm(np.sum(ys, axis=0) + prob.B(q))
    spread = max(space.norm(p - q) for p in ps)
    ds = [(2.0 * q - ps[i] + zs[i] - x) - gamma * prob.B(q) - rs[i] for i in range(prob.m)]
    fixed_point = max(space.norm(d) for d in ds) / max(
        1.0, prob.product_space().norm(np.concatenate(zs))
    )
    return {"inclusion": inclusion, "consensus_spread": spread, "fixed_point": fixed_point}


def two_op_parallel_solve(A1, A2, z10=None, z20=None, gamma=None, schedule=None, stop=None,
                          record_iterates=True):
    """Parallel two-resolvent method for 0 in A1(x) + A2(x).

    Per iteration: x = (z1 + z2)/2; p1 = J_{2 gamma A1}(z1);
    p2 = J_{2 gamma A2}(z2); z1 += lam (p2 - x); z2 += lam (p1 - x).
    Iterate-for-iterate this equals sum_solve with m = 2, B = 0 and
    equal weights.
    """
    if A1.space != A2.space:
        raise DimensionMismatchError("A1 and A2 must share a space")
    space = A1.space
    gamma = 1.0 if gamma is None else float(gamma)
    if gamma <= 0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(0.0)

    z1 = space.zeros() if z10 is None else as_coords(space, z10).copy()
    z2 = space.zeros() if z20 is None else as_coords(space, z20).copy()
    prod_space = Space(2 * space.dim, np.concatenate([0.5 * space.weights] * 2))
    trace = SolveTrace(prod_space, record_iterates=record_iterates, extra_columns=("consensus_drift",))
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        lam = schedule.lam_at(n)
        x = (z1 + z2) / 2.0
        p1 = A1.resolvent(2.0 * gamma, z1)
        p2 = A2.resolvent(2.0 * gamma, z2)
        d1 = p2 - x
        d2 = p1 - x
        finite = bool(np.all(np.isfinite(d1)) and np.all(np.isfinite(d2)))
        residual = max(space.norm(d1), space.norm(d2)) if finite else float("nan")
        drift = max(space.norm(z1 - x), space.norm(z2 - x)) if finite else float("nan")
        state_norm = prod_space.norm(np.concatenate([z1, z2])) if finite else 0.0
        step_norm = lam * residual
        done = not finite or stop.satisfied(residual, step_norm, state_norm)
        if trace.should_record(n) or done:
            trace.record(
                n, np.concatenate([z1, z2]), residual, 1.0, lam, step_norm,
                extra={"consensus_drift": drift},
            )
        if done:
            status = DIVERGED if not finite else CONVERGED
            break
        z1 = z1 + lam * d1
        z2 = z2 + lam * d2
    trace.finish(status, n + 1)
    return Point(space, (z1 + z2) / 2.0), trace
