"""Shipped example problems with known solutions.

Each entry bundles a ready-to-run solver closure with whatever is known
analytically about it: the zero of the underlying fixed-point map (for
distance-monotonicity checks) and a primal solution or membership test.
The CLI demo configs under configs/ mirror these instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import Projector, Space, projector_from_basis
from .operators import (
    abs_subdifferential,
    box_normal_cone,
    linear_monotone_map,
    monotone_linear,
    point_normal_cone,
    translation_residual,
    zero_map,
)
from .splitting import InclusionProblem, fpif_solve
from .sums import SumProblem, sum_solve
from .tseng import StepSchedule, StopRule, tseng_solve


@dataclass
class ExampleProblem:
    """A named solve with optional analytic zero and solution check."""

    name: str
    run: object  # run(stop=None, record_iterates=True) -> (solution, trace)
    zero: np.ndarray = None  # analytic zero of the iteration map, if known
    solution_gap: object = None  # solution -> distance to the true solution set


def _tseng_box_id():
    space = Space(1)
    A = box_normal_cone(space, -1.0, 1.0)
    B = linear_monotone_map(space, np.eye(1))

    def run(stop=None, record_iterates=True):
        return tseng_solve(
            A, B, [0.5], schedule=StepSchedule(delta=0.5, epsilon=1e-3),
            stop=stop, record_iterates=record_iterates,
        )

    return ExampleProblem(
        "tseng-box-identity", run, zero=np.array([0.0]),
        solution_gap=lambda p: abs(float(p.coords[0])),
    )


def _tseng_rotation():
    space = Space(2)
    A = monotone_linear(space, np.eye(2))
    B = linear_monotone_map(space, np.array([[0.0, -1.0], [1.0, 0.0]]))

    def run(stop=None, record_iterates=True):
        return tseng_solve(
            A, B, [1.0, 0.7], schedule=StepSchedule(delta=0.5, epsilon=1e-3),
            stop=stop, record_iterates=record_iterates,
        )

    return ExampleProblem(
        "tseng-rotation", run, zero=np.zeros(2),
        solution_gap=lambda p: float(np.linalg.norm(p.coords)),
    )


def _tseng_box_affine():
    space = Space(3)
    c = np.array([2.0, 0.0, -2.0])
    A = box_normal_cone(space, -1.0, 1.0)
    B = translation_residual(space, c)
    x_star = np.clip(c, -1.0, 1.0)

    def run(stop=None, record_iterates=True):
        return tseng_solve(
            A, B, [0.2, -0.3, 0.1], schedule=StepSchedule(delta=0.7, epsilon=1e-3),
            stop=stop, record_iterates=record_iterates,
        )

    return ExampleProblem(
        "tseng-box-affine", run, zero=x_star,
        solution_gap=lambda p: float(np.linalg.norm(p.coords - x_star)),
    )


def _fpif_affine_diag():
    space = Space(2)
    prob = InclusionProblem(
        A=monotone_linear(space, np.zeros((2, 2))),
        B=translation_residual(space, [2.0, 0.0]),
        V=projector_from_basis(space, [[1.0, 1.0]]),
        gamma=0.5,
    )
    x_star = np.array([1.0, 1.0])
    # A = 0 makes the dual part vanish: the combined state converges to x*
    z_star = x_star

    def run(stop=None, record_iterates=True):
        return fpif_solve(prob, stop=stop, record_iterates=record_iterates)

    return ExampleProblem(
        "fpif-affine-diagonal", run, zero=z_star,
        solution_gap=lambda pd: float(np.linalg.norm(pd.x.coords - x_star)),
    )


def _fpif_abs():
    space = Space(1)
    prob = InclusionProblem(
        A=abs_subdifferential(space),
        B=zero_map(space),
        V=Projector.identity(space),
        gamma=1.0,
    )

    def run(stop=None, record_iterates=True):
        return fpif_solve(prob, x0=[5.0], stop=stop, record_iterates=record_iterates)

    return ExampleProblem(
        "fpif-abs-proximal", run, zero=np.array([0.0]),
        solution_gap=lambda pd: abs(float(pd.x.coords[0])),
    )


def _dr_box_diag():
    space = Space(2)
    prob = InclusionProblem(
        A=box_normal_cone(space, 1.0, 3.0),
        B=zero_map(space),
        V=projector_from_basis(space, [[1.0, 1.0]]),
        gamma=1.0,
    )

    z0 = np.array([0.0, -1.0])
    x0 = prob.V.apply(z0)
    y0 = (z0 - x0) / prob.gamma

    def run(stop=None, record_iterates=True):
        return fpif_solve(
            prob, x0=x0, y0=y0, schedule=StepSchedule(lam=0.9),
            stop=stop, record_iterates=record_iterates,
        )

    def gap(pd):
        x = pd.x.coords
        t = 0.5 * (x[0] + x[1])
        t = min(max(t, 1.0), 3.0)
        return float(np.linalg.norm(x - np.array([t, t])))

    return ExampleProblem("fpif-dr-box-diagonal", run, zero=None, solution_gap=gap)


def _dr_point_axis():
    space = Space(2)
    prob = InclusionProblem(
        A=point_normal_cone(space, [2.0, 0.0]),
        B=zero_map(space),
        V=projector_from_basis(space, [[1.0, 0.0]]),
        gamma=1.0,
    )
    x_star = np.array([2.0, 0.0])

    def run(stop=None, record_iterates=True):
        return fpif_solve(prob, x0=[-1.0, 0.0], stop=stop, record_iterates=record_iterates)

    return ExampleProblem(
        "fpif-dr-point-axis", run, zero=x_star,
        solution_gap=lambda pd: float(np.linalg.norm(pd.x.coords - x_star)),
    )


def _sum_box_affine():
    space = Space(1)
    prob = SumProblem(
        ops=[box_normal_cone(space, 0.0, np.inf), box_normal_cone(space, -np.inf, 2.0)],
        B=translation_residual(space, [1.0]),
        gamma=0.9,
    )

    def run(stop=None, record_iterates=True):
        return sum_solve(prob, stop=stop, record_iterates=record_iterates)

    return ExampleProblem(
        "sum-box-affine", run, zero=None,
        solution_gap=lambda p: abs(float(p.coords[0]) - 1.0),
    )


def registry():
    """All shipped example problems, in a stable order."""
    return [
        _tseng_box_id(),
        _tseng_rotation(),
        _tseng_box_affine(),
        _fpif_affine_diag(),
        _fpif_abs(),
        _dr_box_diag(),
        _dr_point_axis(),
        _sum_box_affine(),
    ]


def tight_zero(example, tol=1e-12, max_iter=300_000):
    """The analytic zero when known, else a tightly solved state verified
    to be a near-fixed point of the iteration map."""
    if example.zero is not None:
        return np.asarray(example.zero, dtype=float)
    _, trace = example.run(stop=StopRule(residual_tol=tol, max_iter=max_iter))
    if not trace.iterates:
        raise RuntimeError(f"{example.name}: no iterates recorded")
    state = trace.iterates[-1].coords
    rel = trace.final_residual / max(1.0, trace.space.norm(state))
    if rel > 10 * tol:
        raise RuntimeError(f"{example.name}: could not certify a zero (residual {rel:.2e})")
    return np.array(state)
