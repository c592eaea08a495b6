"""Relaxed forward-backward-forward iteration and shared solver plumbing.

Every downstream solver reuses the pieces here: validated step/relaxation
schedules, finite stopping rules, and per-iteration trace recording with
CSV export.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ScheduleError
from .hilbert import Point, as_coords

CONVERGED = "converged"
MAX_ITER = "max_iter"
DIVERGED = "diverged-guard"

# every iteration is recorded below this count, then geometric thinning
FULL_RECORD_LIMIT = 10_000
THIN_FACTOR = 1.05


def _as_sequence_rule(value, what):
    if np.isscalar(value):
        v = float(value)
        return None, v
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ScheduleError(f"{what} must be a scalar or a nonempty 1-d array")
    return arr, None


@dataclass
class StepSchedule:
    """Inner step sizes delta_n, relaxations lambda_n, and the margin epsilon.

    ``delta`` and ``lam`` are either constants or arrays indexed by the
    iteration (the last entry persists past the end of an array). For an
    operator constant eta the admissible ranges are delta_n in
    [epsilon, 1/eta - epsilon] and lambda_n in [epsilon, 1], with epsilon
    in ]0, max(1, 1/(2 eta))[. With eta = 0 the upper bound on delta_n is
    vacuous and any positive step is accepted.
    """

    delta: object = 1.0
    lam: object = 1.0
    epsilon: float = 1e-6

    def __post_init__(self):
        self._delta_arr, self._delta_const = _as_sequence_rule(self.delta, "delta")
        self._lam_arr, self._lam_const = _as_sequence_rule(self.lam, "lambda")
        if not self.epsilon > 0:
            raise ScheduleError(f"epsilon must be positive, got {self.epsilon}")

    def delta_at(self, n):
        if self._delta_const is not None:
            return self._delta_const
        return float(self._delta_arr[min(n, self._delta_arr.size - 1)])

    def lam_at(self, n):
        if self._lam_const is not None:
            return self._lam_const
        return float(self._lam_arr[min(n, self._lam_arr.size - 1)])

    @property
    def delta_is_unit(self):
        if self._delta_const is not None:
            return self._delta_const == 1.0
        return bool(np.all(self._delta_arr == 1.0))

    def validate(self, eta):
        """Check the joint epsilon/delta/lambda constraints for a given eta."""
        eps = self.epsilon
        eps_cap = max(1.0, 1.0 / (2.0 * eta)) if eta > 0 else np.inf
        if not eps < eps_cap:
            raise ScheduleError(
                f"epsilon={eps} must lie in ]0, max(1, 1/(2*eta))[ = ]0, {eps_cap}[ for eta={eta}"
            )
        deltas = self._delta_arr if self._delta_arr is not None else np.array([self._delta_const])
        lo, hi = eps, (1.0 / eta - eps) if eta > 0 else np.inf
        if lo > hi:
            raise ScheduleError(
                f"no admissible step: [epsilon, 1/eta - epsilon] = [{lo}, {hi}] is empty"
            )
        bad = deltas[(deltas < lo) | (deltas > hi)]
        if bad.size:
            raise ScheduleError(f"delta={bad[0]} outside [epsilon, 1/eta - epsilon] = [{lo}, {hi}]")
        lams = self._lam_arr if self._lam_arr is not None else np.array([self._lam_const])
        bad = lams[(lams < eps) | (lams > 1.0)]
        if bad.size:
            raise ScheduleError(f"lambda={bad[0]} outside [epsilon, 1] = [{eps}, 1]")


@dataclass
class StopRule:
    """Finite stopping: relative fixed-point residual, step size, iteration cap."""

    residual_tol: float = 1e-8
    iterate_tol: float = 1e-14
    max_iter: int = 100_000

    def __post_init__(self):
        if self.residual_tol <= 0 or self.iterate_tol <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def satisfied(self, residual, step_norm, state_norm):
        if not (np.isfinite(residual) and np.isfinite(state_norm)):
            return False
        ref = max(1.0, state_norm)
        return residual <= self.residual_tol * ref or step_norm <= self.iterate_tol * ref


class SolveTrace:
    """Per-iteration record of an operator-splitting run.

    Residuals are the raw fixed-point gaps ||t_n - r_n||; step parameters
    and step norms lambda_n ||t_n - r_n|| are stored alongside. Iterate
    snapshots are optional and share the recording stride. Residuals are
    not required to decrease; only their square-summability is guaranteed
    by the theory.
    """

    def __init__(self, space=None, record_iterates=True, extra_columns=()):
        self.space = space
        self.record_iterates = record_iterates
        self.iter_indices = []
        self.iterates = []
        self.residuals = []
        self.deltas = []
        self.lams = []
        self.step_norms = []
        self.extra = {name: [] for name in extra_columns}
        self.status = MAX_ITER
        self.n_iter = 0
        self._next_record = 0

    def should_record(self, n):
        return n >= self._next_record

    def record(self, n, z, residual, delta, lam, step_norm, extra=None):
        self.iter_indices.append(n)
        if self.record_iterates and self.space is not None:
            self.iterates.append(Point(self.space, np.array(z)))
        self.residuals.append(float(residual))
        self.deltas.append(float(delta))
        self.lams.append(float(lam))
        self.step_norms.append(float(step_norm))
        if extra:
            for key, value in extra.items():
                self.extra[key].append(float(value))
        if n + 1 < FULL_RECORD_LIMIT:
            self._next_record = n + 1
        else:
            self._next_record = max(n + 1, int(n * THIN_FACTOR))

    def finish(self, status, n_iter):
        self.status = status
        self.n_iter = n_iter

    @property
    def final_residual(self):
        return self.residuals[-1] if self.residuals else float("nan")

    def header(self):
        return ["iter", "residual", "delta", "lambda", "step_norm", *self.extra.keys()]

    def rows(self):
        extras = [self.extra[k] for k in self.extra]
        for i, n in enumerate(self.iter_indices):
            row = [n, self.residuals[i], self.deltas[i], self.lams[i], self.step_norms[i]]
            row.extend(col[i] for col in extras)
            yield row

    def to_csv(self, path):
        """Write the trace atomically (temp file + rename)."""
        path = os.fspath(path)
        directory = os.path.dirname(path) or "."
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(self.header())
                for row in self.rows():
                    writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def tseng_solve(A, B, z0, schedule=None, stop=None, record_iterates=True):
    """Find a zero of A + B by the relaxed forward-backward-forward method.

    Per iteration: r = z - delta B z; s = J_{delta A}(r); t = s - delta B s;
    z <- z + lambda (t - r). Requires delta_n < 1/chi(B) (no bound when
    B = 0, where the method degenerates to the proximal point iteration).

    Parameters
    ----------
    A : ResolventOp
    B : LipschitzMap
        Must share A's space; eta = B.chi drives the schedule validation.
    z0 : Point or array_like
    schedule : StepSchedule, optional
    stop : StopRule, optional

    Returns
    -------
    (Point, SolveTrace)
    """
    from .errors import DimensionMismatchError

    if A.space != B.space:
        raise DimensionMismatchError("A and B must share a space")
    space = A.space
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    schedule.validate(B.chi)

    z = as_coords(space, z0).copy()
    trace = SolveTrace(space, record_iterates=record_iterates)
    status, n = MAX_ITER, 0
    for n in range(stop.max_iter):
        delta = schedule.delta_at(n)
        lam = schedule.lam_at(n)
        r = z - delta * B(z)
        s = A.resolvent(delta, r)
        t = s - delta * B(s)
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
    return Point(space, z), trace


def fejer_check(trace, z_star, tol=1e-10):
    """True iff recorded distances to ``z_star`` are nonincreasing.

    Requires iterate snapshots in the trace.
    """
    if not trace.iterates:
        raise ValueError("trace has no iterate snapshots; rerun with record_iterates=True")
    space = trace.space
    target = as_coords(space, z_star)
    dists = [space.norm(p.coords - target) for p in trace.iterates]
    return all(b <= a + tol for a, b in zip(dists, dists[1:]))
