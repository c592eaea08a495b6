"""Hot inner loops for bilinear (matrix and grid) games.

Two interchangeable backends implement the same iteration: a numba-jitted
kernel with explicit index loops, and a vectorized pure-numpy twin. The
environment flag FPIF_NUMBA=0 forces the numpy path; otherwise numba is
used whenever it imports. The jitted kernel keeps fixed ascending
summation order, so runs are reproducible bit for bit.

State: offsets (z1, z2) from the uniform strategies e_i = 1/m_i. Each
iteration projects onto the zero-mean subspace, takes a gradient step,
projects onto the shifted nonnegative cone, reflects, and repeats the
gradient step. Stopping is checked in-loop: relative fixed-point residual
every iteration, duality gap plus feasibility every ``check_stride``
iterations.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


STOP_EXHAUSTED = 0
STOP_RESIDUAL = 1
STOP_GAP = 2
STOP_DIVERGED = 3


def numba_enabled():
    flag = os.environ.get("FPIF_NUMBA", "1").strip().lower()
    return HAVE_NUMBA and flag not in ("0", "false", "no", "off")


def centered_side_means(F, w1, w2, inv_m1, inv_m2):
    """Row/column weighted means of the payoff kernel, centered to zero
    weighted mean. Plain ascending loops: for an antisymmetric kernel the
    two outputs are exact negations of each other."""
    n1, n2 = F.shape
    g1 = np.empty(n1)
    for i in range(n1):
        acc = 0.0
        for j in range(n2):
            acc += w2[j] * F[i, j]
        g1[i] = acc * inv_m2
    g2 = np.empty(n2)
    for j in range(n2):
        acc = 0.0
        for i in range(n1):
            acc += w1[i] * F[i, j]
        g2[j] = acc * inv_m1
    c1 = 0.0
    for i in range(n1):
        c1 += w1[i] * g1[i]
    c2 = 0.0
    for j in range(n2):
        c2 += w2[j] * g2[j]
    return g1 - c1 * inv_m1, g2 - c2 * inv_m2


def extract_strategies(w1, w2, z1, z2, inv_m1, inv_m2):
    """Strategies from a combined state: kernel-projected offsets plus the
    uniform anchor. The projection removes the dual (mean) component, so
    the affine constraint holds exactly."""
    x1 = (z1 - inv_m1 * float(w1 @ z1)) + inv_m1
    x2 = (z2 - inv_m2 * float(w2 @ z2)) + inv_m2
    return x1, x2


def gap_and_feasibility(F, w1, w2, z1, z2, inv_m1, inv_m2):
    """Duality gap and feasibility defects of the extracted strategies."""
    x1, x2 = extract_strategies(w1, w2, z1, z2, inv_m1, inv_m2)
    pi1 = w1 * x1
    pi2 = w2 * x2
    gap = float(np.max(pi1 @ F) - np.min(F @ pi2))
    feas = max(
        abs(float(np.sum(pi1)) - 1.0),
        abs(float(np.sum(pi2)) - 1.0),
        max(0.0, -float(np.min(x1))),
        max(0.0, -float(np.min(x2))),
    )
    return gap, feas


def bilinear_saddle_numpy(F, w1, w2, inv_m1, inv_m2, G1, G2, gamma, lams,
                          z1, z2, res_out, residual_tol, gap_tol, feas_tol,
                          check_stride):
    """Vectorized backend; mutates z1, z2, res_out in place.

    Returns (iterations_done, stop_reason).
    """
    max_it = lams.shape[0]
    n = 0
    reason = STOP_EXHAUSTED
    while n < max_it:
        lam = lams[n]
        u1 = z1 - inv_m1 * (w1 @ z1)
        u2 = z2 - inv_m2 * (w2 @ z2)
        a1 = F @ (w2 * u2)
        a2 = (w1 * u1) @ F
        g1 = G1 + (a1 - inv_m1 * (w1 @ a1))
        g2 = -G2 - (a2 - inv_m2 * (w2 @ a2))
        r1 = z1 - gamma * g1
        r2 = z2 - gamma * g2
        p1 = np.maximum(r1 + inv_m1, 0.0) - inv_m1
        p2 = np.maximum(r2 + inv_m2, 0.0) - inv_m2
        v1 = p1 - inv_m1 * (w1 @ p1)
        v2 = p2 - inv_m2 * (w2 @ p2)
        s1 = 2.0 * v1 - p1 + inv_m1 * (w1 @ r1)
        s2 = 2.0 * v2 - p2 + inv_m2 * (w2 @ r2)
        b1 = F @ (w2 * v2)
        b2 = (w1 * v1) @ F
        h1 = G1 + (b1 - inv_m1 * (w1 @ b1))
        h2 = -G2 - (b2 - inv_m2 * (w2 @ b2))
        d1 = (s1 - gamma * h1) - r1
        d2 = (s2 - gamma * h2) - r2
        res = np.sqrt(np.sum(w1 * d1 * d1) + np.sum(w2 * d2 * d2))
        res_out[n] = res
        if not np.isfinite(res):
            return n + 1, STOP_DIVERGED
        z1 += lam * d1
        z2 += lam * d2
        n += 1
        znorm = np.sqrt(np.sum(w1 * z1 * z1) + np.sum(w2 * z2 * z2))
        if res <= residual_tol * max(1.0, znorm):
            return n, STOP_RESIDUAL
        if n % check_stride == 0:
            gap, feas = gap_and_feasibility(F, w1, w2, z1, z2, inv_m1, inv_m2)
            if gap <= gap_tol and feas <= feas_tol:
                return n, STOP_GAP
    return n, reason


@njit(cache=True)
def _bilinear_saddle_jit(F, w1, w2, inv_m1, inv_m2, G1, G2, gamma, lams,
                         z1, z2, res_out, residual_tol, gap_tol, feas_tol,
                         check_stride):
    n1 = F.shape[0]
    n2 = F.shape[1]
    u1 = np.empty(n1)
    u2 = np.empty(n2)
    a1 = np.empty(n1)
    a2 = np.empty(n2)
    r1 = np.empty(n1)
    r2 = np.empty(n2)
    p1 = np.empty(n1)
    p2 = np.empty(n2)
    s1 = np.empty(n1)
    s2 = np.empty(n2)
    d1 = np.empty(n1)
    d2 = np.empty(n2)
    max_it = lams.shape[0]
    n = 0
    while n < max_it:
        lam = lams[n]

        mu1 = 0.0
        for i in range(n1):
            mu1 += w1[i] * z1[i]
        mu1 *= inv_m1
        for i in range(n1):
            u1[i] = z1[i] - mu1
        mu2 = 0.0
        for j in range(n2):
            mu2 += w2[j] * z2[j]
        mu2 *= inv_m2
        for j in range(n2):
            u2[j] = z2[j] - mu2

        for i in range(n1):
            acc = 0.0
            for j in range(n2):
                acc += F[i, j] * (w2[j] * u2[j])
            a1[i] = acc
        for j in range(n2):
            acc = 0.0
            for i in range(n1):
                acc += F[i, j] * (w1[i] * u1[i])
            a2[j] = acc

        ca1 = 0.0
        for i in range(n1):
            ca1 += w1[i] * a1[i]
        ca1 *= inv_m1
        ca2 = 0.0
        for j in range(n2):
            ca2 += w2[j] * a2[j]
        ca2 *= inv_m2

        # r = z - gamma * g; association G + (a - c) mirrors the dual line
        mr1 = 0.0
        for i in range(n1):
            r1[i] = z1[i] - gamma * (G1[i] + (a1[i] - ca1))
            mr1 += w1[i] * r1[i]
        mr1 *= inv_m1
        mr2 = 0.0
        for j in range(n2):
            r2[j] = z2[j] - gamma * (-G2[j] - (a2[j] - ca2))
            mr2 += w2[j] * r2[j]
        mr2 *= inv_m2

        # shifted cone projection, then the reflected step
        mp1 = 0.0
        for i in range(n1):
            val = r1[i] + inv_m1
            if val < 0.0:
                val = 0.0
            p1[i] = val - inv_m1
            mp1 += w1[i] * p1[i]
        mp1 *= inv_m1
        mp2 = 0.0
        for j in range(n2):
            val = r2[j] + inv_m2
            if val < 0.0:
                val = 0.0
            p2[j] = val - inv_m2
            mp2 += w2[j] * p2[j]
        mp2 *= inv_m2

        for i in range(n1):
            s1[i] = 2.0 * (p1[i] - mp1) - p1[i] + mr1
        for j in range(n2):
            s2[j] = 2.0 * (p2[j] - mp2) - p2[j] + mr2

        for i in range(n1):
            acc = 0.0
            for j in range(n2):
                acc += F[i, j] * (w2[j] * (p2[j] - mp2))
            a1[i] = acc
        for j in range(n2):
            acc = 0.0
            for i in range(n1):
                acc += F[i, j] * (w1[i] * (p1[i] - mp1))
            a2[j] = acc

        cb1 = 0.0
        for i in range(n1):
            cb1 += w1[i] * a1[i]
        cb1 *= inv_m1
        cb2 = 0.0
        for j in range(n2):
            cb2 += w2[j] * a2[j]
        cb2 *= inv_m2

        res_sq = 0.0
        for i in range(n1):
            t = s1[i] - gamma * (G1[i] + (a1[i] - cb1))
            d1[i] = t - r1[i]
            res_sq += w1[i] * d1[i] * d1[i]
        for j in range(n2):
            t = s2[j] - gamma * (-G2[j] - (a2[j] - cb2))
            d2[j] = t - r2[j]
            res_sq += w2[j] * d2[j] * d2[j]
        res = np.sqrt(res_sq)
        res_out[n] = res
        if not np.isfinite(res):
            return n + 1, STOP_DIVERGED

        zn_sq = 0.0
        for i in range(n1):
            z1[i] += lam * d1[i]
            zn_sq += w1[i] * z1[i] * z1[i]
        for j in range(n2):
            z2[j] += lam * d2[j]
            zn_sq += w2[j] * z2[j] * z2[j]
        n += 1

        ref = np.sqrt(zn_sq)
        if ref < 1.0:
            ref = 1.0
        if res <= residual_tol * ref:
            return n, STOP_RESIDUAL

        if n % check_stride == 0:
            # strategies = kernel-projected offsets + anchor
            zm1 = 0.0
            for i in range(n1):
                zm1 += w1[i] * z1[i]
            zm1 *= inv_m1
            zm2 = 0.0
            for j in range(n2):
                zm2 += w2[j] * z2[j]
            zm2 *= inv_m2
            best2 = -1e300
            for j in range(n2):
                acc = 0.0
                for i in range(n1):
                    acc += (w1[i] * ((z1[i] - zm1) + inv_m1)) * F[i, j]
                if acc > best2:
                    best2 = acc
            best1 = 1e300
            for i in range(n1):
                acc = 0.0
                for j in range(n2):
                    acc += F[i, j] * (w2[j] * ((z2[j] - zm2) + inv_m2))
                if acc < best1:
                    best1 = acc
            gap = best2 - best1
            sum1 = 0.0
            min1 = 1e300
            for i in range(n1):
                xv = (z1[i] - zm1) + inv_m1
                sum1 += w1[i] * xv
                if xv < min1:
                    min1 = xv
            sum2 = 0.0
            min2 = 1e300
            for j in range(n2):
                xv = (z2[j] - zm2) + inv_m2
                sum2 += w2[j] * xv
                if xv < min2:
                    min2 = xv
            feas = abs(sum1 - 1.0)
            if abs(sum2 - 1.0) > feas:
                feas = abs(sum2 - 1.0)
            if -min1 > feas:
                feas = -min1
            if -min2 > feas:
                feas = -min2
            if gap <= gap_tol and feas <= feas_tol:
                return n, STOP_GAP
    return n, STOP_EXHAUSTED


def bilinear_saddle_loop(F, w1, w2, inv_m1, inv_m2, G1, G2, gamma, lams,
                         z1, z2, res_out, residual_tol, gap_tol, feas_tol,
                         check_stride, backend=None):
    """Dispatch to the jitted kernel or the numpy twin."""
    use_jit = numba_enabled() if backend is None else (backend == "numba")
    fn = _bilinear_saddle_jit if use_jit else bilinear_saddle_numpy
    n_done, reason = fn(
        F, w1, w2, inv_m1, inv_m2, G1, G2, float(gamma), lams,
        z1, z2, res_out, float(residual_tol), float(gap_tol), float(feas_tol),
        int(check_stride),
    )
    return int(n_done), int(reason)


def active_backend(backend=None):
    if backend is not None:
        return backend
    return "numba" if numba_enabled() else "numpy"
