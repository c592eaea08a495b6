import numpy as np
import pytest

from fpif.errors import ConfigurationError, UnsupportedConfigurationError
from fpif.hilbert import Projector, Space, projector_from_basis
from fpif.operators import (
    abs_subdifferential,
    box_normal_cone,
    linear_monotone_map,
    monotone_linear,
    point_normal_cone,
    translation_residual,
    zero_map,
    zero_operator,
)
from fpif.splitting import (
    InclusionProblem,
    fpif_solve,
    reduce_to_dr_check,
    reduce_to_tseng_check,
    solution_residuals,
)
from fpif.tseng import CONVERGED, StepSchedule, StopRule, fejer_check
from oracles import random_monotone_matrix


def diag_affine_problem(gamma=0.5):
    sp = Space(2)
    return InclusionProblem(
        A=zero_operator(sp),
        B=translation_residual(sp, [2.0, 0.0]),
        V=projector_from_basis(sp, [[1.0, 1.0]]),
        gamma=gamma,
    )


class TestProblemValidation:
    def test_gamma_range_enforced(self):
        sp = Space(2)
        with pytest.raises(ConfigurationError, match=r"1/chi"):
            InclusionProblem(
                A=zero_operator(sp),
                B=translation_residual(sp, [0.0, 0.0]),
                V=Projector.identity(sp),
                gamma=2.0,  # chi = 1 so gamma must be < 1
            )

    def test_default_gamma(self):
        prob = diag_affine_problem(gamma=None)
        assert prob.gamma == pytest.approx(0.9)  # 0.9 / chi with chi = 1

    def test_spaces_must_match(self):
        with pytest.raises(ConfigurationError):
            InclusionProblem(
                A=zero_operator(Space(2)),
                B=zero_map(Space(3)),
                V=Projector.identity(Space(2)),
            )


class TestFpifSolve:
    def test_affine_diagonal_projection_oracle(self):
        # 0 in x - c + N_V(x) forces x = P_V c; oracle = the projection
        prob = diag_affine_problem()
        oracle = prob.V.apply(np.array([2.0, 0.0]))
        pd, trace = fpif_solve(prob)
        assert trace.status == CONVERGED
        np.testing.assert_allclose(pd.x.coords, oracle, atol=1e-7)

    def test_abs_value_proximal_sequence(self):
        # with V = H and B = 0 the run is the proximal iteration on |.|,
        # which walks 5, 4, 3, 2, 1, 0 exactly
        sp = Space(1)
        prob = InclusionProblem(
            A=abs_subdifferential(sp), B=zero_map(sp), V=Projector.identity(sp), gamma=1.0
        )
        pd, trace = fpif_solve(prob, x0=[5.0], schedule=StepSchedule(lam=1.0))
        assert pd.x.coords[0] == 0.0
        walked = [p.coords[0] for p in trace.iterates[:6]]
        assert walked == [5.0, 4.0, 3.0, 2.0, 1.0, 0.0]

    def test_zero_subspace_forces_origin(self):
        sp = Space(2)
        prob = InclusionProblem(
            A=abs_subdifferential(sp),
            B=translation_residual(sp, [3.0, -1.0]),
            V=Projector.zero(sp),
            gamma=0.5,
        )
        pd, trace = fpif_solve(prob, y0=[1.0, 1.0])
        assert trace.status == CONVERGED
        assert np.linalg.norm(pd.x.coords) <= 1e-9
        # the dual certifies membership: y in Vperp cap (Ax + P_V Bx)
        res = solution_residuals(prob, pd.x.coords, pd.y.coords)
        assert res["dual_membership"] <= 1e-6

    def test_dual_membership_on_synthetic_problem(self):
        prob = diag_affine_problem()
        pd, _ = fpif_solve(prob, stop=StopRule(residual_tol=1e-12))
        res = solution_residuals(prob, pd.x.coords, pd.y.coords)
        assert res["dual_membership"] <= 1e-6
        assert res["subspace_primal"] <= 1e-9
        assert res["subspace_dual"] <= 1e-9

    def test_off_subspace_start_projected_with_warning(self):
        prob = diag_affine_problem()
        with pytest.warns(UserWarning, match="projecting"):
            fpif_solve(prob, x0=[1.0, 0.0], stop=StopRule(max_iter=5, residual_tol=1e-300))

    def test_subspace_confinement_along_run(self):
        prob = diag_affine_problem()
        _, trace = fpif_solve(prob, stop=StopRule(residual_tol=1e-11))
        P = prob.V.matrix
        for pt in trace.iterates:
            z = pt.coords
            x = P @ z
            y = (z - x) / prob.gamma
            assert np.linalg.norm(x - P @ x) <= 1e-9
            assert np.linalg.norm(P @ y) <= 1e-9

    def test_fixed_point_characterization(self):
        # one further iteration from the solved state moves it by at most
        # ten times the stopping tolerance
        prob = diag_affine_problem()
        tol = 1e-10
        pd, trace = fpif_solve(prob, stop=StopRule(residual_tol=tol))
        z_bar = pd.x.coords + prob.gamma * pd.y.coords
        _, trace2 = fpif_solve(
            prob, x0=pd.x.coords, y0=pd.y.coords,
            stop=StopRule(max_iter=1, residual_tol=1e-300),
        )
        z_scale = max(1.0, np.linalg.norm(z_bar))
        assert trace2.step_norms[0] <= 10 * tol * z_scale

    def test_gamma_invariance_of_solution(self):
        sols = []
        for gamma in (0.2, 0.8):
            pd, _ = fpif_solve(
                diag_affine_problem(gamma), stop=StopRule(residual_tol=1e-12)
            )
            sols.append(pd.x.coords)
        assert np.linalg.norm(sols[0] - sols[1]) <= 1e-5

    def test_fejer_monotone_toward_zero(self):
        prob = diag_affine_problem()
        # A = 0 collapses the dual, so the state converges to x* itself
        _, trace = fpif_solve(prob)
        assert fejer_check(trace, np.array([1.0, 1.0]))

    def test_nonunit_delta_requires_linear_operator(self):
        sp = Space(1)
        prob = InclusionProblem(
            A=abs_subdifferential(sp), B=zero_map(sp), V=Projector.identity(sp), gamma=1.0
        )
        with pytest.raises(UnsupportedConfigurationError):
            fpif_solve(prob, schedule=StepSchedule(delta=0.7, epsilon=1e-3))

    def test_nonunit_delta_linear_path_converges(self):
        rng = np.random.default_rng(3)
        sp = Space(3)
        M = random_monotone_matrix(rng, 3)
        c = rng.standard_normal(3)
        prob = InclusionProblem(
            A=monotone_linear(sp, M, shift=c),
            B=zero_map(sp),
            V=projector_from_basis(sp, [rng.standard_normal(3)]),
            gamma=1.0,
        )
        pd_a, _ = fpif_solve(prob, stop=StopRule(residual_tol=1e-12))
        pd_b, trace = fpif_solve(
            prob, schedule=StepSchedule(delta=0.7, epsilon=1e-3),
            stop=StopRule(residual_tol=1e-12),
        )
        assert trace.status == CONVERGED
        np.testing.assert_allclose(pd_b.x.coords, pd_a.x.coords, atol=1e-8)


class TestReductions:
    def test_tseng_reduction_on_rotation(self):
        sp = Space(2)
        prob = InclusionProblem(
            A=monotone_linear(sp, np.eye(2)),
            B=linear_monotone_map(sp, np.array([[0.0, -1.0], [1.0, 0.0]])),
            V=Projector.identity(sp),
            gamma=0.5,
        )
        assert reduce_to_tseng_check(prob, [1.0, 0.7]) <= 1e-12

    def test_tseng_reduction_on_zero_problem(self):
        sp = Space(2)
        prob = InclusionProblem(
            A=zero_operator(sp), B=zero_map(sp), V=Projector.identity(sp), gamma=1.0
        )
        assert reduce_to_tseng_check(prob, [0.4, -0.2]) == 0.0

    def test_tseng_reduction_box_affine_3d(self):
        sp = Space(3)
        prob = InclusionProblem(
            A=box_normal_cone(sp, -1.0, 1.0),
            B=translation_residual(sp, [2.0, 0.0, -2.0]),
            V=Projector.identity(sp),
            gamma=0.7,
        )
        assert reduce_to_tseng_check(prob, [0.2, -0.3, 0.1]) <= 1e-12

    def test_dr_reduction_box_diagonal(self):
        sp = Space(2)
        prob = InclusionProblem(
            A=box_normal_cone(sp, 1.0, 3.0),
            B=zero_map(sp),
            V=projector_from_basis(sp, [[1.0, 1.0]]),
            gamma=1.0,
        )
        assert reduce_to_dr_check(prob, [0.0, -1.0], lam=0.9) <= 1e-12
        z0 = np.array([0.0, -1.0])
        x0 = prob.V.apply(z0)
        pd, trace = fpif_solve(
            prob, x0=x0, y0=z0 - x0, schedule=StepSchedule(lam=0.9)
        )
        assert trace.status == CONVERGED
        x = pd.x.coords
        assert abs(x[0] - x[1]) <= 1e-7
        assert 1.0 - 1e-7 <= x[0] <= 3.0 + 1e-7

    def test_dr_reduction_zero_operator_is_stationary(self):
        sp = Space(2)
        # exactly representable projector so stationarity is bitwise
        diag = Projector(sp, [[0.5, 0.5], [0.5, 0.5]])
        prob = InclusionProblem(
            A=zero_operator(sp), B=zero_map(sp), V=diag, gamma=1.0,
        )
        assert reduce_to_dr_check(prob, [0.3, 0.1]) <= 1e-12
        # an in-subspace start never moves: s_n = z_n exactly
        _, trace = fpif_solve(
            prob, x0=[0.25, 0.25],
            stop=StopRule(max_iter=10, residual_tol=1e-300, iterate_tol=1e-300),
        )
        assert all(r == 0.0 for r in trace.residuals)
        assert all(np.array_equal(p.coords, [0.25, 0.25]) for p in trace.iterates)

    def test_dr_reduction_point_on_axis(self):
        sp = Space(2)
        prob = InclusionProblem(
            A=point_normal_cone(sp, [2.0, 0.0]),
            B=zero_map(sp),
            V=projector_from_basis(sp, [[1.0, 0.0]]),
            gamma=1.0,
        )
        assert reduce_to_dr_check(prob, [-1.0, 0.5]) <= 1e-12
        pd, _ = fpif_solve(prob, x0=[-1.0, 0.0])
        np.testing.assert_allclose(pd.x.coords, [2.0, 0.0], atol=1e-7)

    def test_reduction_preconditions(self):
        prob = diag_affine_problem()
        with pytest.raises(ConfigurationError):
            reduce_to_tseng_check(prob, [0.0, 0.0])  # V is not the whole space
        with pytest.raises(ConfigurationError):
            reduce_to_dr_check(prob, [0.0, 0.0])  # B is not zero
