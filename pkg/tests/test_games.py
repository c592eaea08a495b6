import numpy as np
import pytest

from fpif import _kernels
from fpif.errors import ConfigurationError
from fpif.games import (
    GridGame,
    MatrixGame,
    Orthant,
    check_gradient_oracle,
    duality_gap,
    grid_duality_gap,
    grid_game_solve,
    matrix_game_saddle_problem,
    matrix_game_solve,
    quadrature_grid,
    saddle_feasibility,
    saddle_solve,
)
from fpif.tseng import CONVERGED, StopRule
from oracles import exact_matrix_game, l1_distance_to_optimal, lp_matrix_game

RPS = MatrixGame([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
PENNIES = MatrixGame([[1.0, -1.0], [-1.0, 1.0]])


class TestSaddleSolve:
    def test_rps_through_the_saddle_wrapper(self):
        prob = matrix_game_saddle_problem(RPS)
        x1, x2, trace = saddle_solve(prob)
        assert trace.status == CONVERGED
        np.testing.assert_allclose(x1.coords, np.full(3, 1 / 3), atol=1e-6)
        np.testing.assert_allclose(x2.coords, np.full(3, 1 / 3), atol=1e-6)

    def test_zero_payoff_is_pure_feasibility(self):
        game = MatrixGame(np.zeros((3, 2)))
        prob = matrix_game_saddle_problem(game)
        x1, x2, trace = saddle_solve(prob, z10=[0.5, -0.2, 0.1], z20=[-0.4, 0.3])
        feas = saddle_feasibility(prob, x1.coords, x2.coords)
        assert max(feas.values()) <= 1e-8

    def test_matching_pennies_equilibrium(self):
        prob = matrix_game_saddle_problem(PENNIES)
        x1, x2, trace = saddle_solve(prob, z10=[0.2, -0.1], z20=[-0.3, 0.05])
        ex, ey, ev = exact_matrix_game(PENNIES.payoff)
        np.testing.assert_allclose(x1.coords, [float(t) for t in ex], atol=1e-6)
        np.testing.assert_allclose(x2.coords, [float(t) for t in ey], atol=1e-6)
        value = float(x1.coords @ PENNIES.payoff @ x2.coords)
        assert abs(value - float(ev)) <= 1e-6

    def test_gamma_range_enforced(self):
        prob = matrix_game_saddle_problem(PENNIES)
        with pytest.raises(ConfigurationError, match="1/chi"):
            saddle_solve(prob, gamma=2.0 / prob.chi)

    def test_gradient_oracle_matches_finite_differences(self):
        prob = matrix_game_saddle_problem(RPS)
        assert check_gradient_oracle(prob, n_points=100, seed=0) <= 1e-4

    def test_kernel_confinement_along_iterates(self):
        # every projected iterate u = z - Kz lies in ker(L): L u = 0
        prob = matrix_game_saddle_problem(MatrixGame([[1.0, 0.3], [-0.5, 0.9]]))
        _, _, trace = saddle_solve(
            prob, z10=[0.4, -0.1], z20=[0.2, 0.3],
            stop=StopRule(max_iter=200, residual_tol=1e-300),
        )
        n1 = 2
        for pt in trace.iterates:
            z1, z2 = pt.coords[:n1], pt.coords[n1:]
            u1 = z1 - prob.K1 @ z1
            u2 = z2 - prob.K2 @ z2
            assert abs(prob.L1.apply(u1)[0]) <= 1e-9
            assert abs(prob.L2.apply(u2)[0]) <= 1e-9

    def test_no_strategy_set_projection_is_invoked(self):
        # the loop may only project onto the cones C_i; instrument the cone
        # to count calls and forbid any simplex projection helper
        calls = {"n": 0}

        class SpyOrthant(Orthant):
            def project(self, x):
                calls["n"] += 1
                return np.maximum(x, 0.0)

        prob = matrix_game_saddle_problem(PENNIES)
        prob.cone1 = SpyOrthant()
        prob.cone2 = SpyOrthant()
        x1, x2, trace = saddle_solve(prob, z10=[0.3, -0.3], z20=[0.2, -0.2])
        assert calls["n"] == 2 * trace.n_iter
        # limits are feasible although only cone/kernel projections ran
        feas = saddle_feasibility(prob, x1.coords, x2.coords)
        assert max(feas.values()) <= 1e-7


class TestMatrixGameSolve:
    def test_rps_uniform(self):
        x1, x2, value, trace = matrix_game_solve(RPS)
        assert trace.status == CONVERGED
        assert np.max(np.abs(x1.coords - 1 / 3)) <= 1e-6
        assert np.max(np.abs(x2.coords - 1 / 3)) <= 1e-6
        assert abs(value) <= 1e-9

    def test_matching_pennies(self):
        x1, x2, value, _ = matrix_game_solve(PENNIES)
        np.testing.assert_allclose(x1.coords, [0.5, 0.5], atol=1e-6)
        np.testing.assert_allclose(x2.coords, [0.5, 0.5], atol=1e-6)
        assert abs(value) <= 1e-8

    def test_diagonal_game_indifference(self):
        # indifference oracle: 2p = 1 - p gives p = 1/3; value 2/3
        game = MatrixGame([[2.0, 0.0], [0.0, 1.0]])
        x1, x2, value, _ = matrix_game_solve(game, gap_tol=1e-8)
        np.testing.assert_allclose(x1.coords, [1 / 3, 2 / 3], atol=1e-5)
        np.testing.assert_allclose(x2.coords, [1 / 3, 2 / 3], atol=1e-5)
        assert value == pytest.approx(2 / 3, abs=1e-6)
        assert duality_gap(game, x1.coords, x2.coords) <= 1e-5

    def test_random_games_match_exact_oracle_value(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            F = rng.uniform(-1.0, 1.0, (3, 4))
            game = MatrixGame(F)
            x1, x2, value, trace = matrix_game_solve(game)
            assert trace.status == CONVERGED
            _, _, v_exact = exact_matrix_game(F)
            assert abs(value - float(v_exact)) <= 1e-5
            assert duality_gap(game, x1.coords, x2.coords) <= 1e-5

    def test_feasibility_of_outputs(self):
        rng = np.random.default_rng(2)
        F = rng.uniform(-1.0, 1.0, (4, 3))
        x1, x2, _, _ = matrix_game_solve(MatrixGame(F))
        for x in (x1.coords, x2.coords):
            assert abs(float(np.sum(x)) - 1.0) <= 1e-8
            assert float(np.min(x)) >= -1e-8

    def test_antisymmetric_game_is_fair_and_mirrored(self):
        rng = np.random.default_rng(5)
        Q = rng.uniform(-1.0, 1.0, (5, 5))
        F = Q - Q.T
        game = MatrixGame(F)
        x1, x2, value, trace = matrix_game_solve(game, gap_tol=1e-8)
        assert abs(value) <= 1e-6
        if trace.backend == "numba":
            # the jitted kernel keeps the two players' update arithmetic
            # exactly mirrored from the symmetric start
            assert np.array_equal(x1.coords, x2.coords)
        else:
            np.testing.assert_allclose(x1.coords, x2.coords, atol=1e-12)


class TestDualityGap:
    def test_uniform_rps_has_zero_gap(self):
        x = np.full(3, 1 / 3)
        assert abs(duality_gap(RPS, x, x)) <= 1e-12

    def test_pure_pennies_profile(self):
        gap = duality_gap(PENNIES, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert gap == pytest.approx(2.0)

    def test_gap_is_nonnegative_on_simplex_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            F = rng.uniform(-1, 1, (3, 3))
            x = rng.dirichlet(np.ones(3))
            y = rng.dirichlet(np.ones(3))
            assert duality_gap(MatrixGame(F), x, y) >= -1e-12

    def test_off_simplex_input_projected_with_warning(self):
        with pytest.warns(UserWarning, match="projecting"):
            gap = duality_gap(PENNIES, np.array([2.0, 1.0]), np.array([0.5, 0.5]))
        assert gap == pytest.approx(duality_gap(PENNIES, np.array([1.0, 0.0]),
                                                np.array([0.5, 0.5])))


class TestQuadrature:
    def test_trapezoid_weights(self):
        xs, w = quadrature_grid(0.0, 1.0, 5, "trapezoid")
        np.testing.assert_allclose(xs, [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125])
        assert np.sum(w) == pytest.approx(1.0)

    def test_midpoint_weights(self):
        xs, w = quadrature_grid(-1.0, 1.0, 4, "midpoint")
        np.testing.assert_allclose(xs, [-0.75, -0.25, 0.25, 0.75])
        assert np.sum(w) == pytest.approx(2.0)

    def test_degenerate_grids_rejected(self):
        with pytest.raises(ValueError):
            quadrature_grid(0.0, 1.0, 1)
        with pytest.raises(ValueError):
            quadrature_grid(1.0, 1.0, 5)


class TestGridGames:
    def test_zero_kernel_keeps_uniform_densities(self):
        game = GridGame.from_function(lambda x, y: 0.0, (0, 1), (0, 1), 11, 11)
        rho1, rho2, trace = grid_game_solve(game)
        assert trace.n_iter == 1
        np.testing.assert_allclose(rho1.coords, 1.0, atol=1e-12)
        np.testing.assert_allclose(rho2.coords, 1.0, atol=1e-12)

    def test_product_kernel_on_symmetric_grids(self):
        # payoff x*y: the uniform densities have zero mean on [-1, 1] and
        # are already an equilibrium; compare to the LP-certified set
        game = GridGame.from_function(lambda x, y: x * y, (-1, 1), (-1, 1), 21, 21)
        rho1, rho2, trace = grid_game_solve(game)
        assert trace.status == CONVERGED
        F = game.kernel
        _, _, v = lp_matrix_game(F)
        pi1 = game.w1 * rho1.coords
        pi2 = game.w2 * rho2.coords
        assert l1_distance_to_optimal(F, pi1, 1, v) <= 1e-4
        assert l1_distance_to_optimal(F, pi2, 2, v) <= 1e-4

    def test_squared_distance_kernel(self):
        # minimizer hides at 1/2, maximizer splits mass between the ends;
        # the discrete equilibria form a short segment (the end masses may
        # tilt by half a grid spacing), so compare against the LP-certified
        # optimal set rather than one LP vertex
        game = GridGame.from_function(lambda x, y: (x - y) ** 2, (0, 1), (0, 1), 41, 41)
        rho1, rho2, trace = grid_game_solve(game)
        assert trace.status == CONVERGED
        F = game.kernel
        _, _, v = lp_matrix_game(F)
        pi1 = game.w1 * rho1.coords
        pi2 = game.w2 * rho2.coords
        assert abs(float(pi1 @ F @ pi2) - v) <= 1e-4
        assert l1_distance_to_optimal(F, pi1, 1, v) <= 1e-3
        assert l1_distance_to_optimal(F, pi2, 2, v) <= 1e-3
        # the minimizer's point mass sits on the middle node
        assert np.argmax(pi1) == 20
        assert pi1[20] == pytest.approx(1.0, abs=1e-3)
        # feasibility without ever projecting onto the density simplex
        assert abs(float(np.sum(pi1)) - 1.0) <= 1e-6
        assert abs(float(np.sum(pi2)) - 1.0) <= 1e-6
        assert float(np.min(rho1.coords)) >= -1e-6
        assert float(np.min(rho2.coords)) >= -1e-6
        assert grid_duality_gap(game, rho1.coords, rho2.coords) <= 1e-6

    def test_grid_matches_matrix_game_when_weights_are_unit(self):
        rng = np.random.default_rng(7)
        F = rng.uniform(-1, 1, (3, 3))
        game = GridGame(F, np.ones(3), np.ones(3))
        mg = MatrixGame(F)
        stop = StopRule(max_iter=400, residual_tol=1e-300, iterate_tol=1e-300)
        rho1, rho2, tr_g = grid_game_solve(game, gamma=0.2, stop=stop, gap_tol=1e-300)
        x1, x2, _, tr_m = matrix_game_solve(mg, gamma=0.2, stop=stop, gap_tol=1e-300)
        # chi differs (quadrature norm vs singular value) but gamma is pinned
        np.testing.assert_array_equal(rho1.coords, x1.coords)
        np.testing.assert_array_equal(rho2.coords, x2.coords)

    def test_zero_measure_grid_rejected(self):
        with pytest.raises(ValueError):
            GridGame(np.zeros((2, 2)), np.array([1.0, -1.0]), np.ones(2))
