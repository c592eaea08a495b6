import numpy as np
import pytest

from fpif import _kernels
from fpif.games import GridGame, MatrixGame, grid_game_solve, matrix_game_solve
from fpif.tseng import StopRule


def run_backend(backend, F, w1, w2, gamma, n_iter, lam=1.0):
    n1, n2 = F.shape
    inv_m1 = 1.0 / float(np.sum(w1))
    inv_m2 = 1.0 / float(np.sum(w2))
    G1, G2 = _kernels.centered_side_means(F, w1, w2, inv_m1, inv_m2)
    z1, z2 = np.zeros(n1), np.zeros(n2)
    res = np.empty(n_iter)
    lams = np.full(n_iter, lam)
    n_done, reason = _kernels.bilinear_saddle_loop(
        np.ascontiguousarray(F), w1, w2, inv_m1, inv_m2, G1, G2, gamma, lams,
        z1, z2, res, 1e-300, 1e-300, 1e-300, 1_000_000, backend=backend,
    )
    return z1, z2, res[:n_done], reason


class TestBackends:
    def test_numba_and_numpy_agree(self):
        rng = np.random.default_rng(0)
        F = rng.uniform(-1, 1, (5, 7))
        w1 = rng.uniform(0.5, 1.5, 5)
        w2 = rng.uniform(0.5, 1.5, 7)
        za1, za2, ra, _ = run_backend("numba", F, w1, w2, 0.3, 400)
        zb1, zb2, rb, _ = run_backend("numpy", F, w1, w2, 0.3, 400)
        assert np.max(np.abs(za1 - zb1)) <= 1e-12
        assert np.max(np.abs(za2 - zb2)) <= 1e-12
        assert np.max(np.abs(ra - rb)) <= 1e-12

    def test_solver_results_agree_across_backends(self):
        game = MatrixGame([[2.0, -1.0, 0.5], [0.0, 1.0, -1.5]])
        outs = {}
        for backend in ("numba", "numpy"):
            x1, x2, value, trace = matrix_game_solve(game, backend=backend)
            outs[backend] = (x1.coords, x2.coords, value)
            assert trace.backend == backend
        np.testing.assert_allclose(outs["numba"][0], outs["numpy"][0], atol=1e-9)
        np.testing.assert_allclose(outs["numba"][1], outs["numpy"][1], atol=1e-9)
        assert outs["numba"][2] == pytest.approx(outs["numpy"][2], abs=1e-9)

    def test_env_flag_selects_numpy(self, monkeypatch):
        monkeypatch.setenv("FPIF_NUMBA", "0")
        assert _kernels.active_backend() == "numpy"
        assert not _kernels.numba_enabled()
        monkeypatch.setenv("FPIF_NUMBA", "1")
        assert _kernels.active_backend() == ("numba" if _kernels.HAVE_NUMBA else "numpy")

    def test_default_backend_follows_flag_in_solver(self, monkeypatch):
        monkeypatch.setenv("FPIF_NUMBA", "0")
        game = MatrixGame([[1.0, -1.0], [-1.0, 1.0]])
        _, _, _, trace = matrix_game_solve(game)
        assert trace.backend == "numpy"


class TestExtraction:
    def test_extracted_strategies_satisfy_affine_constraint(self):
        rng = np.random.default_rng(1)
        w1 = rng.uniform(0.5, 2.0, 4)
        w2 = rng.uniform(0.5, 2.0, 3)
        z1 = rng.standard_normal(4)
        z2 = rng.standard_normal(3)
        inv_m1, inv_m2 = 1.0 / np.sum(w1), 1.0 / np.sum(w2)
        x1, x2 = _kernels.extract_strategies(w1, w2, z1, z2, inv_m1, inv_m2)
        assert float(w1 @ x1) == pytest.approx(1.0, abs=1e-12)
        assert float(w2 @ x2) == pytest.approx(1.0, abs=1e-12)

    def test_centered_means_have_zero_weighted_mean(self):
        rng = np.random.default_rng(2)
        F = rng.uniform(-2, 2, (6, 5))
        w1 = rng.uniform(0.5, 1.5, 6)
        w2 = rng.uniform(0.5, 1.5, 5)
        inv_m1, inv_m2 = 1.0 / np.sum(w1), 1.0 / np.sum(w2)
        G1, G2 = _kernels.centered_side_means(F, w1, w2, inv_m1, inv_m2)
        assert abs(float(w1 @ G1) * inv_m1) <= 1e-12
        assert abs(float(w2 @ G2) * inv_m2) <= 1e-12

    def test_antisymmetric_kernel_gives_exactly_negated_means(self):
        rng = np.random.default_rng(3)
        Q = rng.uniform(-1, 1, (5, 5))
        F = Q - Q.T
        w = rng.uniform(0.5, 1.5, 5)
        inv_m = 1.0 / np.sum(w)
        G1, G2 = _kernels.centered_side_means(F, w, w, inv_m, inv_m)
        assert np.array_equal(G2, -G1)


class TestStopReasons:
    def test_gap_stop_reports_converged(self):
        game = MatrixGame([[2.0, 0.0], [0.0, 1.0]])
        _, _, _, trace = matrix_game_solve(
            game, stop=StopRule(residual_tol=1e-300, max_iter=200_000), gap_tol=1e-7
        )
        assert trace.status == "converged"

    def test_exhaustion_reports_max_iter(self):
        game = MatrixGame([[2.0, 0.0], [0.0, 1.0]])
        _, _, _, trace = matrix_game_solve(
            game, stop=StopRule(residual_tol=1e-300, max_iter=100), gap_tol=1e-300
        )
        assert trace.status == "max_iter"
        assert trace.n_iter == 100
