import numpy as np
import pytest

from conftest import make_instance, make_params
from cvxsysid import (
    deviation_check,
    gram_min_eig,
    leaky_relu,
    quadratic,
    restart_decomposition,
    restarted_family,
    restarted_trajectory,
    simulate,
)
from cvxsysid.dynamics import save_csv
from cvxsysid.theory import contraction_factor


class TestSimulate:
    def test_memoryless_when_state_matrix_zero(self, rng):
        pot = quadratic(np.eye(3))
        params = make_params(np.zeros((3, 3)), rng.standard_normal((3, 5)))
        inputs = rng.standard_normal((10, 5))
        traj = simulate(params, pot, inputs, 10)
        for t in range(1, 11):
            np.testing.assert_allclose(
                traj.states[t], params.B_star @ inputs[t - 1], atol=1e-12
            )

    def test_zero_horizon(self, rng):
        pot = leaky_relu(0.5)
        params = make_params(0.3 * np.eye(2), rng.standard_normal((2, 3)))
        traj = simulate(params, pot, np.zeros((0, 3)), 0)
        assert traj.horizon == 0
        np.testing.assert_array_equal(traj.states, np.zeros((1, 2)))

    def test_linear_dynamics_match_unrolled_sum_oracle(self, rng):
        # independent oracle: x_t = sum_k A^k B u_{t-1-k} for the identity
        # quadratic potential
        pot = quadratic(np.eye(4))
        A = 0.4 * np.linalg.qr(rng.standard_normal((4, 4)))[0]
        B = rng.standard_normal((4, 6))
        params = make_params(A, B)
        T = 30
        inputs = rng.standard_normal((T, 6))
        traj = simulate(params, pot, inputs, T)
        for t in (1, 7, T):
            expected = np.zeros(4)
            for k in range(t):
                expected += np.linalg.matrix_power(A, k) @ B @ inputs[t - 1 - k]
            np.testing.assert_allclose(traj.states[t], expected, atol=1e-10)

    def test_replay_determinism(self):
        params, pot, traj = make_instance(0)
        replay = simulate(params, pot, traj.inputs, traj.horizon)
        assert np.array_equal(replay.states, traj.states)

    def test_initial_state_zero_and_recursion_replay(self):
        params, pot, traj = make_instance(1)
        assert np.all(traj.states[0] == 0.0)
        from cvxsysid.potentials import grad_eval

        for t in (1, traj.horizon // 2, traj.horizon):
            _, expected = grad_eval(
                pot, params.A_star @ traj.states[t - 1] + params.B_star @ traj.inputs[t - 1]
            )
            np.testing.assert_array_equal(traj.states[t], expected)

    def test_dimension_mismatch(self, rng):
        params, pot, _ = make_instance(2, n=4, p=6, T=10)
        with pytest.raises(ValueError):
            simulate(params, pot, rng.standard_normal((10, 5)), 10)
        with pytest.raises(ValueError):
            simulate(params, pot, rng.standard_normal((5, 6)), 10)


class TestGram:
    def test_rank_one_at_unit_horizon(self):
        params, pot, traj = make_instance(3, T=1)
        sigma, lam_min = gram_min_eig(traj)
        z0 = traj.stacked()[0]
        np.testing.assert_allclose(sigma, np.outer(z0, z0), atol=1e-10)
        assert abs(lam_min) <= 1e-10 * max(1.0, float(np.abs(sigma).max()))

    def test_symmetric_psd(self):
        params, pot, traj = make_instance(4)
        sigma, lam_min = gram_min_eig(traj)
        assert np.array_equal(sigma, sigma.T)
        assert lam_min >= -1e-10

    def test_quadratic_form_identity(self, rng):
        params, pot, traj = make_instance(5)
        sigma, _ = gram_min_eig(traj)
        Z = traj.stacked()
        for _ in range(5):
            w = rng.standard_normal(Z.shape[1])
            w /= np.linalg.norm(w)
            direct = float(np.sum((Z @ w) ** 2))
            assert w @ sigma @ w == pytest.approx(direct, rel=1e-9)


class TestRestarted:
    def test_state_right_after_reset(self):
        params, pot, traj = make_instance(6, T=40)
        L, ell = 5, 2
        rt = restarted_trajectory(traj, params, pot, L, ell)
        from cvxsysid.potentials import grad_eval

        t0 = ell  # a reset time: t0 = ell mod L
        assert np.all(rt.states[t0 + 1] == 0.0)
        _, expected = grad_eval(pot, params.B_star @ traj.inputs[t0 + 1])
        np.testing.assert_allclose(rt.states[t0 + 2], expected, atol=1e-12)

    def test_stride_equal_to_horizon(self):
        params, pot, traj = make_instance(7, T=24)
        rt = restarted_trajectory(traj, params, pot, 24, 3)
        # identical until the single reset point, deviating afterwards
        assert np.array_equal(rt.states[: 3 + 1], traj.states[: 3 + 1])
        assert not np.array_equal(rt.states[5:], traj.states[5:])
        assert rt.index_set.size == 0

    def test_replay_bitwise(self):
        params, pot, traj = make_instance(8, T=30)
        a = restarted_trajectory(traj, params, pot, 4, 1)
        b = restarted_trajectory(traj, params, pot, 4, 1)
        assert np.array_equal(a.states, b.states)

    def test_index_sets_partition(self):
        params, pot, traj = make_instance(9, T=37)
        for L in (2, 3, 5):
            family = restarted_family(traj, params, pot, L)
            joined = np.concatenate([rt.index_set for rt in family])
            assert len(joined) == len(set(joined.tolist()))
            assert sorted(joined.tolist()) == list(range(L, 37))

    def test_invalid_arguments(self):
        params, pot, traj = make_instance(10, T=12)
        with pytest.raises(ValueError):
            restarted_trajectory(traj, params, pot, 13, 0)
        with pytest.raises(ValueError):
            restarted_trajectory(traj, params, pot, 4, 4)


class TestRestartDecomposition:
    def test_memoryless_dynamics_have_zero_deviation(self, rng):
        pot = quadratic(np.eye(3))
        params = make_params(np.zeros((3, 3)), rng.standard_normal((3, 5)))
        inputs = rng.standard_normal((40, 5))
        traj = simulate(params, pot, inputs, 40)
        family = restarted_family(traj, params, pot, 4)
        w = rng.standard_normal(8)
        w /= np.linalg.norm(w)
        decomp = restart_decomposition(traj, family, w)
        np.testing.assert_allclose(decomp.deviation_sums, 0.0, atol=1e-20)

    def test_certified_chain_holds_for_random_directions(self, rng):
        params, pot, traj = make_instance(11, T=80)
        family = restarted_family(traj, params, pot, 4)
        for _ in range(10):
            w = rng.standard_normal(traj.state_dim + traj.input_dim)
            w /= np.linalg.norm(w)
            decomp = restart_decomposition(traj, family, w)
            assert decomp.slack >= -1e-9 * max(1.0, decomp.quad_form)

    def test_deviation_shrinks_with_stride(self, rng):
        params, pot, traj = make_instance(12, n=6, p=12, T=400, spectral_alpha=0.4)
        c2 = contraction_factor(params, pot) ** 2
        w = rng.standard_normal(traj.state_dim + traj.input_dim)
        w /= np.linalg.norm(w)
        worst = {}
        for L in (2, 4, 8):
            family = restarted_family(traj, params, pot, L)
            worst[L] = float(np.max(restart_decomposition(traj, family, w).deviation_sums))
        assert worst[4] < worst[2] and worst[8] < worst[4]
        # geometric decay per unit stride increase, with generous noise slack
        assert worst[8] <= worst[2] * c2 ** (8 - 2) * 100.0

    def test_non_unit_direction_rejected(self):
        params, pot, traj = make_instance(13, T=20)
        family = restarted_family(traj, params, pot, 2)
        with pytest.raises(ValueError):
            restart_decomposition(traj, family, np.full(traj.state_dim + traj.input_dim, 0.5))


class TestDeviationCheck:
    def test_contractive_instances_nonnegative(self):
        params, pot, traj = make_instance(14, T=100, spectral_alpha=0.5)
        for L in (2, 4, 8):
            family = restarted_family(traj, params, pot, L)
            assert deviation_check(traj, family, pot, params) >= -1e-12

    def test_unit_stride_is_tight(self):
        params, pot, traj = make_instance(15, T=40)
        family = restarted_family(traj, params, pot, 1)
        slack = deviation_check(traj, family, pot, params)
        assert abs(slack) <= 1e-12

    def test_zero_state_matrix(self, rng):
        pot = leaky_relu(0.5)
        params = make_params(np.zeros((3, 3)), rng.standard_normal((3, 5)))
        inputs = rng.standard_normal((30, 5))
        traj = simulate(params, pot, inputs, 30)
        family = restarted_family(traj, params, pot, 3)
        assert deviation_check(traj, family, pot, params) >= 0.0


class TestInvariants:
    def test_state_norm_bound(self):
        # deterministic consequence of smoothness plus contraction
        for seed in range(5):
            params, pot, traj = make_instance(seed, T=60, spectral_alpha=0.4)
            c = contraction_factor(params, pot)
            assert c < 1
            norms = np.linalg.norm(traj.states[1:-1], axis=1)
            image = np.linalg.norm(traj.inputs[:-1] @ params.B_star.T, axis=1)
            bound = pot.smoothness / (1.0 - c) * float(image.max())
            assert float(norms.max()) <= bound + 1e-10

    def test_csv_dump_row_count(self, tmp_path):
        params, pot, traj = make_instance(16, T=12)
        path = tmp_path / "traj.csv"
        save_csv(traj, path)
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 1 + traj.horizon + 1
