import numpy as np
import pytest
from sklearn.base import clone

from conftest import make_instance, make_params
from cvxsysid import (
    ConjugateRecurrenceRegressor,
    ConvexRecurrenceRegressor,
    RankDeficientGramError,
    SolverConfig,
    UnsupportedPotentialError,
    agm_solve,
    conjugate_ls_solve,
    leaky_relu,
    objective_and_grad,
    quadratic,
    relative_error,
    simulate,
    split_coefficients,
)

QUICK = dict(step_size=4e-3, max_iterations=3000, restart="gradient", mean_normalize=True)


class TestObjective:
    def test_stationary_at_ground_truth(self):
        params, pot, traj = make_instance(0)
        _, grad = objective_and_grad(params.C_star, traj, pot)
        sigma = traj.stacked().T @ traj.stacked()
        scale = np.linalg.norm(params.C_star) * np.linalg.eigvalsh(sigma)[-1]
        assert np.linalg.norm(grad) / scale <= 1e-12

    def test_identity_quadratic_closed_form(self, rng):
        pot = quadratic(np.eye(4))
        params = make_params(0.3 * np.eye(4), rng.standard_normal((4, 6)))
        traj = simulate(params, pot, rng.standard_normal((20, 6)), 20)
        C = rng.standard_normal((4, 10))
        value, _ = objective_and_grad(C, traj, pot)
        Z, X1 = traj.stacked(), traj.next_states()
        V = Z @ C.T
        expected = 0.5 * np.sum(V**2) - np.sum(X1 * V)
        assert value == pytest.approx(expected, rel=1e-12)

    def test_gradient_matches_central_differences(self, rng):
        params, pot, traj = make_instance(1, n=4, p=6, T=15)
        C = 0.1 * rng.standard_normal((4, 10))
        value, grad = objective_and_grad(C, traj, pot)
        h = 1e-6
        for _ in range(15):
            i, j = rng.integers(4), rng.integers(10)
            E = np.zeros_like(C)
            E[i, j] = h
            fd = (
                objective_and_grad(C + E, traj, pot)[0]
                - objective_and_grad(C - E, traj, pot)[0]
            ) / (2 * h)
            assert fd == pytest.approx(grad[i, j], rel=1e-6, abs=1e-8)

    def test_convexity_probe(self, rng):
        params, pot, traj = make_instance(2, n=5, p=8, T=25)
        for _ in range(10):
            C1 = rng.standard_normal((5, 13))
            C2 = rng.standard_normal((5, 13))
            theta = rng.uniform(0.05, 0.95)
            mix = objective_and_grad(theta * C1 + (1 - theta) * C2, traj, pot)[0]
            v1 = objective_and_grad(C1, traj, pot)[0]
            v2 = objective_and_grad(C2, traj, pot)[0]
            scale = max(abs(v1), abs(v2), 1.0)
            assert mix <= theta * v1 + (1 - theta) * v2 + 1e-9 * scale

    def test_strong_convexity_lower_bound(self, rng):
        params, pot, traj = make_instance(3, n=5, p=8, T=25)
        Z = traj.stacked()
        v_star = objective_and_grad(params.C_star, traj, pot)[0]
        for _ in range(10):
            C = params.C_star + rng.standard_normal((5, 13))
            gap = objective_and_grad(C, traj, pot)[0] - v_star
            quad = 0.5 * pot.strong_convexity * np.sum(((C - params.C_star) @ Z.T) ** 2)
            assert gap >= quad - 1e-9 * max(1.0, abs(gap))

    def test_dimension_mismatch(self, rng):
        params, pot, traj = make_instance(4, n=4, p=6, T=10)
        with pytest.raises(ValueError):
            objective_and_grad(rng.standard_normal((4, 9)), traj, pot)


class TestAgmSolve:
    def test_single_tiny_step_stays_at_zero(self):
        params, pot, traj = make_instance(5, n=4, p=6, T=10)
        config = SolverConfig(step_size=1e-300, max_iterations=1)
        run = agm_solve(traj, pot, config, reference_C=params.C_star)
        assert run.iterations_used == 1
        assert np.all(np.abs(run.final_C) < 1e-280)

    def test_recovery_on_small_instances(self):
        for seed in range(3):
            params, pot, traj = make_instance(seed, n=10, p=20, T=200, spectral_alpha=0.2)
            run = agm_solve(traj, pot, SolverConfig(**QUICK), reference_C=params.C_star)
            assert run.converged
            assert run.history[-1] <= 1e-8

    def test_history_kind_and_monotone_envelope(self):
        params, pot, traj = make_instance(6, n=6, p=10, T=60)
        run = agm_solve(traj, pot, SolverConfig(step_size=1e-3, max_iterations=200, mean_normalize=True))
        assert run.history_kind == "objective"
        best = np.minimum.accumulate(run.history)
        assert np.all(np.diff(best) <= 1e-12)
        assert best[-1] < run.history[0]

    def test_divergence_flagged_with_partial_history(self):
        params, pot, traj = make_instance(7, n=6, p=10, T=60)
        config = SolverConfig(step_size=1e3, max_iterations=500)
        run = agm_solve(traj, pot, config, reference_C=params.C_star)
        assert run.diverged
        assert not run.converged
        assert 1 <= run.iterations_used < 500
        assert len(run.history) == run.iterations_used

    def test_relative_error_history_recorded(self):
        params, pot, traj = make_instance(8, n=6, p=10, T=80)
        run = agm_solve(traj, pot, SolverConfig(**QUICK), reference_C=params.C_star)
        assert run.history_kind == "relative_error"
        assert np.all(run.history >= 0.0)
        assert run.converged == (run.history[-1] <= 1e-8)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(step_size=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iterations=0)
        with pytest.raises(ValueError):
            SolverConfig(restart="always")


class TestConjugateLeastSquares:
    def test_linear_case_is_ordinary_least_squares(self, rng):
        params, pot_unused, traj = make_instance(9, n=5, p=8, T=60, rho=1.0)
        pot = leaky_relu(1.0)
        C = conjugate_ls_solve(traj, pot)
        ols, *_ = np.linalg.lstsq(traj.stacked(), traj.next_states(), rcond=None)
        np.testing.assert_allclose(C, ols.T, atol=1e-10)

    def test_agreement_with_accelerated_solver(self):
        params, pot, traj = make_instance(10, n=8, p=16, T=150)
        direct = conjugate_ls_solve(traj, pot)
        config = SolverConfig(step_size=4e-3, max_iterations=6000, stop_tol=1e-16,
                              restart="gradient", mean_normalize=True)
        run = agm_solve(traj, pot, config, reference_C=params.C_star)
        gap = np.linalg.norm(run.final_C - direct) / np.linalg.norm(direct)
        assert gap <= 1e-6

    def test_unit_horizon_rank_deficient(self):
        params, pot, traj = make_instance(11, T=1)
        with pytest.raises(RankDeficientGramError) as exc_info:
            conjugate_ls_solve(traj, pot)
        assert exc_info.value.min_eigenvalue <= 1e-10

    def test_pure_relu_unsupported(self, rng):
        pot = leaky_relu(0.0)
        params = make_params(0.2 * np.eye(3), rng.standard_normal((3, 5)), beta=1.0)
        traj = simulate(params, pot, rng.standard_normal((40, 5)), 40)
        with pytest.raises(UnsupportedPotentialError):
            conjugate_ls_solve(traj, pot)


class TestRelativeError:
    def test_exact_match(self, rng):
        C = rng.standard_normal((3, 5))
        assert relative_error(C, C) == 0.0

    def test_double_is_unit_error(self, rng):
        C = rng.standard_normal((3, 5))
        assert relative_error(2 * C, C) == pytest.approx(1.0, rel=1e-12)

    def test_small_perturbation(self, rng):
        C = rng.standard_normal((3, 5))
        E = rng.standard_normal((3, 5))
        E *= 1e-4 * np.linalg.norm(C) / np.linalg.norm(E)
        assert relative_error(C + E, C) == pytest.approx(1e-8, rel=1e-10)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            relative_error(np.ones((2, 2)), np.zeros((2, 2)))


class TestSplitCoefficients:
    def test_round_trip(self):
        params, pot, traj = make_instance(12, n=5, p=7)
        A, B = split_coefficients(params.C_star, 5, params.beta)
        np.testing.assert_allclose(A, params.A_star, atol=1e-12)
        np.testing.assert_allclose(B, params.B_star, rtol=1e-12)


class TestSklearnFacade:
    def test_fit_predict_recovers_dynamics(self):
        params, pot, traj = make_instance(13, n=8, p=16, T=160)
        reg = ConvexRecurrenceRegressor(potential=pot, step_size=4e-3,
                                        max_iterations=3000, restart="gradient")
        Z, X1 = traj.stacked(), traj.next_states()
        reg.fit(Z, X1, reference=params.C_star)
        assert reg.converged_
        assert relative_error(reg.coef_, params.C_star) <= 1e-8
        assert reg.score(Z, X1) > 0.999
        np.testing.assert_allclose(reg.predict(Z), X1, atol=1e-2)

    def test_get_params_clone_round_trip(self):
        reg = ConvexRecurrenceRegressor(step_size=2e-3, restart="gradient")
        cloned = clone(reg)
        assert cloned.get_params() == reg.get_params()
        cloned.set_params(step_size=5e-3)
        assert cloned.step_size == 5e-3 and reg.step_size == 2e-3

    def test_conjugate_regressor_matches_functional_path(self):
        params, pot, traj = make_instance(14, n=6, p=10, T=100)
        reg = ConjugateRecurrenceRegressor(potential=pot)
        reg.fit(traj.stacked(), traj.next_states())
        np.testing.assert_allclose(reg.coef_, conjugate_ls_solve(traj, pot), atol=1e-12)

    def test_predict_before_fit_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ConvexRecurrenceRegressor().predict(np.zeros((2, 3)))

    def test_default_potential_is_linear(self, rng):
        Z = rng.standard_normal((50, 6))
        C = rng.standard_normal((2, 6))
        y = Z @ C.T
        reg = ConjugateRecurrenceRegressor()
        reg.fit(Z, y)
        np.testing.assert_allclose(reg.coef_, C, atol=1e-8)
