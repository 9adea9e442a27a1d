"""The convex-program estimator and its solvers.

The program minimizes, over the joint parameter block C,

    sum_t  f(C z_{t-1}) - <x_t, C z_{t-1}>,

whose unique minimizer is the true block whenever the Gram matrix of
stacked states is strictly positive definite.  Two routes are provided: an
accelerated first-order solver on the objective itself, and a direct least
squares on the conjugate-gradient-transformed states for potentials with
invertible gradients.  A scikit-learn estimator facade wraps both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import as_matrix
from .dynamics import Trajectory
from .exceptions import RankDeficientGramError
from .potentials import (
    ConvexPotential,
    _conjugate_rows,
    _grad_rows,
    _value_rows,
    from_spec,
    leaky_relu,
)

RESTART_NONE = "none"
RESTART_GRADIENT = "gradient"


@dataclass
class SolverConfig:
    """Accelerated-gradient solver settings.

    ``mean_normalize`` divides the objective (and gradient) by the horizon;
    the raw objective is the plain sum over time.  The published step sizes
    for this problem family are only meaningful against the normalized
    convention.  ``restart`` optionally re-zeroes the momentum whenever the
    gradient opposes the last move, which restores fast convergence on
    well-conditioned instances without using any strong-convexity constant.
    """

    step_size: float = 1e-3
    max_iterations: int = 500
    stop_tol: float = 1e-8
    momentum: str = "nesterov_convex"
    restart: str = RESTART_NONE
    mean_normalize: bool = False
    record_iterates: bool = False
    initial_C: np.ndarray | None = None

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.momentum != "nesterov_convex":
            raise ValueError(f"unknown momentum schedule {self.momentum!r}")
        if self.restart not in (RESTART_NONE, RESTART_GRADIENT):
            raise ValueError(f"unknown restart rule {self.restart!r}")

    def to_dict(self) -> dict:
        return {
            "step_size": self.step_size,
            "max_iterations": self.max_iterations,
            "stop_tol": self.stop_tol,
            "momentum": self.momentum,
            "restart": self.restart,
            "mean_normalize": self.mean_normalize,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        return cls(**{k: data[k] for k in cls().to_dict() if k in data})


@dataclass
class SolverRun:
    """Outcome of one solve.

    ``history`` holds one entry per performed iteration: the relative
    error against the reference block when one was given, otherwise the
    objective value (``history_kind`` says which).
    """

    final_C: np.ndarray
    history: np.ndarray
    history_kind: str
    iterations_used: int
    converged: bool
    diverged: bool = False
    iterates: list[np.ndarray] | None = field(default=None, repr=False)


def relative_error(C_hat, C_star) -> float:
    """Squared Frobenius error ratio ||C_hat - C_star||^2 / ||C_star||^2."""
    C_hat = as_matrix(C_hat, "C_hat")
    C_star = as_matrix(C_star, "C_star", shape=C_hat.shape)
    denom = float(np.sum(C_star**2))
    if denom == 0.0:
        raise ValueError("C_star must be nonzero")
    return float(np.sum((C_hat - C_star) ** 2) / denom)


def _design_arrays(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    if traj.horizon < 1:
        raise ValueError("trajectory must have horizon >= 1")
    return traj.stacked(), traj.next_states()


def _objective_arrays(C, Z, X1, potential, mean_normalize):
    V = Z @ C.T
    value = float(np.sum(_value_rows(potential, V)) - np.sum(X1 * V))
    grad = (_grad_rows(potential, V) - X1).T @ Z
    if mean_normalize:
        scale = 1.0 / Z.shape[0]
        return value * scale, grad * scale
    return value, grad


def objective_and_grad(
    C,
    traj: Trajectory,
    potential: ConvexPotential,
    mean_normalize: bool = False,
) -> tuple[float, np.ndarray]:
    """Objective value and gradient of the convex program at ``C``."""
    Z, X1 = _design_arrays(traj)
    C = as_matrix(C, "C", shape=(X1.shape[1], Z.shape[1]))
    return _objective_arrays(C, Z, X1, potential, mean_normalize)


def _solve_arrays(Z, X1, potential, config, reference):
    n, d = X1.shape[1], Z.shape[1]
    if config.initial_C is not None:
        C = as_matrix(config.initial_C, "initial_C", shape=(n, d)).copy()
    else:
        C = np.zeros((n, d))
    C_prev = C.copy()
    ref_norm2 = None
    if reference is not None:
        reference = as_matrix(reference, "reference_C", shape=(n, d))
        ref_norm2 = float(np.sum(reference**2))
        if ref_norm2 == 0.0:
            raise ValueError("reference_C must be nonzero")

    scale = 1.0 / Z.shape[0] if config.mean_normalize else 1.0
    baseline = float(np.sum(_value_rows(potential, Z @ C.T)) - np.sum(X1 * (Z @ C.T))) * scale
    best = baseline

    history = []
    iterates = [] if config.record_iterates else None
    converged = False
    diverged = False
    iterations = 0
    k_momentum = 1

    for k in range(1, config.max_iterations + 1):
        iterations = k
        coeff = (k_momentum - 1.0) / (k_momentum + 2.0)
        Y = C + coeff * (C - C_prev)
        V = Z @ Y.T
        value = float(np.sum(_value_rows(potential, V)) - np.sum(X1 * V)) * scale
        grad = ((_grad_rows(potential, V) - X1).T @ Z) * scale
        C_prev = C
        C = Y - config.step_size * grad

        if config.restart == RESTART_GRADIENT and np.sum(grad * (C - C_prev)) > 0:
            k_momentum = 1
        else:
            k_momentum += 1

        best = min(best, value)
        guard = 10.0 * max(baseline - best, abs(baseline), 1.0)
        if not np.isfinite(value) or value > baseline + guard:
            diverged = True

        if iterates is not None:
            iterates.append(C.copy())
        if reference is not None:
            rel = float(np.sum((C - reference) ** 2) / ref_norm2)
            history.append(rel)
            if rel <= config.stop_tol:
                converged = True
                break
        else:
            history.append(value)
        if diverged:
            break

    return SolverRun(
        final_C=C,
        history=np.asarray(history),
        history_kind="relative_error" if reference is not None else "objective",
        iterations_used=iterations,
        converged=converged,
        diverged=diverged,
        iterates=iterates,
    )


def agm_solve(
    traj: Trajectory,
    potential: ConvexPotential,
    config: SolverConfig | None = None,
    reference_C=None,
) -> SolverRun:
    """Solve the convex program with Nesterov's accelerated gradient method.

    The momentum schedule is the one for merely-convex objectives, started
    from the zero block.  When ``reference_C`` is supplied the per-iteration
    relative error against it is recorded and drives early termination at
    ``stop_tol``.
    """
    if config is None:
        config = SolverConfig()
    Z, X1 = _design_arrays(traj)
    return _solve_arrays(Z, X1, potential, config, reference_C)


def _gram_with_check(Z) -> np.ndarray:
    sigma = Z.T @ Z
    sigma = (sigma + sigma.T) / 2.0
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[0] <= 1e-10 * max(1.0, eigs[-1]):
        raise RankDeficientGramError(
            f"Gram matrix of stacked states is numerically singular "
            f"(min eigenvalue {eigs[0]:.3e}); the program has no unique minimizer",
            min_eigenvalue=eigs[0],
        )
    return sigma


def conjugate_ls_solve(traj: Trajectory, potential: ConvexPotential) -> np.ndarray:
    """Closed-form baseline: map states through the conjugate gradient and
    least-squares them on the stacked vectors.

    Requires an invertible gradient; raises rank-deficient when the Gram
    matrix is singular (carrying its smallest eigenvalue).
    """
    Z, X1 = _design_arrays(traj)
    Y = _conjugate_rows(potential, X1)
    _gram_with_check(Z)
    solution, *_ = np.linalg.lstsq(Z, Y, rcond=None)
    return solution.T


def split_coefficients(C, n_states: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Undo the stacking: recover (A, B) from the joint block."""
    C = as_matrix(C, "C")
    if C.shape[0] != n_states or C.shape[1] <= n_states:
        raise ValueError("C must have shape (n, n + p) with p >= 1")
    return C[:, :n_states].copy(), beta * C[:, n_states:]


# -- scikit-learn facade --------------------------------------------------

def _as_potential(potential) -> ConvexPotential:
    if potential is None:
        return leaky_relu(1.0)
    if isinstance(potential, ConvexPotential):
        return potential
    if isinstance(potential, dict):
        return from_spec(potential)
    raise ValueError("potential must be None, a ConvexPotential, or a spec dict")


class ConvexRecurrenceRegressor(RegressorMixin, BaseEstimator):
    """Multioutput regressor for one-step recurrence data.

    Fits the joint parameter block on rows of stacked predecessors
    ``X[t] = [x_t; beta u_t]`` against successor states ``y[t] = x_{t+1}``
    by running the accelerated solver on the convex program.  ``predict``
    maps rows through the fitted block and the potential's gradient.

    Parameters
    ----------
    potential : ConvexPotential, spec dict, or None
        Nonlinearity of the recurrence; None means a linear recurrence.
    step_size, max_iterations, stop_tol, restart, mean_normalize
        Forwarded to :class:`SolverConfig`.  The default here normalizes
        the objective by the number of rows so step sizes are scale-free.
    record_history : bool
        Keep the per-iteration history on the fitted estimator.
    """

    def __init__(
        self,
        potential=None,
        step_size=1e-3,
        max_iterations=500,
        stop_tol=1e-8,
        restart=RESTART_NONE,
        mean_normalize=True,
        record_history=False,
    ):
        self.potential = potential
        self.step_size = step_size
        self.max_iterations = max_iterations
        self.stop_tol = stop_tol
        self.restart = restart
        self.mean_normalize = mean_normalize
        self.record_history = record_history

    def _config(self):
        return SolverConfig(
            step_size=self.step_size,
            max_iterations=self.max_iterations,
            stop_tol=self.stop_tol,
            restart=self.restart,
            mean_normalize=self.mean_normalize,
        )

    def fit(self, X, y, reference=None):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        self._single_output = y.ndim == 1
        y2 = y[:, np.newaxis] if self._single_output else y
        pot = _as_potential(self.potential)
        run = _solve_arrays(X, y2, pot, self._config(), reference)
        self.coef_ = run.final_C
        self.n_iter_ = run.iterations_used
        self.converged_ = run.converged
        self.diverged_ = run.diverged
        if self.record_history:
            self.history_ = run.history
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        pot = _as_potential(self.potential)
        pred = _grad_rows(pot, X @ self.coef_.T)
        return pred[:, 0] if self._single_output else pred


class ConjugateRecurrenceRegressor(RegressorMixin, BaseEstimator):
    """Least-squares baseline on conjugate-gradient-transformed targets.

    Only valid for potentials with invertible gradients; raises
    ``UnsupportedPotentialError`` otherwise and ``RankDeficientGramError``
    when the design has no unique solution.
    """

    def __init__(self, potential=None):
        self.potential = potential

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        self._single_output = y.ndim == 1
        y2 = y[:, np.newaxis] if self._single_output else y
        pot = _as_potential(self.potential)
        targets = _conjugate_rows(pot, y2)
        _gram_with_check(X)
        solution, *_ = np.linalg.lstsq(X, targets, rcond=None)
        self.coef_ = solution.T
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        pot = _as_potential(self.potential)
        pred = _grad_rows(pot, X @ self.coef_.T)
        return pred[:, 0] if self._single_output else pred
