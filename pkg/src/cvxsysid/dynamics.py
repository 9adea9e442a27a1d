"""Trajectory simulation, Gram-matrix diagnostics, and the restarted
processes used to certify that the Gram matrix grows.

The restarted process re-runs the recursion on the same realized inputs
but zeroes the state every ``stride`` steps (at a given offset), which
makes blocks of stacked states independent.  The decomposition and
deviation checks below verify, pointwise on a realization, the
deterministic inequality skeleton behind that argument.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_index, check_unit_vector
from .models import SystemParams
from .potentials import ConvexPotential, _grad_rows


@dataclass(frozen=True)
class Trajectory:
    """One realized trajectory: inputs (T, p), states (T + 1, n), and the
    stacking normalizer copied from the system."""

    inputs: np.ndarray
    states: np.ndarray
    beta: float

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.states.ndim != 2:
            raise ValueError("inputs and states must be 2-dimensional")
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise ValueError("states must hold exactly one more row than inputs")

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def stacked(self) -> np.ndarray:
        """Stacked vectors [x_t; beta u_t] for t = 0..T-1, shape (T, n+p)."""
        return np.hstack([self.states[:-1], self.beta * self.inputs])

    def next_states(self) -> np.ndarray:
        """States x_1..x_T aligned with the stacked rows, shape (T, n)."""
        return self.states[1:]


@dataclass(frozen=True)
class RestartedTrajectory:
    """States of the zero-reset process for one (stride, offset) pair.

    ``index_set`` holds the subsampled times t in [stride, T) congruent to
    ``offset`` modulo ``stride``; across offsets these sets partition
    {stride, ..., T - 1}.
    """

    stride: int
    offset: int
    states: np.ndarray
    index_set: np.ndarray


def _step(potential, params, x, u):
    return _grad_rows(potential, (params.A_star @ x + params.B_star @ u)[np.newaxis, :])[0]


def simulate(
    params: SystemParams,
    potential: ConvexPotential,
    inputs,
    T: int,
) -> Trajectory:
    """Run the recursion x_t = grad(A x_{t-1} + B u_{t-1}) from x_0 = 0."""
    T = check_index(T, "T", minimum=0)
    inputs = as_float_array(inputs, "inputs", ndim=2)
    if inputs.shape[0] < T:
        raise ValueError(f"need at least {T} inputs, got {inputs.shape[0]}")
    if inputs.shape[1] != params.p:
        raise ValueError(
            f"input dimension {inputs.shape[1]} does not match system ({params.p})"
        )
    inputs = inputs[:T]
    states = np.zeros((T + 1, params.n))
    for t in range(1, T + 1):
        states[t] = _step(potential, params, states[t - 1], inputs[t - 1])
    return Trajectory(inputs=inputs, states=states, beta=params.beta)


def gram_matrix(traj: Trajectory) -> np.ndarray:
    """Sum of outer products of the stacked vectors, symmetrized.

    Accumulates in extended precision when the platform provides one, so
    eigenvalue diagnostics see a cleanly symmetric matrix.
    """
    if traj.horizon < 1:
        raise ValueError("gram matrix needs horizon >= 1")
    Z = traj.stacked()
    if np.finfo(np.longdouble).eps < np.finfo(np.float64).eps:
        sigma = (Z.astype(np.longdouble).T @ Z.astype(np.longdouble)).astype(np.float64)
    else:
        sigma = Z.T @ Z
    return (sigma + sigma.T) / 2.0


def gram_min_eig(traj: Trajectory) -> tuple[np.ndarray, float]:
    """Gram matrix of stacked vectors and its smallest eigenvalue."""
    sigma = gram_matrix(traj)
    return sigma, float(np.linalg.eigvalsh(sigma)[0])


def restarted_trajectory(
    traj: Trajectory,
    params: SystemParams,
    potential: ConvexPotential,
    stride: int,
    offset: int,
) -> RestartedTrajectory:
    """Re-run the recursion on the stored inputs, zeroing the state right
    after every time congruent to ``offset`` modulo ``stride``."""
    T = traj.horizon
    stride = check_index(stride, "stride", minimum=1)
    if stride > T:
        raise ValueError(f"stride must be <= horizon ({T}), got {stride}")
    offset = check_index(offset, "offset", minimum=0)
    if offset >= stride:
        raise ValueError(f"offset must be < stride, got {offset}")
    states = np.zeros((T + 1, params.n))
    for t in range(T):
        if t % stride == offset:
            states[t + 1] = 0.0
        else:
            states[t + 1] = _step(potential, params, states[t], traj.inputs[t])
    index_set = np.arange(stride + offset, T, stride)
    return RestartedTrajectory(stride=stride, offset=offset, states=states, index_set=index_set)


def restarted_family(
    traj: Trajectory,
    params: SystemParams,
    potential: ConvexPotential,
    stride: int,
) -> list[RestartedTrajectory]:
    """Restarted processes for every offset 0..stride-1."""
    return [
        restarted_trajectory(traj, params, potential, stride, offset)
        for offset in range(stride)
    ]


def _restarted_stacked(traj: Trajectory, restarted: RestartedTrajectory) -> np.ndarray:
    """Stacked restarted vectors at the subsampled times, shape (|set|, n+p)."""
    ts = restarted.index_set
    return np.hstack([restarted.states[ts], traj.beta * traj.inputs[ts]])


@dataclass(frozen=True)
class RestartDecomposition:
    """Per-offset energy split of a direction ``w`` over the subsampled
    times, together with the certified chain

        w' Sigma w >= sum_offsets (restarted_sums / 2 - deviation_sums).
    """

    restarted_sums: np.ndarray
    deviation_sums: np.ndarray
    quad_form: float
    certified_lower_bound: float

    @property
    def slack(self) -> float:
        return self.quad_form - self.certified_lower_bound


def restart_decomposition(
    traj: Trajectory,
    restarted: list[RestartedTrajectory],
    w,
) -> RestartDecomposition:
    """Split the Gram quadratic form along restarted and deviation parts."""
    w = check_unit_vector(w, "w")
    if w.shape[0] != traj.state_dim + traj.input_dim:
        raise ValueError("w must have the stacked dimension n + p")
    Z = traj.stacked()
    quad_form = float(np.sum((Z @ w) ** 2))
    w_state = w[: traj.state_dim]
    restarted_sums = np.zeros(len(restarted))
    deviation_sums = np.zeros(len(restarted))
    for k, rt in enumerate(restarted):
        ts = rt.index_set
        proj = _restarted_stacked(traj, rt) @ w
        restarted_sums[k] = np.sum(proj**2)
        dev_proj = (traj.states[ts] - rt.states[ts]) @ w_state
        deviation_sums[k] = np.sum(dev_proj**2)
    lower = float(np.sum(0.5 * restarted_sums - deviation_sums))
    return RestartDecomposition(
        restarted_sums=restarted_sums,
        deviation_sums=deviation_sums,
        quad_form=quad_form,
        certified_lower_bound=lower,
    )


def deviation_check(
    traj: Trajectory,
    restarted: list[RestartedTrajectory],
    potential: ConvexPotential,
    params: SystemParams,
) -> float:
    """Worst slack of the pointwise deviation bound across all offsets and
    subsampled times:

        ||z_t - z_t^(restarted)||^2 <= (smoothness ||A||)^(2 (stride - 1))
                                       * ||x_{t - stride + 1}||^2.

    The right side references the state of the original trajectory at the
    restart time of the block.  Nonnegative on every realization when that
    is so (contractive or not); the bound is only informative under
    contraction.
    """
    contraction = potential.smoothness * float(np.linalg.norm(params.A_star, 2))
    worst = np.inf
    for rt in restarted:
        ts = rt.index_set
        if ts.size == 0:
            continue
        factor = contraction ** (2 * (rt.stride - 1))
        dev2 = np.sum((traj.states[ts] - rt.states[ts]) ** 2, axis=1)
        anchor2 = np.sum(traj.states[ts - rt.stride + 1] ** 2, axis=1)
        worst = min(worst, float(np.min(factor * anchor2 - dev2)))
    return worst


def save_csv(traj: Trajectory, path) -> None:
    """Debug dump, one row per time step: t, inputs (empty at t = T), state."""
    T, p, n = traj.horizon, traj.input_dim, traj.state_dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"u{i}" for i in range(p)] + [f"x{i}" for i in range(n)])
        for t in range(T + 1):
            u_part = [repr(v) for v in traj.inputs[t]] if t < T else [""] * p
            writer.writerow([t] + u_part + [repr(v) for v in traj.states[t]])
