"""Quantities of the recovery theorem and Monte-Carlo probes of its
probabilistic ingredients.

Everything here is desk-scale numerics: the small-ball threshold whose
positivity drives exact recovery, the stride and horizon bounds with their
(symbolic in the source material, configurable here) absolute constants,
coherence and contraction statistics of the ground truth, and sampling
probes for the small-ball probability and the input-image norm bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_rng, check_index, check_positive
from .exceptions import InfeasibleBoundError
from .models import CUBED_GAUSSIAN_SCALE, LAW_CUBED_GAUSSIAN, InputModel, SystemParams
from .potentials import ConvexPotential, _grad_rows

_MAX_FIXED_POINT_STEPS = 1_000_000


@dataclass
class TheoryReport:
    """Collected theoretical quantities for one system.

    Fields are None when not yet filled or undefined for the instance (a
    note records why).  ``col_deleted_min_eigs`` holds, per input column,
    the square root of the smallest eigenvalue of B B' after zeroing that
    column.
    """

    threshold: float | None = None
    mu: float | None = None
    contraction: float | None = None
    stride_min: int | None = None
    horizon_min: int | None = None
    fourth_moment: float | None = None
    delta: float | None = None
    stride_constant: float | None = None
    horizon_constant: float | None = None
    col_deleted_min_eigs: np.ndarray | None = None
    spectral_spread: float | None = None
    threshold_valid: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, np.ndarray):
                out[key] = value.tolist()
            else:
                out[key] = value
        return out


def max_column_norm(B: np.ndarray) -> float:
    """Largest Euclidean column norm (the 1-to-2 operator norm)."""
    return float(np.linalg.norm(B, axis=0).max())


def column_deleted_min_eigs(B: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of B B' with column i zeroed, for each i.

    Zeroing (rather than removing) keeps the Gram shape, so a deleted
    column that breaks row rank shows up as an exact zero.
    """
    p = B.shape[1]
    out = np.empty(p)
    for i in range(p):
        reduced = B.copy()
        reduced[:, i] = 0.0
        out[i] = np.linalg.eigvalsh(reduced @ reduced.T)[0]
    return np.maximum(out, 0.0)


def contraction_factor(params: SystemParams, potential: ConvexPotential) -> float:
    """smoothness * spectral norm of the state matrix; < 1 means the
    dynamics forget geometrically."""
    return potential.smoothness * float(np.linalg.norm(params.A_star, 2))


def small_ball_threshold(
    params: SystemParams,
    potential: ConvexPotential,
    model: InputModel,
) -> float:
    """Threshold whose strict positivity is the key recovery condition.

    Combines a penalty proportional to the linearization defect and the
    input tail constant with a reward from the weakest column-deleted
    direction of the input matrix.  When the defect is zero the penalty
    vanishes and no tail constants are needed.
    """
    defect = potential.defect
    lam = potential.strong_convexity
    if defect >= lam:
        warnings.warn(
            "linearization defect >= strong convexity: the threshold is "
            "computed but the theory behind it is vacuous here",
            RuntimeWarning,
            stacklevel=2,
        )
    if defect > 0.0:
        if model.psi_norm is None or model.orlicz_alpha is None or model.fourth_moment is None:
            raise ValueError(
                "input model must provide psi_norm, orlicz_alpha and "
                "fourth_moment (analytic or estimated) when the defect is nonzero"
            )
        tail = model.psi_norm * math.log(10.0 * max(model.fourth_moment, 3.0)) ** (
            1.0 / model.orlicz_alpha
        )
        penalty = defect * tail * max_column_norm(params.B_star)
    else:
        penalty = 0.0
    roots = np.sqrt(column_deleted_min_eigs(params.B_star))
    reward = 0.6 * float(np.min(np.minimum(params.beta, (lam - defect) * roots)))
    return -penalty + reward


def stride_bound(
    params: SystemParams,
    potential: ConvexPotential,
    T: int,
    delta: float,
    threshold: float,
    constant: float = 1.0,
) -> int:
    """Smallest integer stride satisfying the deviation-suppression bound.

    ``constant`` stands in for the unspecified absolute constant of the
    bound; the default 1 makes the formula computable while keeping the
    dependence visible.
    """
    T = check_index(T, "T", minimum=2)
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    check_positive(constant, "constant")
    if threshold <= 0.0:
        raise InfeasibleBoundError("stride bound needs a strictly positive threshold")
    contraction = contraction_factor(params, potential)
    if contraction >= 1.0:
        raise InfeasibleBoundError(
            f"stride bound needs contraction < 1, got {contraction:.4f}"
        )
    p = params.p
    frob = float(np.linalg.norm(params.B_star))
    inner = (
        (constant**2 / threshold**2)
        * math.log(2.0 * (T - 1) * (p + 1) / delta)
        * (potential.smoothness * frob / (1.0 - contraction)) ** 2
    )
    rhs = 1.0 + math.log(inner) / math.log(1.0 / contraction)
    return max(1, math.ceil(rhs - 1e-12))


def horizon_bound(
    n: int,
    p: int,
    stride: int,
    delta: float,
    fourth_moment: float,
    constant: float = 1.0,
) -> int:
    """Fixed point of the self-referential horizon requirement.

    The requirement reads T >= constant * (max(eta^2, 9) (n+p) L log(e T /
    (L (n+p))) + log(8 L / delta)); iterating the right side from
    T = (n+p) L converges because the log grows sublinearly.
    """
    n = check_index(n, "n", minimum=1)
    p = check_index(p, "p", minimum=1)
    stride = check_index(stride, "stride", minimum=1)
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if constant < 0.0:
        raise ValueError("constant must be nonnegative")
    dim = n + p
    moment = max(fourth_moment**2, 9.0)

    def step(T: int) -> int:
        rhs = constant * (
            moment * dim * stride * math.log(math.e * T / (stride * dim))
            + math.log(8.0 * stride / delta)
        )
        return max(1, math.ceil(rhs - 1e-12))

    T = dim * stride
    for _ in range(_MAX_FIXED_POINT_STEPS):
        T_next = step(T)
        if T_next == T:
            return T
        T = T_next
    raise ArithmeticError("horizon fixed-point iteration did not converge")


def coherence_report(params: SystemParams, potential: ConvexPotential) -> TheoryReport:
    """Coherence, contraction and column-deletion spectra of one system."""
    B = params.B_star
    col_norm = max_column_norm(B)
    frob = float(np.linalg.norm(B))
    eigs = column_deleted_min_eigs(B)
    roots = np.sqrt(eigs)
    spread = float(np.max(col_norm / np.where(roots > 0, roots, np.inf)))
    return TheoryReport(
        mu=math.sqrt(params.p) * col_norm / frob,
        contraction=contraction_factor(params, potential),
        col_deleted_min_eigs=roots,
        spectral_spread=spread,
    )


def small_ball_probe(
    params: SystemParams,
    potential: ConvexPotential,
    model: InputModel,
    stride: int,
    offset: int,
    threshold: float,
    directions: int | np.ndarray,
    trials: int,
    seed,
) -> float:
    """Monte-Carlo lower estimate of the small-ball probability.

    For each probe direction, draws fresh input blocks, evolves the
    restarted state over one block (its law does not depend on the offset
    or the sampled time, both kept for interface fidelity), stacks it with
    a fresh input, and estimates the probability that the projection
    clears the threshold in absolute value.  Returns the minimum estimate
    over the directions.  Each direction uses an independent substream.
    """
    stride = check_index(stride, "stride", minimum=1)
    check_index(offset, "offset", minimum=0)
    if offset >= stride:
        raise ValueError("offset must be < stride")
    trials = check_index(trials, "trials", minimum=1000)
    dim = params.n + params.p
    root = np.random.SeedSequence(seed)
    if isinstance(directions, (int, np.integer)):
        count = check_index(directions, "directions", minimum=1)
        dir_seed, *sub = root.spawn(count + 1)
        W = as_rng(dir_seed).standard_normal((count, dim))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
    else:
        W = np.asarray(directions, dtype=float)
        if W.ndim == 1:
            W = W[np.newaxis, :]
        if W.shape[1] != dim:
            raise ValueError(f"directions must have stacked dimension {dim}")
        sub = root.spawn(W.shape[0])

    min_prob = 1.0
    for w, child in zip(W, sub):
        rng = as_rng(child)
        x = np.zeros((trials, params.n))
        for _ in range(stride - 1):
            u = sample_inputs_for_probe(model, params.p, trials, rng)
            x = _grad_rows(potential, x @ params.A_star.T + u @ params.B_star.T)
        u_last = sample_inputs_for_probe(model, params.p, trials, rng)
        proj = x @ w[: params.n] + params.beta * (u_last @ w[params.n :])
        min_prob = min(min_prob, float(np.mean(np.abs(proj) >= threshold)))
    return min_prob


def sample_inputs_for_probe(model: InputModel, p: int, count: int, rng) -> np.ndarray:
    """Input draws from an existing generator (probe hot path)."""
    draws = rng.standard_normal((count, p))
    if model.law == LAW_CUBED_GAUSSIAN:
        draws = draws**3
        if model.normalize_isotropic:
            draws /= CUBED_GAUSSIAN_SCALE
    return draws


def input_norm_quantile_probe(
    params: SystemParams,
    model: InputModel,
    draws: int,
    gamma: float,
    seed,
    constant: float = 1.0,
) -> tuple[float, float]:
    """Empirical (1 - gamma) quantile of ||B u|| against the matrix
    Bernstein-style bound constant * ||B||_F * sqrt(log(2 (p+1) / gamma)).

    Returned as (empirical quantile, bound); the comparison is a calibrated
    regression check, not a theorem.
    """
    draws = check_index(draws, "draws", minimum=100)
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    rng = as_rng(seed)
    u = sample_inputs_for_probe(model, params.p, draws, rng)
    norms = np.sort(np.linalg.norm(u @ params.B_star.T, axis=1))
    rank = min(draws, max(1, math.ceil((1.0 - gamma) * draws)))
    empirical = float(norms[rank - 1])
    bound = constant * float(np.linalg.norm(params.B_star)) * math.sqrt(
        math.log(2.0 * (params.p + 1) / gamma)
    )
    return empirical, bound


def theory_report(
    params: SystemParams,
    potential: ConvexPotential,
    model: InputModel,
    T: int,
    delta: float = 0.05,
    stride_constant: float = 1.0,
    horizon_constant: float = 1.0,
) -> TheoryReport:
    """Full report: coherence statistics plus threshold, stride and horizon
    bounds where they are defined; notes record any undefined pieces."""
    report = coherence_report(params, potential)
    report.delta = delta
    report.stride_constant = stride_constant
    report.horizon_constant = horizon_constant
    report.fourth_moment = model.fourth_moment
    report.threshold_valid = potential.defect < potential.strong_convexity
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report.threshold = small_ball_threshold(params, potential, model)
    except ValueError as exc:
        report.notes.append(f"threshold unavailable: {exc}")
        return report
    if not report.threshold_valid:
        report.notes.append(
            "defect >= strong convexity: threshold computed but vacuous"
        )
    try:
        report.stride_min = stride_bound(
            params, potential, T, delta, report.threshold, stride_constant
        )
    except InfeasibleBoundError as exc:
        report.notes.append(f"stride bound unavailable: {exc}")
        return report
    moment = model.fourth_moment if model.fourth_moment is not None else 3.0
    report.horizon_min = horizon_bound(
        params.n, params.p, report.stride_min, delta, moment, horizon_constant
    )
    return report
