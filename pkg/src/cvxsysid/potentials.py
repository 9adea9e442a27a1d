"""Convex potentials whose gradients act as the recurrent nonlinearity.

Every potential carries two-sided curvature moduli (``strong_convexity``,
``smoothness``), a linearization ``defect`` and a matrix-valued local map
approximating symmetrized gradient differences.  Three families are
implemented: quadratic forms, the two-slope piecewise quadratic whose
gradient is a parameterized ReLU, and the leaky-ReLU family used by the
simulation protocol (a reparameterization of the two-slope family).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, as_rng, as_vector, check_index
from .exceptions import UnsupportedPotentialError

KIND_QUADRATIC = "quadratic"
KIND_PARAM_RELU = "param_relu"
KIND_LEAKY_RELU = "leaky_relu"


@dataclass(frozen=True)
class ConvexPotential:
    """Immutable description of one convex potential.

    ``strong_convexity`` and ``smoothness`` are the lower and upper
    curvature moduli; ``defect`` bounds the error of the local
    linearization map.  ``assumption_violating`` marks potentials that are
    constructible and simulatable but fall outside the recovery theory
    (zero strong convexity).
    """

    kind: str
    strong_convexity: float
    smoothness: float
    defect: float
    quad_matrix: np.ndarray | None = None
    rho: float | None = None
    assumption_violating: bool = field(default=False)

    def __post_init__(self):
        if self.kind not in (KIND_QUADRATIC, KIND_PARAM_RELU, KIND_LEAKY_RELU):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.strong_convexity < 0 or self.smoothness < self.strong_convexity:
            raise ValueError(
                "curvature moduli must satisfy 0 <= strong_convexity <= smoothness"
            )

    @property
    def separable(self) -> bool:
        return self.kind != KIND_QUADRATIC

    @property
    def invertible_gradient(self) -> bool:
        return self.strong_convexity > 0.0


def quadratic(matrix) -> ConvexPotential:
    """Potential ``x -> x' Q x / 2`` for a symmetric PSD matrix ``Q``."""
    Q = as_matrix(matrix, "matrix")
    if Q.shape[0] != Q.shape[1]:
        raise ValueError(f"matrix must be square, got {Q.shape}")
    if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, float(np.abs(Q).max()))):
        raise ValueError("matrix must be symmetric")
    eigs = np.linalg.eigvalsh((Q + Q.T) / 2.0)
    lo, hi = float(eigs[0]), float(eigs[-1])
    if lo < -1e-12 * max(1.0, hi):
        raise ValueError("matrix must be positive semidefinite")
    lo = max(lo, 0.0)
    return ConvexPotential(
        kind=KIND_QUADRATIC,
        strong_convexity=lo,
        smoothness=hi,
        defect=0.0,
        quad_matrix=Q.copy(),
        assumption_violating=(lo == 0.0),
    )


def param_relu(lambda_lo: float, lambda_hi: float) -> ConvexPotential:
    """Two-slope piecewise quadratic; its gradient is the parameterized ReLU
    with negative-branch slope ``lambda_lo`` and positive-branch slope
    ``lambda_hi``."""
    lo, hi = float(lambda_lo), float(lambda_hi)
    if not (0.0 <= lo <= hi) or hi <= 0.0:
        raise ValueError("need 0 <= lambda_lo <= lambda_hi with lambda_hi > 0")
    return ConvexPotential(
        kind=KIND_PARAM_RELU,
        strong_convexity=lo,
        smoothness=hi,
        defect=(hi - lo) / 2.0,
        assumption_violating=(lo == 0.0),
    )


def leaky_relu(rho: float) -> ConvexPotential:
    """Leaky-ReLU potential with negative-branch slope ``rho`` in [0, 1].

    Canonicalized to the two-slope family with slopes (rho, 1): the math is
    identical and a single code path serves both.  ``rho = 0`` (pure ReLU)
    is constructible but flagged as assumption violating.
    """
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return ConvexPotential(
        kind=KIND_LEAKY_RELU,
        strong_convexity=rho,
        smoothness=1.0,
        defect=(1.0 - rho) / 2.0,
        rho=rho,
        assumption_violating=(rho == 0.0),
    )


def to_spec(potential: ConvexPotential) -> dict:
    """JSON-serializable specification, inverse of :func:`from_spec`."""
    if potential.kind == KIND_QUADRATIC:
        return {"kind": KIND_QUADRATIC, "params": {"matrix": potential.quad_matrix.tolist()}}
    if potential.kind == KIND_LEAKY_RELU:
        return {"kind": KIND_LEAKY_RELU, "params": {"rho": potential.rho}}
    return {
        "kind": KIND_PARAM_RELU,
        "params": {
            "lambda_lo": potential.strong_convexity,
            "lambda_hi": potential.smoothness,
        },
    }


def from_spec(spec: dict) -> ConvexPotential:
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == KIND_QUADRATIC:
        return quadratic(np.asarray(params["matrix"], dtype=float))
    if kind == KIND_LEAKY_RELU:
        return leaky_relu(params["rho"])
    if kind == KIND_PARAM_RELU:
        return param_relu(params["lambda_lo"], params["lambda_hi"])
    raise ValueError(f"unknown potential kind {kind!r}")


# -- evaluation ---------------------------------------------------------

def _grad_rows(potential: ConvexPotential, V: np.ndarray) -> np.ndarray:
    """Gradient applied row-wise to a (m, n) array.  No validation."""
    if potential.kind == KIND_QUADRATIC:
        return V @ potential.quad_matrix
    a = (potential.smoothness + potential.strong_convexity) / 2.0
    b = (potential.smoothness - potential.strong_convexity) / 2.0
    return a * V + b * np.abs(V)


def _value_rows(potential: ConvexPotential, V: np.ndarray) -> np.ndarray:
    """Potential value per row of a (m, n) array.  No validation."""
    if potential.kind == KIND_QUADRATIC:
        return 0.5 * np.einsum("ij,ij->i", V, V @ potential.quad_matrix)
    slope = np.where(V > 0, potential.smoothness, potential.strong_convexity)
    return 0.5 * np.einsum("ij,ij->i", slope * V, V)


def grad_eval(potential: ConvexPotential, x) -> tuple[float, np.ndarray]:
    """Evaluate the potential and its gradient at ``x``.

    Returns ``(value, gradient)``.  Raises ``ValueError`` on non-finite
    input.
    """
    x = as_vector(x, "x")
    row = x[np.newaxis, :]
    return float(_value_rows(potential, row)[0]), _grad_rows(potential, row)[0]


def local_map(potential: ConvexPotential, x) -> np.ndarray:
    """Matrix approximating symmetrized gradient differences around ``x``.

    Constant for quadratics; diagonal with branch-dependent entries for the
    separable families, using the convention sign(0) = 0.
    """
    x = as_vector(x, "x")
    if potential.kind == KIND_QUADRATIC:
        if potential.quad_matrix.shape[0] != x.shape[0]:
            raise ValueError("dimension mismatch between potential and x")
        return potential.quad_matrix.copy()
    a = (potential.smoothness + potential.strong_convexity) / 2.0
    b = (potential.smoothness - potential.strong_convexity) / 2.0
    return np.diag(a + b * np.sign(x))


def _local_map_rows(potential: ConvexPotential, X: np.ndarray) -> np.ndarray:
    """Diagonals of the local map at each row of ``X`` (separable kinds)."""
    a = (potential.smoothness + potential.strong_convexity) / 2.0
    b = (potential.smoothness - potential.strong_convexity) / 2.0
    return a + b * np.sign(X)


def _conjugate_rows(potential: ConvexPotential, Y: np.ndarray) -> np.ndarray:
    if not potential.invertible_gradient:
        raise UnsupportedPotentialError(
            "gradient is not invertible (zero strong convexity); "
            "the conjugate gradient is undefined"
        )
    if potential.kind == KIND_QUADRATIC:
        return np.linalg.solve(potential.quad_matrix, Y.T).T
    return np.where(Y > 0, Y / potential.smoothness, Y / potential.strong_convexity)


def conjugate_grad(potential: ConvexPotential, y) -> np.ndarray:
    """Gradient of the convex conjugate: the unique ``x`` with grad(x) = y."""
    y = as_vector(y, "y")
    return _conjugate_rows(potential, y[np.newaxis, :])[0]


# -- regularity verification -------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Worst-case slacks of the curvature and linearization inequalities
    over a random sample.  All slacks nonnegative (up to round-off) means
    the inequalities hold on every sampled pair."""

    sample_count: int
    curvature_lower_slack: float
    curvature_upper_slack: float
    linearization_slack: float
    map_lower_slack: float
    map_upper_slack: float

    def worst(self) -> float:
        return min(
            self.curvature_lower_slack,
            self.curvature_upper_slack,
            self.linearization_slack,
            self.map_lower_slack,
            self.map_upper_slack,
        )

    def passed(self, tol: float = -1e-12) -> bool:
        return self.worst() >= tol


def verify_regularity(
    potential: ConvexPotential,
    sample_count: int,
    dimension: int,
    seed,
) -> RegularityReport:
    """Check the two-sided curvature bounds, the linearization bound with
    the potential's defect, and the induced bounds on the local map, on
    ``sample_count`` random point pairs spanning several magnitudes."""
    sample_count = check_index(sample_count, "sample_count", minimum=1)
    dimension = check_index(dimension, "dimension", minimum=1)
    if potential.kind == KIND_QUADRATIC and potential.quad_matrix.shape[0] != dimension:
        raise ValueError("dimension must match the quadratic matrix size")
    rng = as_rng(seed)

    scales = 10.0 ** rng.uniform(-2.0, 1.5, size=(sample_count, 1))
    X = rng.standard_normal((sample_count, dimension)) * scales
    Y = rng.standard_normal((sample_count, dimension)) * scales

    lam = potential.strong_convexity
    smooth = potential.smoothness
    defect = potential.defect

    fX = _value_rows(potential, X)
    fY = _value_rows(potential, Y)
    gX = _grad_rows(potential, X)
    diff = Y - X
    gap = fY - fX - np.einsum("ij,ij->i", gX, diff)
    dist2 = np.einsum("ij,ij->i", diff, diff)
    scale = np.maximum(1.0, np.abs(fX) + np.abs(fY))
    curvature_lower = float(np.min((gap - 0.5 * lam * dist2) / scale))
    curvature_upper = float(np.min((0.5 * smooth * dist2 - gap) / scale))

    half_sym = 0.5 * (_grad_rows(potential, X + Y) - _grad_rows(potential, X - Y))
    if potential.kind == KIND_QUADRATIC:
        mapped = Y @ potential.quad_matrix
    else:
        mapped = _local_map_rows(potential, X) * Y
    resid = np.linalg.norm(half_sym - mapped, axis=1)
    ynorm = np.linalg.norm(Y, axis=1)
    yscale = np.maximum(1.0, ynorm)
    linearization = float(np.min((defect * ynorm - resid) / yscale))

    mapped_norm = np.linalg.norm(mapped, axis=1)
    map_lower = float(np.min((mapped_norm - (lam - defect) * ynorm) / yscale))
    map_upper = float(np.min(((smooth + defect) * ynorm - mapped_norm) / yscale))

    return RegularityReport(
        sample_count=sample_count,
        curvature_lower_slack=curvature_lower,
        curvature_upper_slack=curvature_upper,
        linearization_slack=linearization,
        map_lower_slack=map_lower,
        map_upper_slack=map_upper,
    )
