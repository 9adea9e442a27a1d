"""Seeded trial grids, quantile aggregation, and result persistence.

One experiment runs ``trials`` independent instances of a configured cell
(dimensions, spectral scale, leaky-ReLU slope, input law), records each
trial's per-iteration relative error against the ground truth, and
aggregates nearest-rank quantiles across trials.  Results round-trip
through a small directory of JSON and CSV files.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import simulate
from .estimator import SolverConfig, agm_solve
from .exceptions import ConfigError
from .models import (
    LAW_CUBED_GAUSSIAN,
    LAW_GAUSSIAN,
    input_model_from_spec,
    sample_inputs,
    sample_system,
)
from .potentials import leaky_relu
from .theory import TheoryReport, theory_report

GRID_SPECTRAL_ALPHAS = (0.2, 0.8)
GRID_RHOS = (1.0, 0.5, 0.3, 0.0)

#: Named presets: ``quick`` is the desk-scale acceptance profile (reduced
#: trial count, restarted solver); ``paper`` mirrors the published protocol.
PROFILES = {
    "quick": {
        "n": 20,
        "p": 40,
        "T": 300,
        "trials": 20,
        "solver": {
            "step_size": 4e-3,
            "max_iterations": 2000,
            "stop_tol": 1e-8,
            "restart": "gradient",
            "mean_normalize": True,
        },
    },
    "paper": {
        "n": 50,
        "p": 100,
        "T": 500,
        "trials": 100,
        "solver": {
            "step_size": 1e-3,
            "max_iterations": 500,
            "stop_tol": 1e-8,
            "restart": "none",
            "mean_normalize": True,
        },
    },
}

#: Published step size for the heavy-tailed input law.
HEAVY_TAIL_STEP = 1e-4


@dataclass
class ExperimentConfig:
    n: int = 20
    p: int = 40
    T: int = 300
    spectral_alpha: float = 0.2
    rho: float = 1.0
    input_law: str = LAW_GAUSSIAN
    normalize_isotropic: bool = True
    trials: int = 20
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: str | None = None

    def validate(self) -> "ExperimentConfig":
        if min(self.n, self.p, self.T) < 1:
            raise ConfigError("n, p and T must be positive")
        if not 0.0 < self.spectral_alpha < 1.0:
            raise ConfigError("spectral_alpha must lie in (0, 1)")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [0, 1]")
        if self.input_law not in (LAW_GAUSSIAN, LAW_CUBED_GAUSSIAN):
            raise ConfigError(f"unknown input_law {self.input_law!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        return self

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "T": self.T,
            "spectral_alpha": self.spectral_alpha,
            "rho": self.rho,
            "input_law": self.input_law,
            "normalize_isotropic": self.normalize_isotropic,
            "trials": self.trials,
            "seed": self.seed,
            "solver": self.solver.to_dict(),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls().to_dict()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "solver" in kwargs and kwargs["solver"] is not None:
            try:
                kwargs["solver"] = SolverConfig.from_dict(kwargs["solver"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid solver config: {exc}") from exc
        else:
            kwargs.pop("solver", None)
        try:
            config = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return config.validate()

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def apply_profile(config: ExperimentConfig, profile: str) -> ExperimentConfig:
    """Overlay a named preset onto a config (dimensions, trials, solver)."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    preset = PROFILES[profile]
    solver_kwargs = dict(preset["solver"])
    if profile == "paper" and config.input_law == LAW_CUBED_GAUSSIAN:
        solver_kwargs["step_size"] = HEAVY_TAIL_STEP
    return replace(
        config,
        n=preset["n"],
        p=preset["p"],
        T=preset["T"],
        trials=preset["trials"],
        solver=SolverConfig(**solver_kwargs),
    ).validate()


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    final_rel_error: float
    iterations_used: int
    converged: bool
    diverged: bool


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    median: np.ndarray
    q10: np.ndarray
    q90: np.ndarray
    trial_records: list[TrialRecord]
    theory: TheoryReport | None
    elapsed_seconds: float


def nearest_rank_quantile(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: the ceil(q m)-th smallest of m values."""
    ordered = np.sort(np.asarray(values, dtype=float))
    m = ordered.shape[0]
    if m == 0:
        raise ValueError("quantile of empty sample")
    rank = min(m, max(1, math.ceil(q * m)))
    return float(ordered[rank - 1])


def _padded_history(history: np.ndarray, length: int) -> np.ndarray:
    """Pad a stopped trial's history with its final value so per-iteration
    quantiles stay defined across trials."""
    out = np.empty(length)
    k = min(len(history), length)
    out[:k] = history[:k]
    if k < length:
        out[k:] = history[k - 1] if k > 0 else np.nan
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all trials of one cell and aggregate quantile curves.

    Each trial draws a fresh system and input sequence from a spawned
    substream, simulates, and solves with the ground truth as reference.
    Divergence is recorded per trial, never fatal.  Deterministic: the same
    config reproduces identical results bit for bit.
    """
    config.validate()
    t_start = time.perf_counter()
    potential = leaky_relu(config.rho)
    model = input_model_from_spec(
        {"law": config.input_law, "normalize_isotropic": config.normalize_isotropic}
    )
    max_iter = config.solver.max_iterations
    histories = np.empty((config.trials, max_iter))
    records = []
    last_params = None
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        params = sample_system(config.n, config.p, config.spectral_alpha, potential, rng)
        inputs = sample_inputs(model, config.p, config.T, rng)
        traj = simulate(params, potential, inputs, config.T)
        run = agm_solve(traj, potential, config.solver, reference_C=params.C_star)
        histories[i] = _padded_history(run.history, max_iter)
        records.append(
            TrialRecord(
                trial=i,
                final_rel_error=float(run.history[-1]) if len(run.history) else float("nan"),
                iterations_used=run.iterations_used,
                converged=run.converged,
                diverged=run.diverged,
            )
        )
        last_params = params

    median = np.array([nearest_rank_quantile(histories[:, j], 0.5) for j in range(max_iter)])
    q10 = np.array([nearest_rank_quantile(histories[:, j], 0.1) for j in range(max_iter)])
    q90 = np.array([nearest_rank_quantile(histories[:, j], 0.9) for j in range(max_iter)])

    theory = theory_report(last_params, potential, model, config.T)
    elapsed = time.perf_counter() - t_start
    return ExperimentResult(
        config=config,
        median=median,
        q10=q10,
        q90=q90,
        trial_records=records,
        theory=theory,
        elapsed_seconds=elapsed,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".12e")


def write_results(result: ExperimentResult, output_dir) -> list[Path]:
    """Persist one experiment: config echo, quantile curves, per-trial
    rows, and the theory report.  Returns the written paths."""
    if not str(output_dir):
        raise ValueError("output_dir must be a non-empty path")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    config_path = out / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(result.config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(config_path)

    quantiles_path = out / "quantiles.csv"
    with open(quantiles_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,median,q10,q90\n")
        for j in range(len(result.median)):
            fh.write(
                f"{j + 1},{_fmt(result.median[j])},{_fmt(result.q10[j])},{_fmt(result.q90[j])}\n"
            )
    written.append(quantiles_path)

    trials_path = out / "trials.csv"
    with open(trials_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("trial,final_rel_error,iterations_used,converged,diverged\n")
        for rec in result.trial_records:
            fh.write(
                f"{rec.trial},{_fmt(rec.final_rel_error)},{rec.iterations_used},"
                f"{int(rec.converged)},{int(rec.diverged)}\n"
            )
    written.append(trials_path)

    theory_path = out / "theory.json"
    with open(theory_path, "w", encoding="utf-8") as fh:
        payload = result.theory.to_dict() if result.theory is not None else {}
        payload["elapsed_seconds"] = result.elapsed_seconds
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(theory_path)
    return written


def cell_name(input_law: str, spectral_alpha: float, rho: float) -> str:
    return f"{input_law}_alpha{spectral_alpha:g}_rho{rho:g}"


def _cell_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(base_seed, index)).generate_state(1)[0])


def grid_configs(
    input_law: str,
    base_seed: int = 0,
    trials: int | None = None,
    profile: str = "quick",
) -> list[tuple[str, ExperimentConfig]]:
    """The eight (spectral scale, slope) cells of the simulation protocol
    for one input law, in the row-major panel order of the figures."""
    cells = []
    index = 0
    for rho in GRID_RHOS:
        for alpha in GRID_SPECTRAL_ALPHAS:
            config = ExperimentConfig(
                spectral_alpha=alpha,
                rho=rho,
                input_law=input_law,
                seed=_cell_seed(base_seed, index),
            )
            config = apply_profile(config, profile)
            if trials is not None:
                config = replace(config, trials=trials).validate()
            cells.append((cell_name(input_law, alpha, rho), config))
            index += 1
    return cells


def run_grid(
    input_law: str,
    output_dir,
    base_seed: int = 0,
    trials: int | None = None,
    profile: str = "quick",
) -> list[Path]:
    """Run the full grid and write one subdirectory per cell plus a
    manifest listing the panel layout."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    written = []
    for name, config in grid_configs(input_law, base_seed, trials, profile):
        result = run_experiment(config)
        cell_dir = out / name
        written.extend(write_results(result, cell_dir))
        manifest.append(
            {
                "cell": name,
                "spectral_alpha": config.spectral_alpha,
                "rho": config.rho,
                "quantiles_csv": str(Path(name) / "quantiles.csv"),
            }
        )
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump({"input_law": input_law, "cells": manifest}, fh, indent=2)
        fh.write("\n")
    written.append(manifest_path)
    return written
