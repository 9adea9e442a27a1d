"""Command-line entry points.

Subcommands: ``run`` one configured experiment, ``theory`` to print the
theoretical report for a configured system, ``grid`` to sweep the full
simulation grid for one input law.  Exit codes: 0 success, 1 configuration
error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .exceptions import ConfigError
from .experiments import (
    ExperimentConfig,
    apply_profile,
    run_experiment,
    run_grid,
    write_results,
)
from .models import LAW_CUBED_GAUSSIAN, LAW_GAUSSIAN, input_model_from_spec, sample_system
from .potentials import leaky_relu
from .theory import theory_report

_LAW_ALIASES = {"gaussian": LAW_GAUSSIAN, "heavy": LAW_CUBED_GAUSSIAN}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvxsysid",
        description="Convex-program identification of nonlinear recurrent dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to the JSON config")
    run_p.add_argument("--trials", type=int, default=None, help="override trial count")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument("--out", default=None, help="override output directory")
    run_p.add_argument(
        "--profile", choices=["quick", "paper"], default=None,
        help="overlay a named preset (dimensions, trials, solver) on the config",
    )

    theory_p = sub.add_parser("theory", help="print the theory report for a config")
    theory_p.add_argument("--config", required=True)

    grid_p = sub.add_parser("grid", help="run the full 8-cell simulation grid")
    grid_p.add_argument("--model", choices=sorted(_LAW_ALIASES), required=True)
    grid_p.add_argument("--out", required=True)
    grid_p.add_argument("--seed", type=int, default=0)
    grid_p.add_argument("--trials", type=int, default=None)
    grid_p.add_argument("--profile", choices=["quick", "paper"], default="quick")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json_file(args.config)
    if getattr(args, "profile", None):
        config = apply_profile(config, args.profile)
    overrides = {}
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    if overrides:
        config = replace(config, **overrides)
    return config.validate()


def _cmd_run(args) -> int:
    config = _load_config(args)
    if not config.output_dir:
        raise ConfigError("an output directory is required (config output_dir or --out)")
    result = run_experiment(config)
    paths = write_results(result, config.output_dir)
    finals = [rec.final_rel_error for rec in result.trial_records]
    print(f"wrote {len(paths)} files to {config.output_dir}")
    print(f"median final relative error: {min(sorted(finals)[len(finals) // 2], float('inf')):.3e}")
    return 0


def _cmd_theory(args) -> int:
    config = _load_config(args)
    potential = leaky_relu(config.rho)
    model = input_model_from_spec(
        {"law": config.input_law, "normalize_isotropic": config.normalize_isotropic}
    )
    params = sample_system(config.n, config.p, config.spectral_alpha, potential, config.seed)
    report = theory_report(params, potential, model, config.T)
    json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_grid(args) -> int:
    law = _LAW_ALIASES[args.model]
    paths = run_grid(law, args.out, base_seed=args.seed, trials=args.trials, profile=args.profile)
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "theory":
            return _cmd_theory(args)
        return _cmd_grid(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
