"""
Command Line Entry Point
Data generation, training, evaluation, simulation, sweeps and config validation
"""

import argparse
import json
import os
import sys
import time
from typing import List, Optional

import numpy as np
from loguru import logger

from phsysid import __version__
from phsysid.core.errors import ConfigError, PhsysidError
from phsysid.core.logging_setup import add_progress_sink, configure_logging
from phsysid.core.settings import get_settings
from phsysid.dynamics import generate_dataset, load_dataset, make_benchmark, save_dataset
from phsysid.dynamics.types import Dataset
from phsysid.experiments import (
    ExperimentConfig,
    apply_budget,
    apply_overrides,
    emit_report,
    evaluate_model,
    fit_model,
    integrator_sweep,
    load_config,
    preset,
    reg_prune_sweep,
    reg_separation_sweep,
    run_experiment,
    save_config,
    validate_config,
)
from phsysid.experiments.config import BUDGETS, MODEL_KINDS, PRESETS
from phsysid.integrators import SCHEMES, reference_simulate
from phsysid.models import load_model, save_model


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Experiment config (JSON)")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Named experiment preset")
    parser.add_argument("--integrator", choices=sorted(SCHEMES), help="Scheme used in the training loss")
    parser.add_argument("--seed", type=int, help="Seed for data generation and training")
    parser.add_argument("--budget", choices=BUDGETS, help="paper or desk (n_traj and epochs / 5)")
    parser.add_argument("--sigma", type=float, help="Noise standard deviation")
    parser.add_argument("--model", choices=MODEL_KINDS, help="Model kind")
    parser.add_argument("--out", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phsysid", description="Pseudo-Hamiltonian system identification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Simulate and store a training dataset")
    _add_common(p)

    p = sub.add_parser("train", help="Fit a model and store it with its history")
    _add_common(p)
    p.add_argument("--data", help="Dataset CSV written by generate (default: simulate)")

    p = sub.add_parser("evaluate", help="Evaluate a stored model")
    _add_common(p)
    p.add_argument("--model-path", required=True, help="Model JSON written by train")

    p = sub.add_parser("simulate", help="Simulate the true system or a stored model")
    _add_common(p)
    p.add_argument("--model-path", help="Simulate this model instead of the true system")
    p.add_argument("--x0", type=float, nargs="+", help="Initial state (default: the preset example)")
    p.add_argument("--t-end", type=float, help="Horizon (default: evaluation horizon)")
    p.add_argument("--dt", type=float, help="Output spacing (default: evaluation spacing)")

    p = sub.add_parser("sweep-integrators", help="Compare training integrators")
    _add_common(p)
    p.add_argument("--integrators", nargs="+", default=["euler", "midpoint", "rk4", "srk4"])
    p.add_argument("--n-traj", type=int, nargs="+", help="Dataset sizes (default: the config's)")
    p.add_argument("--noise-levels", type=float, nargs="+", help="Noise levels (default: the config's)")
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("sweep-reg", help="Regularization and pruning heatmaps")
    _add_common(p)
    p.add_argument("--lam", type=float, nargs="+", default=[0.0, 0.05, 0.5], help="lam_h values")
    p.add_argument("--prune", type=int, nargs="+", help="Pruning intervals")
    p.add_argument("--lam-f", type=float, nargs="+", help="lam_f values: run the H/force separation grid instead")
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("report", help="Run an experiment end to end and write its report")
    _add_common(p)

    p = sub.add_parser("validate", help="Check a config file and list every problem")
    p.add_argument("--config", required=True)
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Config from --config or --preset with command-line overrides applied"""
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        config = load_config(args.config)
        budget = args.budget
    elif args.preset:
        config = preset(args.preset)
        budget = args.budget or get_settings().budget
    else:
        raise ConfigError("one of --config or --preset is required")
    return apply_overrides(
        config, integrator=args.integrator, seed=args.seed, budget=budget, sigma=args.sigma, model=args.model
    )


def _out_dir(args, config: ExperimentConfig) -> str:
    return args.out or os.path.join(get_settings().output_dir, config.name)


def _dataset(config: ExperimentConfig, system) -> Dataset:
    d = config.data
    return generate_dataset(system, d.n_traj, d.t_end, d.dt, d.init_low, d.init_high, d.sigma, d.seed, d.substeps)


def cmd_generate(args) -> dict:
    config = resolve_config(args)
    resolved = apply_budget(config)
    dataset = _dataset(resolved, make_benchmark(resolved.system.name, resolved.system.params))
    path = os.path.join(_out_dir(args, config), "dataset.csv")
    save_dataset(dataset, path)
    return {"dataset": path, "n_traj": len(dataset.trajectories), "n_samples": dataset.n_samples}


def cmd_train(args) -> dict:
    config = resolve_config(args)
    resolved = apply_budget(config)
    system = make_benchmark(resolved.system.name, resolved.system.params)
    dataset = load_dataset(args.data) if args.data else _dataset(resolved, system)
    out = _out_dir(args, config)
    os.makedirs(out, exist_ok=True)
    sink = add_progress_sink(os.path.join(out, "progress.jsonl"))
    try:
        model, history = fit_model(resolved, system, dataset)
    finally:
        logger.remove(sink)
    save_model(model, os.path.join(out, "model.json"))
    save_config(config, os.path.join(out, "config.json"))
    result = {"model": os.path.join(out, "model.json")}
    if history is not None:
        history.save(os.path.join(out, "history.json"))
        result["final_loss"] = history.losses[-1]
    return result


def cmd_evaluate(args) -> dict:
    config = resolve_config(args)
    resolved = apply_budget(config)
    system = make_benchmark(resolved.system.name, resolved.system.params)
    started = time.perf_counter()
    report = evaluate_model(load_model(args.model_path), system, resolved, config.model)
    report.config = config.model_dump(mode="json")
    report.wall_clock = time.perf_counter() - started
    emit_report(report, _out_dir(args, config))
    return {"mean_error": report.errors["mean"], "n_blowups": report.errors["n_blowups"]}


def cmd_simulate(args) -> dict:
    config = resolve_config(args)
    system = make_benchmark(config.system.name, config.system.params)
    ev = config.evaluation
    if args.x0 is not None:
        x0 = np.asarray(args.x0, dtype=float)
    elif ev.example_init is not None:
        x0 = np.asarray(ev.example_init, dtype=float)
    else:
        x0 = np.random.default_rng(get_settings().default_seed).uniform(ev.init_low, ev.init_high, system.dimension)
    target = system
    if args.model_path:
        target = load_model(args.model_path).state_rhs
    traj = reference_simulate(target, x0, args.t_end or ev.t_end, args.dt or config.eval_dt, substeps=ev.substeps)
    dataset = Dataset(trajectories=[traj], noise_sigma=0.0, seed=0, system_name=system.name)
    path = os.path.join(_out_dir(args, config), "trajectory.csv")
    save_dataset(dataset, path)
    return {"trajectory": path, "n_points": len(traj)}


def cmd_sweep_integrators(args) -> dict:
    config = resolve_config(args)
    budgets = [{"n_traj": n} for n in args.n_traj] if args.n_traj else None
    started = time.perf_counter()
    report = integrator_sweep(config, args.integrators, budgets, args.noise_levels, args.seed, args.repeats)
    report.wall_clock = time.perf_counter() - started
    files = emit_report(report, _out_dir(args, config))
    return {"cells": len(report.cells), "files": len(files)}


def cmd_sweep_reg(args) -> dict:
    config = resolve_config(args)
    started = time.perf_counter()
    if args.lam_f:
        report = reg_separation_sweep(config, args.lam, args.lam_f, args.seed)
    else:
        prune = args.prune or [max(1, config.hyper.prune_interval)]
        report = reg_prune_sweep(config, args.lam, prune, args.epochs, args.seed)
    report.wall_clock = time.perf_counter() - started
    files = emit_report(report, _out_dir(args, config))
    return {"kind": report.kind, "files": len(files)}


def cmd_report(args) -> dict:
    config = resolve_config(args)
    out = _out_dir(args, config)
    os.makedirs(out, exist_ok=True)
    sink = add_progress_sink(os.path.join(out, "progress.jsonl"))
    try:
        report = run_experiment(config)
    finally:
        logger.remove(sink)
    files = emit_report(report, out)
    save_model(report.model, os.path.join(out, "model.json"))
    if report.history is not None:
        report.history.save(os.path.join(out, "history.json"))
    return {"mean_error": report.errors["mean"], "files": len(files)}


def cmd_validate(args) -> dict:
    result = validate_config(args.config)
    if not result["valid"]:
        raise ConfigError("; ".join(result["problems"]))
    return {"valid": True, "config": args.config}


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sweep-integrators": cmd_sweep_integrators,
    "sweep-reg": cmd_sweep_reg,
    "report": cmd_report,
    "validate": cmd_validate,
}


def _error_line(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Returns:
        0 on success, 1 on a package error, 2 on any other failure
    """
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        result = COMMANDS[args.command](args)
    except PhsysidError as exc:
        logger.error(f"{args.command} failed: {exc}")
        sys.stderr.write(_error_line(exc) + "\n")
        return 1
    except Exception as exc:
        logger.exception(f"{args.command} crashed")
        sys.stderr.write(_error_line(exc) + "\n")
        return 2
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
