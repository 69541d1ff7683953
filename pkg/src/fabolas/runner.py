"""Experiment execution: turn a validated config into record files on disk."""

from __future__ import annotations

import os

from .benchmarks import (
    TabularSurrogate,
    subprocess_eval,
    surrogate_eval,
    synthetic_mf_eval,
)
from .config import ExperimentConfig
from .records import RecordWriter, record_filename
from .strategies import (
    ExperimentRecord,
    run_fabolas,
    run_hyperband,
    run_mtbo,
    run_random_search,
    run_vanilla_bo,
)


def build_objective(config: ExperimentConfig):
    """Callable (x_raw, s, seed) -> ObjectiveResult for the configured source."""
    obj = config.objective
    if obj.kind == "synthetic":
        return synthetic_mf_eval
    if obj.kind == "surrogate":
        table = TabularSurrogate.load(obj.surrogate_path)
        return lambda x, s, seed: surrogate_eval(table, x, s, seed)
    names = [d.name for d in config.space.dimensions]
    return lambda x, s, seed: subprocess_eval(
        obj.command, x, s, obj.timeout_seconds, names, seed
    )


def run_seed(config: ExperimentConfig, seed: int, on_row=None) -> ExperimentRecord:
    """Run the configured strategy for one seed."""
    space = config.space.build()
    budget = config.budget.build()
    params = config.params.build()
    objective = build_objective(config)
    name = config.strategy
    if name == "fabolas":
        return run_fabolas(objective, space, budget, params, seed, on_row)
    if name in ("ei", "es"):
        return run_vanilla_bo(name, objective, space, budget, params, seed, on_row)
    if name == "mtbo":
        return run_mtbo(
            objective, space, budget, tuple(config.aux_sizes), params, seed, on_row
        )
    if name == "hyperband":
        return run_hyperband(
            objective,
            space,
            config.hyperband_max_resource,
            config.hyperband_eta,
            budget,
            seed,
            params,
            on_row,
        )
    return run_random_search(objective, space, budget, seed, params, on_row)


def run_experiment(config: ExperimentConfig) -> list[str]:
    """Run every configured seed, appending rows to one record file per seed
    as they are produced. Returns the written file paths."""
    os.makedirs(config.output_dir, exist_ok=True)
    paths = []
    for seed in config.seeds:
        path = os.path.join(
            config.output_dir, record_filename(config.strategy, seed)
        )
        if os.path.exists(path):
            os.remove(path)
        with RecordWriter(path) as writer:
            run_seed(config, seed, on_row=writer.write_row)
        paths.append(path)
    return paths
