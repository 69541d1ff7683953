"""Experiment configuration: pydantic models with YAML round-tripping."""

from __future__ import annotations

from typing import Literal

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from .space import Dimension, SearchSpace
from .strategies import Budget, StrategyParams

STRATEGIES = ("fabolas", "ei", "es", "mtbo", "hyperband", "random")


class DimensionConfig(BaseModel):
    name: str
    lower: float
    upper: float
    log: bool = False

    @model_validator(mode="after")
    def _check_bounds(self):
        if not self.lower < self.upper:
            raise ValueError(f"dimension {self.name}: lower must be < upper")
        if self.log and self.lower <= 0:
            raise ValueError(f"dimension {self.name}: log scale needs lower > 0")
        return self


class SpaceConfig(BaseModel):
    dimensions: list[DimensionConfig] = Field(min_length=1)
    s_min: float = 1.0 / 128.0

    def build(self) -> SearchSpace:
        return SearchSpace(
            dims=tuple(Dimension(d.name, d.lower, d.upper, d.log) for d in self.dimensions),
            s_min=self.s_min,
        )


class ObjectiveConfig(BaseModel):
    kind: Literal["synthetic", "surrogate", "subprocess"] = "synthetic"
    surrogate_path: str | None = None
    command: str | None = None
    timeout_seconds: float = 3600.0

    @model_validator(mode="after")
    def _check_selector(self):
        if self.kind == "surrogate" and not self.surrogate_path:
            raise ValueError("surrogate objective needs surrogate_path")
        if self.kind == "subprocess" and not self.command:
            raise ValueError("subprocess objective needs command")
        return self


class BudgetConfig(BaseModel):
    total_seconds: float = Field(gt=0)
    mode: Literal["simulated", "wall"] = "simulated"

    def build(self) -> Budget:
        return Budget(total_seconds=self.total_seconds, mode=self.mode)


class StrategyParamsConfig(BaseModel):
    n_init: int = 10
    init_subset_sizes: list[float] = [1 / 64, 1 / 32, 1 / 16, 1 / 8]
    n_init_vanilla: int = 5
    n_init_mtbo: int = 6
    n_walkers: int = 20
    n_mcmc_samples: int = 20
    burn_in: int = 100
    n_rep: int = 50
    n_draws: int = 500
    n_fantasies: int = 10
    direct_evals: int = 200
    cma_popsize: int = 10
    cma_generations: int = 20
    max_evaluations: int | None = None
    overhead_charge: float | None = 0.0

    def build(self) -> StrategyParams:
        data = self.model_dump()
        data["init_subset_sizes"] = tuple(data["init_subset_sizes"])
        return StrategyParams(**data)


class ExperimentConfig(BaseModel):
    space: SpaceConfig
    strategy: str
    params: StrategyParamsConfig = StrategyParamsConfig()
    objective: ObjectiveConfig = ObjectiveConfig()
    budget: BudgetConfig
    seeds: list[int] = Field(min_length=1)
    output_dir: str = "."
    aux_sizes: list[float] = [0.25]  # mtbo only
    hyperband_max_resource: float = 81.0
    hyperband_eta: float = 3.0

    @field_validator("strategy")
    @classmethod
    def _known_strategy(cls, v):
        if v not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        return v


def config_to_yaml(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(), sort_keys=True)


def config_from_yaml(text: str) -> ExperimentConfig:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError("config must be a mapping")
    return ExperimentConfig.model_validate(data)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_yaml(fh.read())
