"""Repo-wide numerical tolerances and run configuration."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-9
    psd: float = -1e-10  # minimum admissible eigenvalue
    coefficient_zero: float = 1e-10
    trace: float = 1e-9
    probability: float = 1e-9
    cptp: float = 1e-9
    lp_feasibility: float = 1e-9
    sep_residual: float = 1e-7
    sep_witness_psd: float = -1e-8
    sep_witness_span: float = 1e-8
    sep_witness_sum: float = 1e-7
    rank_one: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SolverBudgets:
    dykstra_iterations: int = 20_000
    dykstra_stall_window: int = 2_000
    seesaw_sweeps: int = 200
    seesaw_restarts: int = 8
    lp_max_iterations: int = 50_000


@dataclass(frozen=True)
class RunConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    budgets: SolverBudgets = field(default_factory=SolverBudgets)
    output_format: str = "json"
    seed: int = 20160523

    @classmethod
    def from_env(cls, **overrides) -> "RunConfig":
        """Build a config, letting ``CAUSALITY_KIT_SEED`` override the seed."""
        cfg = cls(**overrides)
        env_seed = os.environ.get("CAUSALITY_KIT_SEED")
        if env_seed is not None:
            cfg = dataclasses.replace(cfg, seed=int(env_seed))
        return cfg

    def with_tolerances(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(
            self, tolerances=dataclasses.replace(self.tolerances, **kwargs))
