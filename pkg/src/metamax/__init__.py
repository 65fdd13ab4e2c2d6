"""Multi-start allocation strategies for local search (METAMAX family)."""

from .benchmarks import (
    BenchmarkSpec,
    SyntheticCurve,
    griewank_mod,
    griewank_objective,
    load_dataset,
    make_benchmark,
)
from .harness import (
    ExperimentConfig,
    emit_csv,
    instance_growth_report,
    load_config,
    run_experiment,
    verify_theorems,
)
from .core import InstanceState, Objective, RoundRecord, RunTrace, record_best
from .hull import HFunction, h_value, select_metamax, upper_hull_corners
from .strategies import StrategyConfig, luby_length, run_strategy

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec",
    "ExperimentConfig",
    "emit_csv",
    "instance_growth_report",
    "load_config",
    "run_experiment",
    "verify_theorems",
    "HFunction",
    "InstanceState",
    "Objective",
    "RoundRecord",
    "RunTrace",
    "StrategyConfig",
    "SyntheticCurve",
    "griewank_mod",
    "griewank_objective",
    "h_value",
    "load_dataset",
    "luby_length",
    "make_benchmark",
    "record_best",
    "run_strategy",
    "select_metamax",
    "upper_hull_corners",
]
