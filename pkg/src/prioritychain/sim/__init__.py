"""Scenario simulator, synthetic data and experiment harness."""
from .config import BehaviorKind, BehaviorProfile, ScenarioConfig, load_config, parse_config
from .dataset import Dataset, accuracy, generate_dataset
from .metrics import MetricsRecord, write_metrics
from .simulator import SimResult, run_scenario

__all__ = [
    "BehaviorKind",
    "BehaviorProfile",
    "Dataset",
    "MetricsRecord",
    "ScenarioConfig",
    "SimResult",
    "accuracy",
    "generate_dataset",
    "load_config",
    "parse_config",
    "run_scenario",
    "write_metrics",
]
