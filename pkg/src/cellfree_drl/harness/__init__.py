"""Config-driven experiment driver emitting CSV files."""
from .commands import (cmd_compare, cmd_eval, cmd_sweep, cmd_train, compare_seed,
                       evaluate_agent, latest_checkpoint, train_seed)
from .config import ConfigError, EvalConfig, ExperimentConfig, load_config

__all__ = [
    "ConfigError", "EvalConfig", "ExperimentConfig", "cmd_compare", "cmd_eval", "cmd_sweep",
    "cmd_train", "compare_seed", "evaluate_agent", "latest_checkpoint", "load_config",
    "train_seed",
]
