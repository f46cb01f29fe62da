from .checkpoint import (
    CheckpointError,
    checkpoint_info,
    restore_checkpoint,
    save_checkpoint,
)
from .config import ConfigError, ENVIRONMENTS, ExperimentConfig
from .metrics import MetricsWriter, read_metrics, schema
from .plotdata import PlotDataError, plot_data
from .runner import RunResult, run_experiment

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ENVIRONMENTS",
    "ExperimentConfig",
    "MetricsWriter",
    "PlotDataError",
    "RunResult",
    "checkpoint_info",
    "plot_data",
    "read_metrics",
    "restore_checkpoint",
    "run_experiment",
    "save_checkpoint",
    "schema",
]
