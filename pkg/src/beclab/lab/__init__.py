from .config import ConfigError, ExperimentConfig, parse_file, parse_text
from .experiments import report, run, run_sweep
from .snapshot import SnapshotError, load_snapshot, save_snapshot

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_file",
    "parse_text",
    "run",
    "run_sweep",
    "report",
    "save_snapshot",
    "load_snapshot",
    "SnapshotError",
]
