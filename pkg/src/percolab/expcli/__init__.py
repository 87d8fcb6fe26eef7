from .config import ConfigError, ExperimentConfig, load
from .experiments import RUNNERS, ExperimentResult, derive_seed

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentResult", "RUNNERS", "derive_seed", "load"]
