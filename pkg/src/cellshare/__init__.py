"""Multi-cell downlink simulator with DQN agents that share replay
experiences selectively, gated by measured inter-cell interference."""

__version__ = "0.1.0"

from .config import (NetworkConfig, OracleConfig, RunConfig, SharingConfig,
                     TrainingConfig, default_config, load_config,
                     parse_config, validate_config)
from .errors import (CellshareError, ConfigError, ContractViolation,
                     MeasurementError, SearchSpaceError, TrainingFault)
from .training import RunArtifacts, evaluate, run_training

__all__ = [
    "__version__",
    "NetworkConfig", "TrainingConfig", "SharingConfig", "OracleConfig",
    "RunConfig", "default_config", "load_config", "parse_config",
    "validate_config",
    "CellshareError", "ConfigError", "ContractViolation", "MeasurementError",
    "SearchSpaceError", "TrainingFault",
    "RunArtifacts", "run_training", "evaluate",
]
