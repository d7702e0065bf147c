"""
Configuration management for NehariLab.
"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from neharilab.config.schema import RunConfig
from neharilab.errors import ConfigError
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

# Default configuration: the worked example on the unit interval
DEFAULT_CONFIG = {
    "grid": {
        "dim": 1,
        "extents": [[0.0, 1.0]],
        "counts": [255],
    },
    "model": {
        "kind": "section5",
        "theta": 12.0,
        "eta": 1000.0,
    },
    "spectrum": {
        "m": 5,
        "cluster_tol": 1e-6,
        "dense_limit": 3000,
    },
    "hypotheses": {
        "t_min": 1e-6,
        "t_max": 1e6,
        "lattice_size": 64,
        "sample_nodes": 16,
        "m": 1,
    },
    "solve": {
        "tol": 1e-8,
        "fiber_tol": 1e-12,
        "max_iter": 5000,
        "restarts": 1,
        "seed": 0,
        "delta_min": 1e-10,
        "initial_step": 1.0,
        "shrink": 0.5,
        "armijo": 1e-4,
        "perturbation": 0.1,
        "escape_ratio": 1e-6,
        "escape_window": 20,
        "tau_restarts": 4,
        "scan_amplitude": 1.0,
    },
    "verify": {
        "sobolev": "discrete",
        "beta_ladder": [1e3, 1e4, 1e5, 1e6],
        "beta_cap": 1e8,
        "m": 1,
    },
    "logging": {
        "level": "warning",
    },
}

# Blocks replaced wholesale instead of merged: a model of another kind shares no keys
REPLACED_BLOCKS = ("model",)


def load_env(env_file: Optional[Union[str, Path]] = None) -> None:
    """Load NEHARI_LAB_* variables from a .env file, if present."""
    load_dotenv(dotenv_path=env_file, override=False)


def thread_cap() -> Optional[int]:
    """Multistart worker cap from NEHARI_LAB_THREADS, or None when unset."""
    raw = os.environ.get("NEHARI_LAB_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"NEHARI_LAB_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"NEHARI_LAB_THREADS must be >= 1, got {value}")
    return value


def read_config_file(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a YAML or JSON configuration file.

    Args:
        config_path: Path to the config file.

    Returns:
        The parsed mapping (empty for an empty file).
    """
    config_file = Path(config_path)
    if not config_file.exists():
        raise ConfigError(f"config file not found: {config_file}")
    try:
        with open(config_file, "r") as f:
            file_config = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"could not read config file {config_file}: {e}")
    if file_config is None:
        return {}
    if not isinstance(file_config, dict):
        raise ConfigError(f"config file {config_file} must hold a mapping at top level")
    return file_config


def merge_config(file_config: Dict[str, Any]) -> Dict[str, Any]:
    """Merge a user mapping over DEFAULT_CONFIG."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    replaced = {key: file_config[key] for key in REPLACED_BLOCKS if key in file_config}
    rest = {key: value for key, value in file_config.items() if key not in replaced}
    config = deep_merge(config, rest)
    config.update(copy.deepcopy(replaced))
    return config


def validate_config(config: Dict[str, Any]) -> RunConfig:
    """
    Validate a merged configuration mapping.

    Raises:
        ConfigError: naming every offending field path.
    """
    try:
        return RunConfig.model_validate(config)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            path = ".".join(str(part) for part in err["loc"])
            problems.append(f"{path}: {err['msg']}")
        raise ConfigError("invalid configuration: " + "; ".join(problems))


def load_config(config_path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load and validate configuration.

    Args:
        config_path: Path to a YAML/JSON config file. If None, defaults are used.

    Returns:
        Validated run configuration.
    """
    file_config = read_config_file(config_path) if config_path else {}
    config = merge_config(file_config)
    run_config = validate_config(config)
    logger.info(f"Loaded configuration (model kind: {run_config.model.kind})")
    return run_config


def save_config(config: Union[RunConfig, Dict[str, Any]], config_path: Union[str, Path]) -> None:
    """
    Save configuration to file.

    Args:
        config: Configuration model or mapping.
        config_path: Destination path.
    """
    if isinstance(config, RunConfig):
        config = config.model_dump(mode="json")
    config_file = Path(config_path)
    config_file.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(config_file, "w") as f:
            yaml.safe_dump(config, f, default_flow_style=False, sort_keys=False)
    except OSError as e:
        raise ConfigError(f"could not save config file {config_file}: {e}")


def deep_merge(dict1: Dict[str, Any], dict2: Dict[str, Any]) -> Dict[str, Any]:
    """
    Deep merge two dictionaries.

    Args:
        dict1: First dictionary.
        dict2: Second dictionary.

    Returns:
        Merged dictionary.
    """
    result = dict1.copy()

    for key, value in dict2.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = value

    return result
