"""
Configuration - YAML experiment files merged with command-line flags
"""

import logging
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from .cone import parse_norm
from .errors import DomainError, ScenarioError
from .models import ExperimentConfig, Layout


logger = logging.getLogger(__name__)

# Constants
COMMANDS = ("demo1d", "load-sim", "power-sim", "certify", "spectral-radius")

# (tol, max_iter) per command when neither the file nor a flag sets them.
# demo1d iterates down to the floating point fixed point.
COMMAND_DEFAULTS = {
    "demo1d": (1e-16, 100000),
    "load-sim": (1e-12, 10000),
    "power-sim": (1e-10, 10000),
    "certify": (1e-12, 10000),
    "spectral-radius": (1e-8, 10000),
}

CONFIG_KEYS = frozenset(f.name for f in fields(ExperimentConfig)) - {"command", "metadata"}


def _normalize_key(key: Any) -> str:
    return str(key).strip().replace("-", "_")


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read an experiment configuration file.

    Keys mirror the long-form flags; dashes and underscores are interchangeable
    (``max-iter`` and ``max_iter`` name the same setting).

    Args:
        path: YAML file holding a single mapping

    Returns:
        Dictionary of recognised settings

    Raises:
        ScenarioError: If the file does not exist or is not valid YAML
        DomainError: On unknown keys
    """
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"Config file not found: {path}")
    try:
        document = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError(f"Config file {path} is not valid YAML: {e}")

    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ScenarioError(f"Config file {path} must hold a mapping, got {type(document).__name__}")

    values = {_normalize_key(key): value for key, value in document.items()}
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise DomainError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


def parse_seed_range(text: Union[str, int, Tuple[int, int], list]) -> Tuple[int, int]:
    """
    Parse ``a..b`` (inclusive) or a single seed.

    Raises:
        DomainError: On malformed ranges or b < a
    """
    if isinstance(text, (tuple, list)):
        if len(text) != 2:
            raise DomainError(f"Seed range needs two bounds, got {text}")
        lo, hi = int(text[0]), int(text[1])
    elif isinstance(text, int):
        lo = hi = text
    else:
        parts = str(text).split("..")
        try:
            if len(parts) == 1:
                lo = hi = int(parts[0])
            elif len(parts) == 2:
                lo, hi = int(parts[0]), int(parts[1])
            else:
                raise ValueError(text)
        except ValueError:
            raise DomainError(f"Invalid seed range {text!r}; expected a..b")
    if hi < lo:
        raise DomainError(f"Seed range {lo}..{hi} is empty")
    return lo, hi


def build_config(command: str, file_values: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Merge file settings and flags into a validated ExperimentConfig.

    Flags win over file values; flags left at None do not override anything.
    Per-command defaults fill tol and max_iter last.
    """
    values: Dict[str, Any] = {}
    values.update(file_values or {})
    values.update({key: value for key, value in (overrides or {}).items()
                   if value is not None and key in CONFIG_KEYS})

    if values.get("seeds") is not None:
        values["seeds"] = parse_seed_range(values["seeds"])
    if values.get("gamma_spread") is not None:
        values["gamma_spread"] = tuple(float(v) for v in values["gamma_spread"])
    for key in ("box_lo", "box_hi"):
        if values.get(key) is not None and not isinstance(values[key], (list, tuple)):
            values[key] = [values[key]]

    config = ExperimentConfig(command=command, **values)
    config = resolve_defaults(config)
    validate_config(config)
    return config


def resolve_defaults(config: ExperimentConfig) -> ExperimentConfig:
    """Fill tol and max_iter from the command's defaults."""
    if config.command not in COMMAND_DEFAULTS:
        raise DomainError(f"Unknown command {config.command!r}; expected one of {COMMANDS}")
    tol, max_iter = COMMAND_DEFAULTS[config.command]
    mapping = config.mapping
    if mapping is None and config.command == "demo1d":
        mapping = "g"
    return replace(
        config,
        mapping=mapping,
        tol=tol if config.tol is None else float(config.tol),
        max_iter=max_iter if config.max_iter is None else int(config.max_iter),
    )


def validate_config(config: ExperimentConfig) -> None:
    """
    Check documented parameter ranges and referenced paths.

    Raises:
        DomainError: On out-of-range parameters
        ScenarioError: On a missing scenario file or conflicting sources
    """
    if config.command not in COMMANDS:
        raise DomainError(f"Unknown command {config.command!r}; expected one of {COMMANDS}")
    if config.tol is None or not config.tol > 0:
        raise DomainError(f"tol must be positive, got {config.tol}")
    if config.max_iter is None or config.max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {config.max_iter}")
    parse_norm(config.norm)

    layouts = [layout.value for layout in Layout]
    if config.layout not in layouts:
        raise DomainError(f"Unknown layout {config.layout!r}; expected one of {layouts}")

    if config.scenario is not None and not Path(config.scenario).exists():
        raise ScenarioError(f"Scenario file not found: {config.scenario}")
    if config.command in ("certify", "spectral-radius"):
        if (config.scenario is None) == (config.mapping is None):
            raise ScenarioError(f"{config.command} needs exactly one of --scenario or --mapping")

    if (config.box_lo is None) != (config.box_hi is None):
        raise DomainError("--box-lo and --box-hi must be given together")
    if config.box_lo is not None and len(config.box_lo) != len(config.box_hi):
        raise DomainError(f"Box bounds differ in length: {len(config.box_lo)} vs {len(config.box_hi)}")
    if config.command == "certify" and config.box_lo is None:
        raise DomainError("certify needs --box-lo and --box-hi")

    if config.mu is not None and not 0.0 < config.mu <= 1.0:
        raise DomainError(f"mu must lie in (0, 1], got {config.mu}")
    if config.p_bar is not None and not config.p_bar > 0:
        raise DomainError(f"p_bar must be positive, got {config.p_bar}")
    if not config.eps > 0:
        raise DomainError(f"eps must be positive, got {config.eps}")
    if not config.freq_mhz > 0:
        raise DomainError(f"freq_mhz must be positive, got {config.freq_mhz}")
    if not config.demand_scale > 0:
        raise DomainError(f"demand_scale must be positive, got {config.demand_scale}")

    counts = {
        "users": (config.users, 1),
        "stations": (config.stations, 1),
        "antennas": (config.antennas, 1),
        "power_users": (config.power_users, 2),
        "power_stations": (config.power_stations, 1),
        "workers": (config.workers, 1),
    }
    for name, (value, minimum) in counts.items():
        if int(value) < minimum:
            raise DomainError(f"{name} must be at least {minimum}, got {value}")

    lo, hi = config.gamma_spread
    if not 0.0 < lo <= hi:
        raise DomainError(f"gamma_spread must satisfy 0 < lo <= hi, got {config.gamma_spread}")
    if config.seeds is not None:
        parse_seed_range(config.seeds)
