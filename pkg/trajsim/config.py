"""
File: config.py
Path: trajsim/config.py
Purpose: Run settings from built-in defaults, a dotenv-format config file and CLI flags
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Precedence: CLI flags > config file > built-in defaults.
"""

import os
from typing import Any, Callable, Dict, Optional

from dotenv import dotenv_values

from trajsim.errors import ContractError, UsageError
from trajsim.factors import FactorWeights
from trajsim.proposer import ProposerConfig, ProposerKind
from trajsim.rollout import EnergyMode, MpsParams, Selection
from trajsim.simulation import SimParams


DEFAULT_OUTPUT_DIR = 'exports'


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _to_optional_str(value: Any) -> Optional[str]:
    return None if value in (None, '') else str(value)


# key: (converter, default)
SETTINGS: Dict[str, tuple] = {
    'K': (int, 32),
    'T': (int, 80),
    'J': (int, 60),
    'CHUNK': (int, 10),
    'HORIZON': (int, 80),
    'TEMPERATURE': (float, 1.0),
    'W_MOTION': (float, 1.0),
    'W_GOAL': (float, 1.0),
    'W_LINEAR': (float, 1.0),
    'W_ANGULAR': (float, 2.0),
    'W_OBSTACLE': (float, 1.0),
    'W_COLLISION': (float, 1.0),
    'PROPOSER': (str, ProposerKind.GOAL_DIRECTED),
    'POSITION_NOISE': (float, 0.0),
    'GOAL_JITTER': (float, 2.0),
    'SPEED_SCALE_MIN': (float, 0.9),
    'SPEED_SCALE_MAX': (float, 1.1),
    'REPLAY_PATH': (_to_optional_str, None),
    'SELECTION': (str, Selection.SOFTMIN),
    'ENERGY_MODE': (str, EnergyMode.FULL),
    'GOAL_IN_SMOOTHING': (_to_bool, True),
    'SEED': (int, 0),
    'WORKERS': (int, 1),
    'ROLLOUT_THREADS': (int, 1),
}


def _convert(key: str, value: Any, source: str) -> Any:
    converter: Callable = SETTINGS[key][0]
    try:
        return converter(value)
    except (TypeError, ValueError):
        raise UsageError(f"Invalid value {value!r} for {key} in {source}")


def default_settings() -> Dict[str, Any]:
    """Built-in defaults; WORKERS honours TRAJSIM_WORKERS."""
    settings = {key: default for key, (_, default) in SETTINGS.items()}
    env_workers = os.getenv('TRAJSIM_WORKERS')
    if env_workers:
        settings['WORKERS'] = _convert('WORKERS', env_workers, 'TRAJSIM_WORKERS')
    return settings


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a KEY=VALUE config file.

    Args:
        path: Path to a dotenv-format file

    Returns:
        dict: Converted values for the keys present in the file

    Raises:
        UsageError: If the file is missing, or holds an unknown key or a bad value
    """
    if not os.path.isfile(path):
        raise UsageError(f"Config file not found: {path}")
    raw = dotenv_values(path)
    unknown = sorted(set(raw) - set(SETTINGS))
    if unknown:
        raise UsageError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return {key: _convert(key, value, path) for key, value in raw.items() if value is not None}


def resolve_settings(cli_overrides: Optional[Dict[str, Any]] = None,
                     config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Merge defaults, config file and CLI overrides.

    Args:
        cli_overrides: Setting keys given on the command line; None values are ignored
        config_path: Optional config file

    Returns:
        dict: Complete settings keyed by SETTINGS keys
    """
    settings = default_settings()
    if config_path:
        settings.update(load_config_file(config_path))
    for key, value in (cli_overrides or {}).items():
        if key not in SETTINGS:
            raise UsageError(f"Unknown setting {key}")
        if value is not None:
            settings[key] = _convert(key, value, 'command line')
    return settings


def build_sim_params(settings: Dict[str, Any]) -> SimParams:
    """
    Build SimParams from resolved settings.

    Raises:
        UsageError: If the values break a parameter invariant
    """
    try:
        weights = FactorWeights(
            w_motion=settings['W_MOTION'],
            w_goal=settings['W_GOAL'],
            w_linear=settings['W_LINEAR'],
            w_angular=settings['W_ANGULAR'],
            w_obstacle=settings['W_OBSTACLE'],
            w_collision=settings['W_COLLISION'],
            softmin_temperature=settings['TEMPERATURE'],
        )
        mps = MpsParams(
            num_rollouts=settings['J'],
            horizon=settings['HORIZON'],
            chunk_size=settings['CHUNK'],
            weights=weights,
            selection=settings['SELECTION'],
            energy_mode=settings['ENERGY_MODE'],
            goal_in_smoothing=settings['GOAL_IN_SMOOTHING'],
        )
        return SimParams(
            num_samples=settings['K'],
            total_steps=settings['T'],
            mps=mps,
            master_seed=settings['SEED'],
        )
    except ContractError as e:
        raise UsageError(f"Invalid simulation settings: {e}")


def build_proposer_config(settings: Dict[str, Any]) -> ProposerConfig:
    """
    Build a ProposerConfig from resolved settings.

    Raises:
        UsageError: If the values break a proposer invariant
    """
    try:
        return ProposerConfig(
            kind=settings['PROPOSER'],
            position_noise_sigma=settings['POSITION_NOISE'],
            goal_jitter_sigma=settings['GOAL_JITTER'],
            speed_scale_range=(settings['SPEED_SCALE_MIN'], settings['SPEED_SCALE_MAX']),
            replay_path=settings['REPLAY_PATH'],
        )
    except ContractError as e:
        raise UsageError(f"Invalid proposer settings: {e}")


def output_dir(cli_value: Optional[str] = None) -> str:
    """Output directory: the flag, else TRAJSIM_OUTPUT_DIR, else exports/."""
    return cli_value or os.getenv('TRAJSIM_OUTPUT_DIR', DEFAULT_OUTPUT_DIR)
