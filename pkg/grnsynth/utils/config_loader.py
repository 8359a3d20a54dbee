"""
Configuration Loader Utility
Reads YAML run configurations and the LLM API key
"""

import os
from pathlib import Path

import yaml

from grnsynth.utils.exceptions import ConfigError

API_KEY_ENV = 'LLM4GRN_API_KEY'
# accepted when API_KEY_ENV is unset
FALLBACK_API_KEY_ENV = 'GRNSYNTH_API_KEY'


def load_config(config_path='config.yaml'):
    """
    Load a YAML configuration mapping

    Args:
        config_path: Path to config file

    Returns:
        dict: Top-level sections (empty for an empty file)
    """
    config_file = Path(config_path)
    if not config_file.is_file():
        raise ConfigError(f"Config file not found: {config_path}")

    try:
        with open(config_file, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {config_path}: {e}") from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path} must hold a mapping of sections, got {type(data).__name__}")
    return data


def get_api_key(env_vars=(API_KEY_ENV, FALLBACK_API_KEY_ENV)):
    """Chat-completion API key from the first non-empty variable ('' when none is set)"""
    for env_var in env_vars:
        value = os.environ.get(env_var, '')
        if value:
            return value
    return ''
