import json
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from loguru import logger

from utils.errors import ConfigError

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG_PATH = os.path.join(PROJECT_ROOT, "config", "config.json")


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load the JSON configuration and apply environment overrides.

    Resolution order for the file: explicit ``path``, ``POLYWELL_CONFIG``,
    then ``config/config.json``. Afterwards ``POLYWELL_LOG_LEVEL``,
    ``POLYWELL_REPORTS_DIR`` and ``POLYWELL_SEED`` replace the matching keys.
    A ``.env`` file in the working directory is read first.
    """
    load_dotenv()
    config_path = path or os.environ.get("POLYWELL_CONFIG") or DEFAULT_CONFIG_PATH

    try:
        with open(config_path, encoding="utf-8") as f:
            config = json.load(f)
    except FileNotFoundError as e:
        logger.error(f"Config file not found: {config_path}")
        raise ConfigError(f"config file not found: {config_path}") from e
    except json.JSONDecodeError as e:
        logger.error(f"Config file {config_path} is not valid JSON: {str(e)}")
        raise ConfigError(f"invalid JSON in {config_path}: {e}") from e

    if "POLYWELL_LOG_LEVEL" in os.environ:
        config.setdefault("logging", {})["level"] = os.environ["POLYWELL_LOG_LEVEL"]
    if "POLYWELL_REPORTS_DIR" in os.environ:
        config.setdefault("output", {})["reports_dir"] = os.environ["POLYWELL_REPORTS_DIR"]
    if "POLYWELL_SEED" in os.environ:
        try:
            config["seed"] = int(os.environ["POLYWELL_SEED"])
        except ValueError as e:
            raise ConfigError(f"POLYWELL_SEED must be an integer, got {os.environ['POLYWELL_SEED']!r}") from e

    logger.debug(f"Loaded configuration from {config_path}")
    return config
