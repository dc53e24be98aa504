import os
import json
import logging
from typing import Dict, Any, Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

DEFAULT_CONFIG_PATH = os.path.join('config', 'defaults.json')
DEFAULT_THREADS = 4
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Names of loggers configured through setup_logging
_configured_loggers = set()


class AvgCaseError(Exception):
    """Base class for errors raised by the experiment harness."""


class InvalidInputError(AvgCaseError, ValueError):
    """An operation was called outside its precondition."""


class ConfigError(AvgCaseError, ValueError):
    """A configuration file, flag or environment variable is invalid."""


class PropertyViolation(AvgCaseError):
    """A guarantee checked during an experiment run did not hold."""


def setup_logging(name: str, log_file: Optional[str] = None) -> logging.Logger:
    """
    Set up logging configuration for a module.

    Args:
        name: Name of the logger
        log_file: Optional log file path; defaults to AVGCASE_LOG_FILE

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(os.getenv('AVGCASE_LOG_LEVEL', 'INFO').upper())

    # Repeated imports must not stack handlers
    if logger.handlers:
        return logger

    formatter = logging.Formatter(LOG_FORMAT)

    log_file = log_file or os.getenv('AVGCASE_LOG_FILE')
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # StreamHandler writes to stderr, keeping stdout free for records
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)
    logger.propagate = False
    _configured_loggers.add(name)

    return logger


logger = setup_logging(__name__)


def set_log_level(level: str) -> None:
    """
    Change the level of every logger created through setup_logging.

    Args:
        level: Level name such as 'DEBUG' or 'WARNING'
    """
    if not isinstance(logging.getLevelName(level.upper()), int):
        raise ConfigError(f"Unknown log level: {level}")
    os.environ['AVGCASE_LOG_LEVEL'] = level.upper()
    for name in _configured_loggers:
        logging.getLogger(name).setLevel(level.upper())


def load_defaults(config_path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """
    Load per-subcommand default parameters from the configuration file.

    Args:
        config_path: Path to the defaults JSON; falls back to AVGCASE_CONFIG

    Returns:
        Mapping of subcommand name to its default parameter map, or an
        empty mapping if the file is missing or unreadable
    """
    path = config_path or os.getenv('AVGCASE_CONFIG', DEFAULT_CONFIG_PATH)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config = json.load(f)
        if not isinstance(config, dict):
            raise ConfigError(f"Defaults file {path} must hold a JSON object")
        return config
    except FileNotFoundError:
        logger.warning(f"Defaults file not found: {path}, using built-in defaults")
        return {}
    except (json.JSONDecodeError, ConfigError) as e:
        logger.error(f"Error loading defaults from {path}: {str(e)}")
        return {}


def get_thread_count() -> int:
    """
    Read the worker cap for trial fan-out from AVGCASE_THREADS.

    Returns:
        Number of worker threads; 0 means run trials serially

    Raises:
        ConfigError: If the variable is set to a non-integer or negative value
    """
    raw = os.getenv('AVGCASE_THREADS')
    if raw is None or raw.strip() == '':
        return min(DEFAULT_THREADS, os.cpu_count() or 1)
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"AVGCASE_THREADS must be an integer, got {raw!r}")
    if threads < 0:
        raise ConfigError(f"AVGCASE_THREADS must be >= 0, got {threads}")
    return threads


def handle_error(error: Exception, logger: logging.Logger, default_return: Any = None) -> Any:
    """
    Handle errors from non-critical steps consistently across the application.

    Args:
        error: The exception that occurred
        logger: Logger instance to use
        default_return: Value to return in case of error

    Returns:
        The default_return value
    """
    if isinstance(error, OSError):
        logger.error(f"I/O error: {str(error)}")
    else:
        logger.error(f"Error: {str(error)}")
    return default_return
