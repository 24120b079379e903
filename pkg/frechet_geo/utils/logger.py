"""Logging configuration module"""

import logging
import os
import sys
from typing import Iterator, Optional

LOG_ENV_VAR = "FRECHET_GEO_LOG"
PACKAGE_NAME = "frechet_geo"

# "off" sits above CRITICAL so nothing gets through
LEVELS = {
    "off": logging.CRITICAL + 10,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

PLAIN_FORMAT = "%(message)s"
DETAILED_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _formatter(verbose: bool) -> logging.Formatter:
    if verbose:
        return logging.Formatter(DETAILED_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    return logging.Formatter(PLAIN_FORMAT)


def level_from_env(default: str = "info") -> int:
    """
    Read the log level from FRECHET_GEO_LOG

    Args:
        default: Level name used when the variable is unset or unknown

    Returns:
        logging level number
    """
    name = os.environ.get(LOG_ENV_VAR, default).strip().lower()
    return LEVELS.get(name, LEVELS[default])


def setup_logger(name: str = __name__, level: Optional[int] = None, verbose: bool = False) -> logging.Logger:
    """
    Configure and return a module logger writing to stdout

    Args:
        name: Logger name, normally the module's __name__
        level: Log level (defaults to the FRECHET_GEO_LOG setting)
        verbose: Timestamped format with logger name and level

    Returns:
        Configured logger; calling again for the same name returns it unchanged
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    logger.setLevel(level_from_env() if level is None else level)
    logger.propagate = False

    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(_formatter(verbose))
    logger.addHandler(handler)
    return logger


def _package_loggers() -> Iterator[logging.Logger]:
    for name, logger in list(logging.Logger.manager.loggerDict.items()):
        if name.startswith(PACKAGE_NAME) and isinstance(logger, logging.Logger):
            yield logger


def set_package_level(level_name: str, verbose: Optional[bool] = None) -> None:
    """
    Re-level every logger already created under the package

    Args:
        level_name: One of off, info, debug
        verbose: When given, switch the handlers to the detailed (True) or plain format
    """
    level = LEVELS.get(level_name.lower(), logging.INFO)
    for logger in _package_loggers():
        logger.setLevel(level)
        if verbose is not None:
            for handler in logger.handlers:
                handler.setFormatter(_formatter(verbose))
