"""
Logging utilities for NehariLab.
"""

import os
import sys
import logging
from pathlib import Path
from typing import Iterator, Optional, Union

LEVEL_MAP = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _resolve_level(level: Optional[str]) -> int:
    if level is None:
        level = os.environ.get("NEHARI_LAB_LOG_LEVEL", "warning")
    return LEVEL_MAP.get(level.lower(), logging.INFO)


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Set up a logger with the given name and level.

    Args:
        name: Logger name.
        level: Logging level. Defaults to NEHARI_LAB_LOG_LEVEL or "warning".

    Returns:
        Configured logger instance.
    """
    log_level = _resolve_level(level)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Repeated imports must not stack handlers
    if not logger.handlers:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(logging.Formatter(FORMAT))
        logger.addHandler(console_handler)
        logger.propagate = False

    return logger


def package_loggers() -> Iterator[logging.Logger]:
    """Yield every logger created under the neharilab namespace."""
    for name, logger in list(logging.Logger.manager.loggerDict.items()):
        if name.startswith("neharilab") and isinstance(logger, logging.Logger):
            yield logger


def set_level(level: str) -> None:
    """
    Re-level every NehariLab logger.

    Args:
        level: Logging level name.
    """
    log_level = _resolve_level(level)
    for logger in package_loggers():
        logger.setLevel(log_level)


def enable_file_logging(logger: logging.Logger, path: Union[str, Path], level: str = "info") -> None:
    """
    Enable file logging for the given logger.

    Args:
        logger: Logger instance.
        path: Log file path; parent directories are created.
        level: Logging level.
    """
    log_file = Path(path)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(_resolve_level(level))
    file_handler.setFormatter(logging.Formatter(FORMAT))
    logger.addHandler(file_handler)
