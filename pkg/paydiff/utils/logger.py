"""Logging utilities for paydiff."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

LOG_ENV_VAR = "PAYDIFF_LOG"

_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_DATEFMT = '%Y-%m-%d %H:%M:%S'


def _level_from_env() -> Optional[int]:
    """Parse the ``PAYDIFF_LOG`` environment variable.

    Returns
    -------
    int or None
        Logging level, or None if the variable is unset or unparseable.
    """
    raw = os.environ.get(LOG_ENV_VAR, "").strip()
    if not raw:
        return None
    if raw.isdigit():
        return int(raw)
    level = logging.getLevelName(raw.upper())
    return level if isinstance(level, int) else None


def get_logger(name: str, level: Optional[int] = None) -> logging.Logger:
    """Get a configured logger for paydiff.

    Parameters
    ----------
    name : str
        Name of the logger (typically __name__).
    level : int, optional
        Logging level. If None, uses ``PAYDIFF_LOG`` when set, otherwise INFO
        for paydiff modules and WARNING for others.

    Returns
    -------
    logging.Logger
        Configured logger instance.
    """
    logger = logging.getLogger(name)

    # Don't add handlers if they already exist
    if logger.handlers:
        return logger

    if level is None:
        level = _level_from_env()
    if level is None:
        level = logging.INFO if name.startswith('paydiff.') else logging.WARNING

    logger.setLevel(level)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))
    logger.addHandler(console_handler)

    return logger


def set_verbosity(level: int) -> None:
    """Set the level of every paydiff module logger created so far.

    Parameters
    ----------
    level : int
        New logging level.
    """
    for name, logger in list(logging.Logger.manager.loggerDict.items()):
        if name.startswith('paydiff.') and isinstance(logger, logging.Logger):
            logger.setLevel(level)
            for handler in logger.handlers:
                handler.setLevel(level)


def progress_enabled(logger: logging.Logger) -> bool:
    """Whether tqdm progress bars should be shown for ``logger``."""
    return logger.isEnabledFor(logging.INFO)


def setup_file_logging(log_dir: Path, level: int = logging.INFO) -> Path:
    """Set up file logging for paydiff.

    Parameters
    ----------
    log_dir : Path
        Directory to store log files.
    level : int, optional
        Logging level for file logging. Default is INFO.

    Returns
    -------
    Path
        Path of the log file.
    """
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    log_file = log_dir / "paydiff.log"
    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))

    # Module loggers propagate to the package logger
    root_logger = logging.getLogger('paydiff')
    root_logger.addHandler(file_handler)
    root_logger.setLevel(level)

    return log_file
