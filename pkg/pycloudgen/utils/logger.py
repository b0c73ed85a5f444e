"""Logging setup used by the command-line entry point and test helpers."""

# Standard library imports
import logging
import sys
from typing import Optional

# Third party imports

# Local imports

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def setup_logging(name: str = "pycloudgen", level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """Configures the package logger with a stderr handler and an optional file handler.

    Calling it again replaces the handlers installed by a previous call, so repeated CLI
    invocations inside one interpreter do not duplicate output.

    Args:
        name (str): logger name to configure. Defaults to 'pycloudgen'.
        level (str): one of DEBUG, INFO, WARNING, ERROR. Defaults to 'INFO'.
        log_file (Optional[str]): path of a file to append log records to. Defaults to None.

    Returns:
        logger (logging.Logger): the configured logger.

    Raises:
        TypeError: if arguments are not of expected type.
        ValueError: if the level is unknown.

    """
    # Argument checking
    if not isinstance(name, str):
        raise TypeError(f"arg 'name' must be of type str, not {type(name)}")
    if not isinstance(level, str):
        raise TypeError(f"arg 'level' must be of type str, not {type(level)}")
    if level.upper() not in ["DEBUG", "INFO", "WARNING", "ERROR"]:
        raise ValueError(f"'level' must be one of ['DEBUG', 'INFO', 'WARNING', 'ERROR'] (gave {level})")

    logger = logging.getLogger(name)
    logger.setLevel(level.upper())
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    if log_file is not None:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger
