"""
Logging Configuration Utility
Module loggers write to stderr; a run log file is attached once the output
directory of a run is known
"""

import logging
import sys
from pathlib import Path

PACKAGE = 'grnsynth'
FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _formatter():
    return logging.Formatter(FORMAT, datefmt=DATE_FORMAT)


def _file_handler(log_file, level):
    log_path = Path(log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_path, encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(_formatter())
    return handler


def _package_loggers():
    """Every instantiated grnsynth logger (plus __main__ when run as a script)"""
    for name, candidate in list(logging.Logger.manager.loggerDict.items()):
        if isinstance(candidate, logging.Logger) and (name.startswith(PACKAGE) or name == '__main__'):
            yield candidate


def setup_logger(name, log_file=None, level=logging.INFO):
    """
    Setup logger with a stderr handler and an optional file handler

    Args:
        name: Logger name (normally __name__)
        log_file: Path to log file
        level: Logging level

    Returns:
        logging.Logger: Configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    if log_file:
        logger.addHandler(_file_handler(log_file, level))

    # stdout is reserved for command output (tables, metric rows)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(_formatter())
    logger.addHandler(console_handler)

    return logger


def attach_run_log(log_file, level=logging.INFO):
    """
    Route every grnsynth logger to a run-level log file

    Args:
        log_file: Path to log file
        level: Logging level applied to all package loggers

    Returns:
        logging.FileHandler: The attached handler (pass it to detach_run_log)
    """
    handler = _file_handler(log_file, level)
    set_package_level(level)
    for logger in _package_loggers():
        logger.addHandler(handler)
    return handler


def detach_run_log(handler):
    """Remove a handler added by attach_run_log and close it"""
    for logger in _package_loggers():
        if handler in logger.handlers:
            logger.removeHandler(handler)
    handler.close()


def set_package_level(level):
    """Apply a level to every grnsynth logger and its handlers"""
    for logger in _package_loggers():
        logger.setLevel(level)
        for handler in logger.handlers:
            handler.setLevel(level)
