#!/usr/bin/env python3

import logging
import os
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Qualitative risk level -> logging level, mirroring issue severities
LEVEL_TO_LOGGING = {
    'critical': logging.CRITICAL,
    'high': logging.ERROR,
    'medium': logging.WARNING,
    'low': logging.INFO,
}


def setup_logger(name: str, log_level: int = logging.INFO, log_file: Optional[str] = None) -> logging.Logger:
    """Set up and configure a logger.

    Console output goes to standard error so that reports written to standard
    output stay machine readable.

    Args:
        name (str): Logger name
        log_level (int, optional): Logging level. Defaults to logging.INFO.
        log_file (str, optional): Path to log file. Defaults to None.

    Returns:
        logging.Logger: Configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    formatter = logging.Formatter(LOG_FORMAT)

    # Reconfiguring the same logger replaces the handlers installed before
    for handler in list(logger.handlers):
        if getattr(handler, '_risk_engine', False):
            logger.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    console_handler._risk_engine = True
    logger.addHandler(console_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        file_handler._risk_engine = True
        logger.addHandler(file_handler)

    return logger


def log_at_risk_level(logger: logging.Logger, level: str, message: str) -> None:
    """Log a message at the logging level matching a qualitative risk level."""
    logger.log(LEVEL_TO_LOGGING.get(level, logging.INFO), message)
