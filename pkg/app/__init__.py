"""
Laboratory Initialization
=========================

Factory untuk laboratory controllers dengan konfigurasi dan logging.

Log records go to stderr; stdout carries report output only.
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from app.config import resolve_settings

LOGGER_NAME = 'app'


def setup_logging(config=None, level=None):
    """
    Setup logging configuration untuk laboratory

    Args:
        config: configuration name, class, instance or settings dict
        level (int): overrides LOG_LEVEL (the CLI passes DEBUG/ERROR for --verbose/--quiet)

    Returns:
        logging.Logger: the package logger
    """
    settings = resolve_settings(config)
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(settings.get('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    if level is None:
        level = getattr(logging, str(settings.get('LOG_LEVEL', 'INFO')).upper(), logging.INFO)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    if settings.get('ENABLE_FILE_LOGGING'):
        log_file = settings.get('LOG_FILE', 'logs/multab.log')
        Path(os.path.dirname(log_file) or '.').mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=settings.get('MAX_LOG_SIZE_MB', 10) * 1024 * 1024,
            backupCount=settings.get('BACKUP_COUNT', 5)
        )
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
        ))
        logger.addHandler(file_handler)

    logger.setLevel(level)
    logger.propagate = False
    return logger


def create_lab(config_name=None, run_config=None, level=None):
    """
    Factory function untuk membuat laboratory controllers

    Args:
        config_name (str): 'development', 'production' or 'testing'
        run_config (RunConfig): validated request (budgets, threads)
        level (int): optional log level override

    Returns:
        dict: {'lab': LabController, 'verify': VerifyController factory, 'settings': dict}
    """
    from app.controllers.lab_controller import LabController, build_settings
    from app.controllers.verify_controller import VerifyController

    settings = build_settings(config_name, run_config)
    logger = setup_logging(settings, level)
    logger.debug(f"Laboratory configured for {settings.get('ENV_NAME')}")

    return {
        'settings': settings,
        'lab': LabController(settings, run_config),
        'verify': lambda: VerifyController(settings, run_config)
    }
