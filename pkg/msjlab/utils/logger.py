"""Logging configuration"""
import logging
import sys

from msjlab.core.config import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# stdout carries CSV output, so log records go to stderr
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format=LOG_FORMAT,
    handlers=[logging.StreamHandler(sys.stderr)],
)


def set_level(level: str) -> None:
    """Change the level of every msjlab logger at runtime"""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name"""
    return logging.getLogger(name)
