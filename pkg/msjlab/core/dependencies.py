"""Shared dependencies for services and commands"""
from msjlab.core.config import Settings, settings


def get_settings() -> Settings:
    """
    The process-wide Settings instance

    This is the same object as msjlab.core.config.settings, so patching it
    reaches every service, report and logger. Services also take their own
    Settings for isolated runs.
    """
    return settings
