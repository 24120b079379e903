"""Utility Modules"""

from .logger import setup_logger, set_package_level

__all__ = ["setup_logger", "set_package_level"]
