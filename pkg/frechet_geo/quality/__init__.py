"""Quality Modules"""

from .reporter import CheckReporter

__all__ = ["CheckReporter"]
