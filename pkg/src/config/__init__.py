"""
Configuration package for handsyn
"""

from .constants import (
    SolverConfig,
    CancellationConfig,
    SynergyConfig,
    ISSDefaults,
    ReportConfig,
    LoggingConfig,
    ExitCodes,
    ValidationLimits
)

__all__ = [
    'SolverConfig',
    'CancellationConfig',
    'SynergyConfig',
    'ISSDefaults',
    'ReportConfig',
    'LoggingConfig',
    'ExitCodes',
    'ValidationLimits'
]
