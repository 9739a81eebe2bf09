"""
Utils package initialization
"""
from .errors import (
    SentinelError, DimensionError, InvalidArgumentError, NumericError, DataError,
    FeasibilityError, ConfigError, TrainingAbortedError, LabelError
)
from .decorators import timed, cli_errors

__all__ = [
    'SentinelError', 'DimensionError', 'InvalidArgumentError', 'NumericError', 'DataError',
    'FeasibilityError', 'ConfigError', 'TrainingAbortedError', 'LabelError', 'timed', 'cli_errors'
]
