"""
Exception types for the Sentinel simulator
Every failure raised by the library derives from SentinelError
"""


class SentinelError(Exception):
    """Base class for all simulator errors"""


class DimensionError(SentinelError):
    """Shape mismatch between operands"""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class InvalidArgumentError(SentinelError, ValueError):
    """Argument outside its documented domain"""


class NumericError(SentinelError):
    """Non-finite value produced or consumed"""

    def __init__(self, message, parameter=None, batch=None, round_index=None):
        super().__init__(message)
        self.parameter = parameter
        self.batch = batch
        self.round_index = round_index


class DataError(SentinelError):
    """Problem with an input dataset"""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class FeasibilityError(SentinelError):
    """A randomized construction could not satisfy its constraints"""


class ConfigError(SentinelError):
    """Invalid run configuration"""

    def __init__(self, message, keys=None):
        self.keys = list(keys or [])
        if self.keys:
            message = f"{message} (offending keys: {', '.join(self.keys)})"
        super().__init__(message)


class TrainingAbortedError(SentinelError):
    """A client failed fatally during a round"""

    def __init__(self, message, round_index=None, client_id=None):
        super().__init__(message)
        self.round_index = round_index
        self.client_id = client_id


class LabelError(SentinelError, IndexError):
    """Class label outside [0, num_classes)"""
