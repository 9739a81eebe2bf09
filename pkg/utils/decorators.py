"""
Decorators for the Sentinel simulator
Timing of long-running calls and error handling for command-line entry points
"""
import logging
import time
from functools import wraps

import click

from utils.errors import SentinelError


def timed(f):
    """Log the wall-clock duration of the wrapped call at INFO"""
    logger = logging.getLogger(f.__module__)

    @wraps(f)
    def decorated_function(*args, **kwargs):
        started = time.perf_counter()
        try:
            return f(*args, **kwargs)
        finally:
            logger.info(f"{f.__qualname__} finished in {time.perf_counter() - started:.2f}s")
    return decorated_function


def cli_errors(f):
    """Log a SentinelError and turn it into a click failure (exit status 1)"""
    logger = logging.getLogger(f.__module__)

    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SentinelError as e:
            logger.error(f"{type(e).__name__}: {str(e)}")
            raise click.ClickException(f"{type(e).__name__}: {e}") from e
    return decorated_function
