"""
Error Handling Decorators and Utilities
Turns domain failures into exit codes and tags solver failures with their sample
"""

import logging
import functools
import time
from typing import Any, Callable, Dict, Optional, Tuple, Type

from .exceptions import HandSynError, SolverError

logger = logging.getLogger(__name__)


def handle_errors(
    *,
    default_return: Any = None,
    exceptions: Tuple[Type[Exception], ...] = (Exception,)
):
    """
    Decorator that logs a failure and returns a fallback instead of raising

    HandSynError subclasses are expected outcomes (bad input, failed check)
    and are logged without a traceback; anything else gets the full trace.

    Args:
        default_return: Fallback value, or a callable taking the exception
            and returning the fallback (the CLI maps errors to exit codes)
        exceptions: Exception types to intercept

    Usage:
        @handle_errors(default_return=_exit_code)
        def run(config):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except exceptions as e:
                expected = isinstance(e, HandSynError)
                logger.log(
                    logging.INFO if expected else logging.ERROR,
                    f"{func.__name__} failed: {e}",
                    exc_info=not expected
                )
                return default_return(e) if callable(default_return) else default_return

        return wrapper

    return decorator


def log_execution_time(log_level: int = logging.DEBUG):
    """
    Decorator that logs wall time of long-running analyses

    Args:
        log_level: Logging level to use (default: DEBUG)
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                logger.log(log_level, f"{func.__name__} took {time.perf_counter() - started:.3f}s")

        return wrapper

    return decorator


class ErrorContext:
    """
    Context manager for one step of a sweep: logs the failing step and
    re-raises solver errors annotated with the sample index

    Usage:
        with ErrorContext("simulate_closing", sample_index=i, motor_angle=phi):
            result = solve_pose(design, phi, contacts)
    """

    def __init__(self, operation_name: str, sample_index: Optional[int] = None, **context: Any):
        self.operation_name = operation_name
        self.sample_index = sample_index
        self.context: Dict[str, Any] = context

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            return False

        where = f" at sample {self.sample_index}" if self.sample_index is not None else ""
        details = ', '.join(f"{k}={v}" for k, v in self.context.items())
        logger.debug(f"{self.operation_name} failed{where} ({details}): {exc_val}")

        if isinstance(exc_val, SolverError) and exc_val.sample_index is None and self.sample_index is not None:
            raise exc_val.at_sample(self.sample_index) from exc_val
        return False
