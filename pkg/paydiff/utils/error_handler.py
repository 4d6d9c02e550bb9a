"""Error types and error-boundary utilities for paydiff."""

import traceback
from functools import wraps
from typing import Any, Callable, Optional

from .logger import get_logger

logger = get_logger(__name__)


class PaydiffError(Exception):
    """Base class for all paydiff errors."""


class DimensionError(PaydiffError, ValueError):
    """Array argument has the wrong length or shape."""


class NonFiniteError(PaydiffError, ValueError):
    """Array argument contains NaN or Inf."""


class ModelValidationError(PaydiffError, ValueError):
    """A robot model, scene or config violates an invariant.

    Parameters
    ----------
    field_path : str
        Dotted path of the offending field, e.g. ``joints[2].limits.v_max``.
    message : str
        What is wrong with it.
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class NegativeMassError(PaydiffError, ValueError):
    """Payload mass below zero."""


class InfeasibleAtZeroPayloadError(PaydiffError):
    """Trajectory already violates torque limits without payload."""


class InfeasibleDurationError(PaydiffError, ValueError):
    """Requested duration is shorter than the time-optimal one."""


class DegeneratePathError(PaydiffError, ValueError):
    """Path collapses to fewer than two distinct waypoints."""


class PlannerTimeoutError(PaydiffError):
    """Planner ran out of time or iterations."""


class RejectionBudgetError(PaydiffError):
    """Rejection sampling exhausted its budget."""


class DatasetGenerationError(PaydiffError):
    """Too many planning failures while generating a dataset."""


class CorruptFileError(PaydiffError):
    """File is truncated or not in the expected format."""


class FormatVersionError(PaydiffError):
    """File was written by an incompatible format version."""


class ModelMismatchError(PaydiffError):
    """File was produced for a different robot model."""


class ShapeError(PaydiffError, ValueError):
    """Tensor operands have incompatible shapes."""


class NonFiniteGradientError(PaydiffError, FloatingPointError):
    """Optimizer received NaN or Inf gradients."""


class TrainingDivergedError(PaydiffError):
    """Training loss became non-finite."""

    def __init__(self, message: str, checkpoint_path: Optional[str] = None):
        self.checkpoint_path = checkpoint_path
        super().__init__(message)


class PayloadRangeError(PaydiffError, ValueError):
    """Payload outside the encodable range."""


class ReportError(PaydiffError):
    """Report cannot be produced or written."""


class CriteriaViolation(PaydiffError):
    """Acceptance criteria were not met."""


def safe_execute(func: Callable, *args, module_name: str = "Unknown",
                 context: str = "", **kwargs) -> Any:
    """Safely execute a function with error handling.

    Parameters
    ----------
    func : callable
        Function to execute safely.
    *args
        Arguments to pass to function.
    module_name : str
        Name of the module for error reporting.
    context : str
        Context description for error reporting.
    **kwargs
        Keyword arguments to pass to function.

    Returns
    -------
    Any
        Function result, or None if error occurred.
    """
    try:
        return func(*args, **kwargs)
    except Exception as e:
        logger.warning(f"Error in {module_name} ({context}): {type(e).__name__}: {e}")
        logger.debug(f"Traceback:\n{traceback.format_exc()}")
        return None


def error_boundary(module_name: str = "", reraise: bool = True):
    """Decorator to create an error boundary around functions.

    Parameters
    ----------
    module_name : str
        Name of the module for error reporting.
    reraise : bool
        Re-raise after logging. If False the wrapped call returns None.

    Returns
    -------
    callable
        Decorated function with error handling.
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                error_name = module_name or func.__module__ or "Unknown"
                logger.error(f"Error in {error_name}.{func.__name__}: {e}")
                logger.debug(f"Traceback: {traceback.format_exc()}")
                if reraise:
                    raise
                return None

        return wrapper
    return decorator


def critical_error_boundary(func: Callable) -> Callable:
    """Decorator for entry points that should never fail silently.

    Parameters
    ----------
    func : callable
        Function to wrap with critical error handling.

    Returns
    -------
    callable
        Decorated function.
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (KeyboardInterrupt, SystemExit):
            raise
        except Exception as e:
            logger.critical(f"Critical error in {func.__name__}: {type(e).__name__}: {e}")
            logger.debug(f"Traceback: {traceback.format_exc()}")
            raise

    return wrapper
