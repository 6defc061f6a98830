import logging
import time
from functools import wraps
from typing import Any, Callable, Optional, Sequence, Tuple

from toric_bounds.settings import settings

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger("toric_bounds")


class ToricError(Exception):
    """Base error for the toric bounds toolkit"""
    pass


class PolytopeError(ToricError):
    """Polytope data does not describe a usable polytope"""
    pass


class UnboundedPolytopeError(PolytopeError):
    def __init__(self, direction: Sequence[float]):
        self.direction = tuple(float(d) for d in direction)
        super().__init__(
            f"Polytope is unbounded: recession direction {self.direction} "
            f"keeps every facet functional non-decreasing"
        )


class EmptyPolytopeError(PolytopeError):
    pass


class ParameterRangeError(ToricError):
    def __init__(self, name: str, value: Any, interval: str):
        self.name = name
        self.value = value
        self.interval = interval
        super().__init__(f"{name}={value} is outside the valid range {interval}")


class InputFormatError(ToricError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class NumericsError(ToricError):
    pass


class CholeskyError(NumericsError):
    def __init__(self, pivot: int, order: int):
        self.pivot = pivot
        self.order = order
        super().__init__(
            f"Matrix of order {order} is not positive definite: "
            f"Cholesky pivot {pivot} is non-positive"
        )


class BracketError(NumericsError):
    pass


class SingularSystemError(NumericsError):
    pass


class QuadratureError(NumericsError):
    pass


class OutputError(ToricError):
    pass


def exit_code_for(error: Exception) -> int:
    """Classify errors into the CLI exit-code contract"""
    if isinstance(error, (InputFormatError, ParameterRangeError)):
        return 2
    elif isinstance(error, PolytopeError):
        return 3
    elif isinstance(error, OutputError):
        return 4
    else:
        return 1


def timed(func: Callable) -> Callable:
    """Return (result, seconds) instead of result"""
    @wraps(func)
    def wrapper(*args, **kwargs) -> Tuple[Any, float]:
        start = time.perf_counter()
        result = func(*args, **kwargs)
        elapsed = time.perf_counter() - start
        logger.debug(f"{func.__name__} finished in {elapsed:.3f}s")
        return result, elapsed
    return wrapper
