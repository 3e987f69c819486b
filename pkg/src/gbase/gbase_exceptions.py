"""
Numeration-base exceptions and error handling

Provides a hierarchy of custom exceptions for base construction, digit
coding and the analytic engine, enabling precise error handling and a
single machine-parseable failure line in the CLI.
"""

import json
from typing import Optional


class GBaseError(Exception):
    """Base exception for all numeration-base errors"""

    def __init__(self, message: str, details: Optional[str] = None):
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if self.details:
            return f"{self.message}: {self.details}"
        return self.message


class CoefficientError(GBaseError):
    """Raised when recurrence coefficients fail a validation rule"""

    def __init__(self, message: str = "Invalid recurrence coefficients", details: Optional[str] = None):
        super().__init__(message, details)


class CapacityError(GBaseError):
    """Raised when an integer or level exceeds the precomputed G-sequence"""

    def __init__(self, message: str = "Base capacity exceeded", details: Optional[str] = None,
                 required_level: Optional[int] = None):
        self.required_level = required_level
        if required_level is not None and details is None:
            details = f"rebuild with max_level >= {required_level}"
        super().__init__(message, details)


class DigitDomainError(GBaseError):
    """Raised when a digit lies outside the alphabet {0, ..., frak_a}"""

    def __init__(self, message: str = "Digit outside the base alphabet", details: Optional[str] = None):
        super().__init__(message, details)


class IndexRangeError(GBaseError):
    """Raised when a level index falls outside the stored range"""

    def __init__(self, message: str = "Level index out of range", details: Optional[str] = None):
        super().__init__(message, details)


class WrongOrderError(GBaseError):
    """Raised when an order-specific routine gets a base of another order"""

    def __init__(self, message: str = "Base has the wrong order", details: Optional[str] = None):
        super().__init__(message, details)


class IdentityUnavailableError(GBaseError):
    """Raised when an identity needs a block ratio that is undefined"""

    def __init__(self, message: str = "Identity unavailable", details: Optional[str] = None):
        super().__init__(message, details)


class EigenvalueTrackingError(GBaseError):
    """Raised when neither continuation nor the dense eigensolve succeeds"""

    def __init__(self, message: str = "Dominant eigenvalue tracking failed", details: Optional[str] = None):
        super().__init__(message, details)


class FunctionSpecError(GBaseError):
    """Raised when a G-additive function spec cannot be parsed"""

    def __init__(self, message: str = "Invalid function spec", details: Optional[str] = None):
        super().__init__(message, details)


class MismatchedDistributionError(GBaseError):
    """Raised when two empirical distributions come from different (base, f)"""

    def __init__(self, message: str = "Distributions are not comparable", details: Optional[str] = None):
        super().__init__(message, details)


class ConfigurationError(GBaseError):
    """Raised when a run configuration is invalid"""

    def __init__(self, message: str = "Invalid run configuration", details: Optional[str] = None):
        super().__init__(message, details)


def handle_gbase_error(func):
    """
    Decorator to handle numeric and I/O errors gracefully

    Converts common exceptions into appropriate GBaseError subclasses
    so callers only need to catch the package hierarchy.
    """
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except GBaseError:
            raise
        except json.JSONDecodeError as e:
            raise ConfigurationError("Malformed JSON input", str(e))
        except FileNotFoundError as e:
            raise ConfigurationError("File not found", str(e))
        except ZeroDivisionError as e:
            raise IdentityUnavailableError(f"Division by zero in {func.__name__}", str(e))
        except OverflowError as e:
            raise CapacityError(f"Floating overflow in {func.__name__}", str(e))
        except ArithmeticError as e:
            raise GBaseError(f"Arithmetic failure in {func.__name__}", str(e))
        except ValueError as e:
            raise GBaseError(f"Invalid value in {func.__name__}", str(e))

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper
