"""
Linear Recurrence Numeration

Greedy expansions in linear recurrence bases, G-additive functions and
the numerical diagnostics for the existence of their limit distributions.
"""

from .base import LinearRecurrenceBase, RecurrenceCoefficients, PisotVerdict, build_base
from .digits import DigitExpansion, greedy_expand, decode
from .gfun import GAdditiveFunction, FunctionKind, parse_function_spec
from .gbase_exceptions import (
    GBaseError,
    CoefficientError,
    CapacityError,
    ConfigurationError,
)

__all__ = [
    'LinearRecurrenceBase',
    'RecurrenceCoefficients',
    'PisotVerdict',
    'build_base',
    'DigitExpansion',
    'greedy_expand',
    'decode',
    'GAdditiveFunction',
    'FunctionKind',
    'parse_function_spec',
    'GBaseError',
    'CoefficientError',
    'CapacityError',
    'ConfigurationError',
]

__version__ = "1.0.0"
