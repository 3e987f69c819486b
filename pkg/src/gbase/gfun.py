"""
G-additive Functions

A G-additive function is fixed by its digit-level weights f(j G_k).
This module represents the supported families, evaluates them on
integers through the greedy digits and parses the CLI function mini-language.
"""

import cmath
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .base import LinearRecurrenceBase
from .digits import DigitExpansion, greedy_expand
from .gbase_exceptions import DigitDomainError, FunctionSpecError

logger = logging.getLogger(__name__)


class FunctionKind(Enum):
    TABLE = "table"
    POLY_DAMPED = "poly_damped"
    GEOM_DAMPED = "geom_damped"
    SUM = "sum"


@dataclass(frozen=True)
class GAdditiveFunction:
    """
    Digit-level description of a G-additive function

    phi is indexed by digit with phi[0] = 0. Table weights default to 0
    outside the stored (digit, level) pairs.
    """
    kind: FunctionKind
    max_digit: int
    table: Mapping[Tuple[int, int], float] = field(default_factory=dict)
    beta: Optional[float] = None
    rho: Optional[float] = None
    phi: Tuple[float, ...] = ()
    parts: Tuple['GAdditiveFunction', ...] = ()
    label: str = ""

    def weight(self, j: int, k: int) -> float:
        """f(j G_k)"""
        if j < 0 or j > self.max_digit:
            raise DigitDomainError(f"Digit {j} outside 0..{self.max_digit}")
        if j == 0:
            return 0.0
        if self.kind is FunctionKind.TABLE:
            return self.table.get((j, k), 0.0)
        if self.kind is FunctionKind.POLY_DAMPED:
            return self.phi[j] * (k + 1) ** -self.beta
        if self.kind is FunctionKind.GEOM_DAMPED:
            return self.rho ** k * self.phi[j]
        first, second = self.parts
        return first.weight(j, k) + second.weight(j, k)

    def eval_digits(self, digits: DigitExpansion) -> float:
        """Sum of weights from the highest digit down"""
        if self.kind is FunctionKind.SUM:
            first, second = self.parts
            return first.eval_digits(digits) + second.eval_digits(digits)
        total = 0.0
        for k in range(len(digits) - 1, -1, -1):
            total += self.weight(digits[k], k)
        return total

    def eval(self, base: LinearRecurrenceBase, n: int) -> float:
        return self.eval_digits(greedy_expand(base, n))

    def phase(self, base: LinearRecurrenceBase, n: int, t: float) -> complex:
        """g_t(n) = exp(i t f(n))"""
        return cmath.exp(1j * t * self.eval(base, n))

    def block_value(self, base: LinearRecurrenceBase, q: int, ell: int) -> float:
        """f(theta_{q,ell}) = sum_{j<ell} f(a_j G_{q-j})"""
        if self.kind is FunctionKind.SUM:
            first, second = self.parts
            return first.block_value(base, q, ell) + second.block_value(base, q, ell)
        total = 0.0
        for j in range(ell):
            total += self.weight(base.a[j], q - j)
        return total

    def support_bound(self) -> Optional[int]:
        """First level from which every weight vanishes, or None if there is none"""
        if self.kind is FunctionKind.TABLE:
            levels = [k for (j, k), value in self.table.items() if value != 0.0]
            return max(levels) + 1 if levels else 0
        if self.kind is FunctionKind.SUM:
            bounds = [part.support_bound() for part in self.parts]
            if any(b is None for b in bounds):
                return None
            return max(bounds)
        if not any(value != 0.0 for value in self.phi):
            return 0
        if self.kind is FunctionKind.GEOM_DAMPED and self.rho == 0.0:
            return 1
        return None

    def scaled(self, c: float) -> 'GAdditiveFunction':
        """c * f"""
        if self.kind is FunctionKind.TABLE:
            return replace(self, table={key: c * value for key, value in self.table.items()},
                           label=f"{c!r}*({self.describe()})")
        if self.kind is FunctionKind.SUM:
            return replace(self, parts=tuple(part.scaled(c) for part in self.parts),
                           label=f"{c!r}*({self.describe()})")
        return replace(self, phi=tuple(c * value for value in self.phi),
                       label=f"{c!r}*({self.describe()})")

    def __add__(self, other: 'GAdditiveFunction') -> 'GAdditiveFunction':
        return sum_of(self, other)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind is FunctionKind.GEOM_DAMPED:
            return f"geom:{self.rho!r}:{','.join(repr(v) for v in self.phi[1:])}"
        if self.kind is FunctionKind.POLY_DAMPED:
            return f"poly:{self.beta!r}:{','.join(repr(v) for v in self.phi[1:])}"
        if self.kind is FunctionKind.SUM:
            first, second = self.parts
            return f"sum:({first.describe()})+({second.describe()})"
        return f"table[{len(self.table)} weights]"

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"kind": self.kind.value, "max_digit": self.max_digit,
                                  "describe": self.describe()}
        if self.kind is FunctionKind.TABLE:
            result["weights"] = [[j, k, v] for (j, k), v in sorted(self.table.items())]
        elif self.kind is FunctionKind.SUM:
            result["parts"] = [part.to_dict() for part in self.parts]
        else:
            result["phi"] = list(self.phi)
            result["beta" if self.kind is FunctionKind.POLY_DAMPED else "rho"] = \
                self.beta if self.kind is FunctionKind.POLY_DAMPED else self.rho
        return result


def _phi_vector(phi: Sequence[float], max_digit: Optional[int]) -> Tuple[Tuple[float, ...], int]:
    values = [0.0] + [float(v) for v in phi]
    top = len(values) - 1
    if max_digit is not None and max_digit > top:
        values.extend([0.0] * (max_digit - top))
        top = max_digit
    return tuple(values), top


def geom_damped(rho: float, phi: Sequence[float], max_digit: Optional[int] = None) -> GAdditiveFunction:
    """f(j G_k) = rho^k phi(j); phi lists phi(1), phi(2), ..."""
    if not -1.0 < rho < 1.0:
        raise FunctionSpecError("rho must lie in (-1, 1)", f"rho={rho!r}")
    vector, top = _phi_vector(phi, max_digit)
    return GAdditiveFunction(kind=FunctionKind.GEOM_DAMPED, max_digit=top, rho=float(rho), phi=vector)


def poly_damped(beta: float, phi: Sequence[float], max_digit: Optional[int] = None) -> GAdditiveFunction:
    """f(j G_k) = phi(j) / (k+1)^beta"""
    if not beta > 0:
        raise FunctionSpecError("beta must be positive", f"beta={beta!r}")
    vector, top = _phi_vector(phi, max_digit)
    return GAdditiveFunction(kind=FunctionKind.POLY_DAMPED, max_digit=top, beta=float(beta), phi=vector)


def table_function(weights: Iterable[Sequence[float]], max_digit: Optional[int] = None) -> GAdditiveFunction:
    """Table of (j, k, value) triples with j >= 1"""
    table: Dict[Tuple[int, int], float] = {}
    for entry in weights:
        if len(entry) != 3:
            raise FunctionSpecError("Table entries must be [j, k, value]", repr(entry))
        j, k, value = int(entry[0]), int(entry[1]), float(entry[2])
        if j < 1 or k < 0:
            raise FunctionSpecError("Table entries need j >= 1 and k >= 0", repr(entry))
        table[(j, k)] = value
    top = max([j for j, _ in table] + [max_digit or 0])
    return GAdditiveFunction(kind=FunctionKind.TABLE, max_digit=top, table=table)


def digit_count(max_digit: int, levels: int) -> GAdditiveFunction:
    """Number of nonzero digits among levels below `levels`"""
    weights = [(j, k, 1.0) for j in range(1, max_digit + 1) for k in range(levels)]
    return replace(table_function(weights, max_digit), label=f"count:{levels}")


def zero(max_digit: int) -> GAdditiveFunction:
    return replace(table_function([], max_digit), label="zero")


def sum_of(first: GAdditiveFunction, second: GAdditiveFunction) -> GAdditiveFunction:
    return GAdditiveFunction(kind=FunctionKind.SUM, max_digit=min(first.max_digit, second.max_digit),
                             parts=(first, second))


def _split_sum(body: str) -> Tuple[str, str]:
    """Split "(A)+(B)" at the top-level '+'"""
    if not body.startswith("("):
        raise FunctionSpecError("sum needs the form sum:(SPEC)+(SPEC)", body)
    depth = 0
    for index, char in enumerate(body):
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
            if depth == 0:
                rest = body[index + 1:]
                if not (rest.startswith("+(") and rest.endswith(")")):
                    raise FunctionSpecError("sum needs the form sum:(SPEC)+(SPEC)", body)
                return body[1:index], rest[2:-1]
    raise FunctionSpecError("Unbalanced parentheses", body)


def _floats(text: str, what: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise FunctionSpecError(f"Could not parse {what}", text)


def parse_function_spec(spec: str, max_digit: int) -> GAdditiveFunction:
    """
    Parse the function mini-language

    geom:RHO:PHI1[,PHI2,...], poly:BETA:PHI1[,...], table:PATH,
    sum:(SPEC)+(SPEC), zero and count[:LEVELS]. phi is padded with zeros
    up to max_digit.
    """
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    try:
        if kind == "geom" or kind == "poly":
            parameter, _, phi_text = body.partition(":")
            if not phi_text:
                raise FunctionSpecError(f"{kind} needs {kind}:PARAM:PHI1[,PHI2,...]", spec)
            phi = _floats(phi_text, "phi values")
            value = float(parameter)
            if kind == "geom":
                return replace(geom_damped(value, phi, max_digit), label=spec)
            return replace(poly_damped(value, phi, max_digit), label=spec)
        if kind == "table":
            with open(Path(body)) as handle:
                payload = json.load(handle)
            if not isinstance(payload, dict) or "weights" not in payload:
                raise FunctionSpecError("Table file must hold {\"weights\": [[j,k,value],...]}", body)
            return replace(table_function(payload["weights"], max_digit), label=spec)
        if kind == "sum":
            left, right = _split_sum(body)
            return sum_of(parse_function_spec(left, max_digit), parse_function_spec(right, max_digit))
        if kind == "zero":
            return zero(max_digit)
        if kind == "count":
            return digit_count(max_digit, int(body) if body else 64)
    except FunctionSpecError:
        raise
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as e:
        raise FunctionSpecError(f"Could not parse function spec {spec!r}", str(e))
    raise FunctionSpecError("Unknown function kind", repr(kind))
