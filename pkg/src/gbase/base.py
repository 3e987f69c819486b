"""
Linear Recurrence Bases

Builds and validates a linear recurrence numeration base: coefficient rules,
the exact G-sequence, the Perron root, the asymptotic constant kappa and the
Pisot classification of the characteristic polynomial.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .gbase_exceptions import CoefficientError, IndexRangeError, handle_gbase_error

logger = logging.getLogger(__name__)

ALPHA_TOLERANCE = 1e-14
PISOT_BAND = 1e-9
PERRON_TOLERANCE = 1e-12
MAX_ROOT_SWEEPS = 500
DEFAULT_MAX_LEVEL = 60


class PisotVerdict(Enum):
    """Outcome of the Pisot classification"""
    YES = "yes"
    NO = "no"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """Coefficients (a_0, ..., a_{d-1}) of G_{n+d} = a_0 G_{n+d-1} + ... + a_{d-1} G_n"""
    a: Tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def frak_a(self) -> int:
        return max(self.a) if self.a else 0

    @classmethod
    def parse(cls, text: str) -> 'RecurrenceCoefficients':
        """Parse the CLI form "a0,a1,...,a{d-1}" """
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise CoefficientError("Empty coefficient list", repr(text))
        try:
            values = tuple(int(p) for p in parts)
        except ValueError:
            raise CoefficientError("Coefficients must be integers", repr(text))
        if any(v < 0 for v in values):
            raise CoefficientError("Coefficients must be nonnegative", repr(text))
        return cls(values)

    def __str__(self):
        return ",".join(str(v) for v in self.a)


@dataclass
class ValidationReport:
    """Pass/fail per coefficient rule plus primitivity"""
    coeffs: RecurrenceCoefficients
    rules: Dict[str, bool]
    primitive: bool

    @property
    def passed(self) -> bool:
        return all(self.rules.values()) and self.primitive

    @property
    def failed_rules(self) -> List[str]:
        failed = [name for name, ok in self.rules.items() if not ok]
        if not self.primitive:
            failed.append("primitive")
        return failed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coeffs": list(self.coeffs.a),
            "rules": dict(self.rules),
            "primitive": self.primitive,
            "passed": self.passed,
        }


@dataclass
class PisotReport:
    """Pisot classification with the non-dominant roots that decided it"""
    verdict: PisotVerdict
    dominant_root: float
    other_roots: List[complex]
    max_other_modulus: Optional[float]
    method: str
    sweeps: int = 0
    diagnostic: str = ""
    brauer: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "dominant_root": self.dominant_root,
            "other_roots": [[z.real, z.imag] for z in self.other_roots],
            "max_other_modulus": self.max_other_modulus,
            "method": self.method,
            "sweeps": self.sweeps,
            "diagnostic": self.diagnostic,
            "brauer": self.brauer,
        }


def _parry_nonstrict(a: Sequence[int]) -> bool:
    """(a_k,...,a_{d-1}) <= (a_0,...,a_{d-1-k}) lexicographically for 1 <= k < d"""
    d = len(a)
    return all(tuple(a[k:]) <= tuple(a[:d - k]) for k in range(1, d))


def _gcd_primitive(a: Sequence[int]) -> bool:
    support = [j + 1 for j, value in enumerate(a) if value > 0]
    if not support:
        return False
    return reduce(math.gcd, support) == 1


def is_primitive_bruteforce(coeffs: RecurrenceCoefficients) -> bool:
    """
    Check primitivity of the companion matrix directly

    Scans the zero pattern of A^m for m <= d^2 and reports whether some
    power is entrywise positive.
    """
    d = coeffs.d
    if d < 1:
        return False
    pattern = (companion_matrix(coeffs) > 0).astype(np.int64)
    power = pattern.copy()
    for _ in range(d * d):
        if power.min() > 0:
            return True
        power = np.minimum(power @ pattern, 1)
    return bool(power.min() > 0)


def companion_matrix(coeffs: RecurrenceCoefficients) -> np.ndarray:
    """Integer companion matrix with first row (a_0, ..., a_{d-1})"""
    d = coeffs.d
    matrix = np.zeros((d, d), dtype=np.int64)
    matrix[0, :] = coeffs.a
    for row in range(1, d):
        matrix[row, row - 1] = 1
    return matrix


def validate_coefficients(coeffs: RecurrenceCoefficients) -> ValidationReport:
    """
    Report every coefficient rule without raising

    Rules: order >= 2, a_0 >= 1, a_{d-1} >= 1, nonnegative entries and the
    Parry comparison under the non-strict convention; primitivity via
    gcd{ j+1 : a_j > 0 } = 1.
    """
    a = coeffs.a
    d = coeffs.d
    rules = {
        "order_at_least_2": d >= 2,
        "nonnegative": all(v >= 0 for v in a),
        "leading_positive": d >= 1 and a[0] >= 1,
        "last_positive": d >= 1 and a[-1] >= 1,
        "parry_nonstrict": d >= 1 and _parry_nonstrict(a),
    }
    report = ValidationReport(coeffs=coeffs, rules=rules, primitive=_gcd_primitive(a))
    if not report.passed:
        logger.debug(f"⚠️  Coefficients ({coeffs}) failed: {report.failed_rules}")
    return report


def _characteristic(a: Sequence[int], x: float) -> float:
    """P(x) = x^d - a_0 x^{d-1} - ... - a_{d-1} by Horner"""
    value = 1.0
    for coefficient in a:
        value = value * x - coefficient
    return value


def perron_root(coeffs: RecurrenceCoefficients) -> float:
    """Dominant root of P by bisection on (a_0, frak_a + 1)"""
    a = coeffs.a
    lo, hi = float(a[0]), float(coeffs.frak_a + 1)
    for _ in range(400):
        if hi - lo <= ALPHA_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _characteristic(a, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _deflate(a: Sequence[int], root: float) -> np.ndarray:
    """Divide P by (x - root); returns monic quotient coefficients, highest first"""
    poly = [1.0] + [-float(v) for v in a]
    quotient = [poly[0]]
    for coefficient in poly[1:-1]:
        quotient.append(coefficient + root * quotient[-1])
    return np.array(quotient, dtype=np.complex128)


def _aberth_roots(poly: np.ndarray, max_sweeps: int = MAX_ROOT_SWEEPS,
                  tol: float = 1e-15) -> Tuple[np.ndarray, int, bool]:
    """
    Simultaneous Aberth iteration for all roots of a monic polynomial

    Returns (roots, sweeps, converged).
    """
    degree = poly.shape[0] - 1
    if degree == 0:
        return np.zeros(0, dtype=np.complex128), 0, True
    if degree == 1:
        return np.array([-poly[1] / poly[0]]), 0, True

    derivative = poly[:-1] * np.arange(degree, 0, -1)
    # Cauchy bound for the initial circle
    radius = 1.0 + float(np.max(np.abs(poly[1:] / poly[0])))
    angles = 2 * math.pi * np.arange(degree) / degree + 0.4
    roots = 0.5 * radius * np.exp(1j * angles)

    for sweep in range(1, max_sweeps + 1):
        converged = True
        for i in range(degree):
            zi = roots[i]
            p_value = np.polyval(poly, zi)
            dp_value = np.polyval(derivative, zi)
            others = np.delete(roots, i)
            repulsion = np.sum(1.0 / (zi - others))
            denominator = dp_value - p_value * repulsion
            if denominator == 0:
                converged = False
                continue
            delta = p_value / denominator
            roots[i] = zi - delta
            if abs(delta) > tol * max(1.0, abs(roots[i])):
                converged = False
        if converged:
            return roots, sweep, True
    return roots, max_sweeps, False


def pisot_check(coeffs: RecurrenceCoefficients) -> PisotReport:
    """
    Classify the dominant root as Pisot, non-Pisot or indeterminate

    Order 2 uses the exact criterion b <= a. Higher orders deflate P by the
    dominant root and locate the remaining roots by Aberth iteration; the
    verdict is yes when every other modulus is below 1 - 1e-9, no when one
    exceeds 1 + 1e-9, indeterminate otherwise.
    """
    a = coeffs.a
    d = coeffs.d
    if d < 2 or a[0] < 1 or a[-1] < 1:
        raise CoefficientError("Pisot check needs d >= 2, a_0 >= 1 and a_{d-1} >= 1", f"({coeffs})")

    alpha = perron_root(coeffs)
    brauer = all(a[j] >= a[j + 1] for j in range(d - 1))

    if d == 2:
        b = a[1]
        discriminant = math.sqrt(a[0] * a[0] + 4 * b)
        second = (a[0] - discriminant) / 2
        verdict = PisotVerdict.YES if b <= a[0] else PisotVerdict.NO
        return PisotReport(
            verdict=verdict,
            dominant_root=alpha,
            other_roots=[complex(second, 0.0)],
            max_other_modulus=abs(second),
            method="order2-exact",
            brauer=brauer,
        )

    quotient = _deflate(a, alpha)
    roots, sweeps, converged = _aberth_roots(quotient)
    if not converged:
        logger.warning(f"⚠️  Root iteration for ({coeffs}) did not converge after {sweeps} sweeps")
        return PisotReport(
            verdict=PisotVerdict.INDETERMINATE,
            dominant_root=alpha,
            other_roots=[complex(z) for z in roots],
            max_other_modulus=None,
            method="aberth",
            sweeps=sweeps,
            diagnostic=f"no convergence after {sweeps} sweeps",
            brauer=brauer,
        )

    moduli = np.abs(roots)
    max_modulus = float(moduli.max())
    if max_modulus < 1 - PISOT_BAND:
        verdict = PisotVerdict.YES
    elif max_modulus > 1 + PISOT_BAND:
        verdict = PisotVerdict.NO
    else:
        verdict = PisotVerdict.INDETERMINATE
    diagnostic = "" if verdict is not PisotVerdict.INDETERMINATE else \
        f"max conjugate modulus {max_modulus!r} inside the acceptance band"
    return PisotReport(
        verdict=verdict,
        dominant_root=alpha,
        other_roots=sorted((complex(z) for z in roots), key=lambda z: (-abs(z), z.real, z.imag)),
        max_other_modulus=max_modulus,
        method="aberth",
        sweeps=sweeps,
        diagnostic=diagnostic,
        brauer=brauer,
    )


def _g_sequence(a: Sequence[int], max_level: int) -> List[int]:
    d = len(a)
    G = [1]
    for k in range(1, min(d, max_level + 1)):
        G.append(sum(a[j] * G[k - 1 - j] for j in range(k)) + 1)
    for n in range(d, max_level + 1):
        G.append(sum(a[j] * G[n - 1 - j] for j in range(d)))
    return G


@dataclass(frozen=True)
class LinearRecurrenceBase:
    """
    Immutable numeration base built from validated coefficients

    G holds exact integers G_0..G_max_level; alpha is the Perron root and
    kappa the limit of G_n / alpha^n with its error bound kappa_err.
    """
    coeffs: RecurrenceCoefficients
    G: Tuple[int, ...]
    alpha: float
    kappa: float
    kappa_err: float
    frak_a: int
    pisot: PisotVerdict
    primitive: bool
    perron_residual: float
    pisot_report: PisotReport = field(repr=False, compare=False)

    @property
    def d(self) -> int:
        return self.coeffs.d

    @property
    def a(self) -> Tuple[int, ...]:
        return self.coeffs.a

    @property
    def max_level(self) -> int:
        return len(self.G) - 1

    @property
    def key(self) -> Tuple[int, ...]:
        return self.coeffs.a

    def level(self, k: int) -> int:
        """G_k with a range check"""
        if k < 0 or k > self.max_level:
            raise IndexRangeError(f"Level {k} outside stored range 0..{self.max_level}")
        return self.G[k]

    def required_level(self, n: int) -> int:
        """Smallest K with G_K > n, extending the recurrence past max_level if needed"""
        G = list(self.G)
        while G[-1] <= n:
            G.append(sum(self.a[j] * G[-1 - j] for j in range(self.d)))
        for K, value in enumerate(G):
            if value > n:
                return K
        return len(G) - 1

    def scaled_level(self, n: int) -> float:
        """G_n / alpha^n"""
        return _scaled(self.level(n), n, self.alpha)

    def companion_matrix(self) -> np.ndarray:
        return companion_matrix(self.coeffs)

    def second_root(self) -> float:
        """Conjugate root (a - sqrt(a^2 + 4b)) / 2 of an order-2 base"""
        if self.d != 2:
            raise IndexRangeError("second_root is defined for order 2 only", f"d={self.d}")
        a, b = self.a
        return (a - math.sqrt(a * a + 4 * b)) / 2

    def closed_form_order2(self, n: int) -> float:
        """kappa alpha^n + (1 - kappa) lambda_2^n for order-2 bases"""
        return self.kappa * self.alpha ** n + (1 - self.kappa) * self.second_root() ** n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "coeffs": list(self.a),
            "alpha": self.alpha,
            "kappa": self.kappa,
            "kappa_err": self.kappa_err,
            "pisot": self.pisot.value,
            "primitive": self.primitive,
            "G": [str(g) for g in self.G],
        }


def _scaled(value: int, n: int, alpha: float) -> float:
    try:
        return value / alpha ** n
    except OverflowError:
        return math.exp(math.log(value) - n * math.log(alpha))


def order2_kappa(a: int, b: int) -> float:
    """(a + 2 + sqrt(a^2 + 4b)) / (2 sqrt(a^2 + 4b))"""
    root = math.sqrt(a * a + 4 * b)
    return (a + 2 + root) / (2 * root)


def _estimate_kappa(G: Sequence[int], alpha: float, rho: Optional[float]) -> Tuple[float, float]:
    M = len(G) - 1
    scaled = [_scaled(G[n], n, alpha) for n in range(max(0, M - 10), M + 1)]
    kappa = scaled[-1]
    steps = [abs(scaled[i] - scaled[i + 1]) for i in range(len(scaled) - 1)]
    floor = 4 * np.finfo(float).eps * kappa
    if not steps:
        return kappa, floor
    if rho is None or rho <= 0:
        return kappa, max(steps[-1], floor)
    ratio = rho / alpha
    # C (rho/alpha)^M with C = max_n |s_n - s_{n+1}| (alpha/rho)^n over the last levels
    first = M - len(steps)
    bound = max(step * ratio ** (M - (first + i)) for i, step in enumerate(steps))
    return kappa, max(bound, floor)


@handle_gbase_error
def build_base(coeffs: RecurrenceCoefficients, max_level: int = DEFAULT_MAX_LEVEL) -> LinearRecurrenceBase:
    """
    Construct a base, rejecting coefficients that fail any rule

    Raises:
        CoefficientError: naming the failed rule
        IndexRangeError: when max_level < d
    """
    report = validate_coefficients(coeffs)
    if not report.passed:
        raise CoefficientError(f"Coefficients ({coeffs}) rejected", f"failed rule(s): {', '.join(report.failed_rules)}")
    if max_level < coeffs.d:
        raise IndexRangeError(f"max_level must be at least d={coeffs.d}", f"got {max_level}")

    G = _g_sequence(coeffs.a, max_level)
    alpha = perron_root(coeffs)
    residual = abs(sum(v / alpha ** (j + 1) for j, v in enumerate(coeffs.a)) - 1)
    if residual >= PERRON_TOLERANCE:
        logger.warning(f"⚠️  Perron identity residual {residual!r} for ({coeffs})")

    pisot = pisot_check(coeffs)
    if coeffs.d == 2:
        kappa = order2_kappa(*coeffs.a)
        kappa_err = 4 * np.finfo(float).eps * kappa
    else:
        kappa, kappa_err = _estimate_kappa(G, alpha, pisot.max_other_modulus)

    base = LinearRecurrenceBase(
        coeffs=coeffs,
        G=tuple(G),
        alpha=alpha,
        kappa=kappa,
        kappa_err=kappa_err,
        frak_a=coeffs.frak_a,
        pisot=pisot.verdict,
        primitive=report.primitive,
        perron_residual=residual,
        pisot_report=pisot,
    )
    logger.info(f"📐 Base ({coeffs}) built: alpha={alpha:.15g}, kappa={kappa:.12g}, "
                f"pisot={pisot.verdict.value}, levels=0..{max_level}")
    return base


def recurrence_residuals(base: LinearRecurrenceBase) -> List[int]:
    """Exact G_{n+d} - sum_j a_j G_{n+d-1-j} for every stored n"""
    d = base.d
    return [
        base.G[n + d] - sum(base.a[j] * base.G[n + d - 1 - j] for j in range(d))
        for n in range(base.max_level - d + 1)
    ]
