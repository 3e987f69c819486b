"""
Canonical Series

Layer terms of the two canonical series, their order-2 and multinacci
forms, stability under addition and the atomicity diagnostic, each
wrapped in a report with a three-state convergence verdict.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

from ..base import LinearRecurrenceBase
from ..gbase_exceptions import CapacityError, CoefficientError, WrongOrderError
from ..gfun import GAdditiveFunction, sum_of

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
TAIL_WINDOW = 10


class SeriesVerdict(Enum):
    CONVERGED = "converged-numerically"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


class AtomicityVerdict(Enum):
    ATOMIC = "atomic-by-level"
    NOT_EVENTUALLY_ZERO = "not-eventually-zero"


@dataclass
class SeriesReport:
    """Layer terms with running sums, tail estimate and verdict"""
    name: str
    terms: List[float]
    partial_sums: List[float]
    tail_estimate: Optional[float]
    verdict: SeriesVerdict
    tolerance: float

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "total": self.total,
            "tail_estimate": self.tail_estimate if self.tail_estimate is not None else "unavailable",
            "verdict": self.verdict.value,
            "tolerance": self.tolerance,
        }


@dataclass
class Order2Report:
    first: SeriesReport
    second: SeriesReport
    special: Optional[SeriesReport]
    shift_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "first": self.first.to_dict(),
            "second": self.second.to_dict(),
            "special": self.special.to_dict() if self.special else None,
            "shift_residual": self.shift_residual,
        }


@dataclass
class StabilityReport:
    s1_residual: float
    s2_residual: float
    cross_term: float
    cs_bound: float

    @property
    def cs_holds(self) -> bool:
        return abs(self.cross_term) <= self.cs_bound * (1 + 1e-12) + 1e-300

    @property
    def cs_gap(self) -> float:
        return self.cs_bound - abs(self.cross_term)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s1_residual": self.s1_residual,
            "s2_residual": self.s2_residual,
            "cross_term": self.cross_term,
            "cs_bound": self.cs_bound,
            "cs_holds": self.cs_holds,
            "cs_gap": self.cs_gap,
        }


@dataclass
class PerturbationReport:
    s2_perturbation: float
    absolute_sum: float
    perturbation_verdict: SeriesVerdict
    stability: StabilityReport

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s2_perturbation": self.s2_perturbation,
            "absolute_sum": self.absolute_sum,
            "perturbation_verdict": self.perturbation_verdict.value,
            "stability": self.stability.to_dict(),
        }


@dataclass
class AtomicityReport:
    verdict: AtomicityVerdict
    level: Optional[int]
    j_max: int

    def __str__(self):
        if self.verdict is AtomicityVerdict.ATOMIC:
            return f"atomic-by-level-{self.level}"
        return f"not-eventually-zero-up-to-{self.j_max}"

    def to_dict(self) -> Dict[str, Any]:
        return {"verdict": self.verdict.value, "level": self.level, "j_max": self.j_max, "label": str(self)}


def _verdict(terms: Sequence[float], partial_sums: Sequence[float], tol: float) -> SeriesVerdict:
    """
    Heuristic three-state verdict

    Converged when the last ten terms are below tol and the doubling
    difference |S_N - S_{N/2}| is below tol; diverging only when the doubling
    differences do not shrink at all and the late terms are not decreasing.
    """
    N = len(terms)
    if N < 4:
        return SeriesVerdict.INCONCLUSIVE
    late = partial_sums[-1] - partial_sums[N // 2 - 1]
    early = partial_sums[N // 2 - 1] - partial_sums[N // 4 - 1]
    window = terms[-TAIL_WINDOW:]
    if N >= TAIL_WINDOW and all(abs(x) < tol for x in window) and abs(late) < tol:
        return SeriesVerdict.CONVERGED
    if abs(late) > tol and abs(late) >= abs(early) and abs(terms[-1]) >= abs(terms[N // 2]):
        return SeriesVerdict.DIVERGING
    return SeriesVerdict.INCONCLUSIVE


def _tail(terms: Sequence[float]) -> Optional[float]:
    """Geometric tail from the ratio of the last two terms"""
    if len(terms) < 2:
        return None
    last, previous = terms[-1], terms[-2]
    if last == 0.0 and previous == 0.0:
        return 0.0
    if previous == 0.0:
        return None
    q = last / previous
    if not 0 <= q < 1:
        return None
    return last * q / (1 - q)


def make_report(name: str, terms: Sequence[float], tol: float = DEFAULT_TOLERANCE) -> SeriesReport:
    partial_sums = []
    running = 0.0
    for x in terms:
        running += x
        partial_sums.append(running)
    return SeriesReport(
        name=name,
        terms=list(terms),
        partial_sums=partial_sums,
        tail_estimate=_tail(terms),
        verdict=_verdict(terms, partial_sums, tol),
        tolerance=tol,
    )


def _require(base: LinearRecurrenceBase, top: int, what: str):
    if top > base.max_level:
        raise CapacityError(f"{what} needs level {top}", required_level=top)


def _s1_layer(base: LinearRecurrenceBase, f: GAdditiveFunction, n: int) -> float:
    d, alpha, a = base.d, base.alpha, base.a
    total = 0.0
    for j in range(d):
        inner = 0.0
        carried = sum(f.weight(a[ell], n + d - ell) for ell in range(j))
        for k in range(a[j]):
            inner += f.weight(k, n + d - j) + carried
        total += inner / alpha ** j
    return total


def s1_layers(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int) -> List[float]:
    if N > 0:
        _require(base, N - 1 + base.d, "S1")
    return [_s1_layer(base, f, n) for n in range(N)]


def s2_layers(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int) -> List[float]:
    if N > 0:
        _require(base, N - 1, "S2")
    return [sum(f.weight(c, n) ** 2 for c in range(1, base.frak_a + 1)) for n in range(N)]


def s1_terms(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int,
             tol: float = DEFAULT_TOLERANCE) -> SeriesReport:
    """Layers M_n of the first canonical series"""
    return make_report("s1", s1_layers(base, f, N), tol)


def s2_terms(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int,
             tol: float = DEFAULT_TOLERANCE) -> SeriesReport:
    """Layers sum_{1<=c<=frak_a} f(c G_n)^2 of the second canonical series"""
    return make_report("s2", s2_layers(base, f, N), tol)


def multinacci_s1_terms(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int,
                        tol: float = DEFAULT_TOLERANCE) -> SeriesReport:
    """sum_{1<=j<d} alpha^{-j} sum_{ell<j} f(G_{n+d-ell}) for all-ones coefficients"""
    if any(value != 1 for value in base.a):
        raise CoefficientError("Multinacci form needs every coefficient equal to 1", f"({base.coeffs})")
    d, alpha = base.d, base.alpha
    if N > 0:
        _require(base, N - 1 + d, "multinacci S1")
    terms = []
    for n in range(N):
        total = 0.0
        for j in range(1, d):
            total += sum(f.weight(1, n + d - ell) for ell in range(j)) / alpha ** j
        terms.append(total)
    return make_report("s1-multinacci", terms, tol)


def order2_series(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int,
                  tol: float = DEFAULT_TOLERANCE) -> Order2Report:
    """
    Order-2 form of the canonical series

    first[n] = sum_{k<a} f(k G_{n+1}) + (1/alpha) sum_{k<b} (f(k G_n) + f(a G_{n+1})),
    which equals M_{n-1} from s1_terms. The special form for a = b or b = 1
    is returned alongside.
    """
    if base.d != 2:
        raise WrongOrderError("order2_series needs a base of order 2", f"d={base.d}")
    a, b = base.a
    alpha = base.alpha
    if N > 0:
        _require(base, N, "order-2 series")

    first = []
    for n in range(N):
        head = sum(f.weight(k, n + 1) for k in range(a))
        tail = sum(f.weight(k, n) + f.weight(a, n + 1) for k in range(b))
        first.append(head + tail / alpha)

    shifted = s1_layers(base, f, N - 1) if N > 1 else []
    shift_residual = max((abs(first[n + 1] - shifted[n]) for n in range(len(shifted))), default=0.0)

    special = None
    if a == b:
        terms = [(alpha + 1) * sum(f.weight(k, n) for k in range(a)) + a * f.weight(a, n) for n in range(N)]
        special = make_report("order2-special-a-eq-b", terms, tol)
    elif b == 1:
        terms = [alpha * sum(f.weight(k, n) for k in range(a)) + f.weight(a, n) for n in range(N)]
        special = make_report("order2-special-b-eq-1", terms, tol)

    return Order2Report(
        first=make_report("order2-first", first, tol),
        second=s2_terms(base, f, N, tol),
        special=special,
        shift_residual=shift_residual,
    )


def stability_report(base: LinearRecurrenceBase, f: GAdditiveFunction, g: GAdditiveFunction,
                     N: int) -> StabilityReport:
    """Linearity of S1, quadratic expansion of S2 and the Cauchy-Schwarz bound for f + g"""
    combined = sum_of(f, g)
    s1_f, s1_g, s1_fg = (s1_layers(base, h, N) for h in (f, g, combined))
    s2_f, s2_g, s2_fg = (s2_layers(base, h, N) for h in (f, g, combined))

    cross_layers = [
        sum(f.weight(c, n) * g.weight(c, n) for c in range(1, base.frak_a + 1))
        for n in range(N)
    ]
    s1_residual = max((abs(s1_fg[n] - s1_f[n] - s1_g[n]) for n in range(N)), default=0.0)
    s2_residual = max((abs(s2_fg[n] - s2_f[n] - s2_g[n] - 2 * cross_layers[n]) for n in range(N)), default=0.0)

    cross = math.fsum(cross_layers)
    bound = math.sqrt(math.fsum(s2_f)) * math.sqrt(math.fsum(s2_g))
    return StabilityReport(s1_residual=s1_residual, s2_residual=s2_residual, cross_term=cross, cs_bound=bound)


def perturbation_report(base: LinearRecurrenceBase, f: GAdditiveFunction, g: GAdditiveFunction,
                        N: int, tol: float = DEFAULT_TOLERANCE) -> PerturbationReport:
    """Size of a perturbation g through S2[g] and sum |g(c G_n)|, with the stability report of f + g"""
    s2_g = s2_terms(base, g, N, tol)
    absolute = math.fsum(abs(g.weight(c, n)) for n in range(N) for c in range(1, base.frak_a + 1))
    return PerturbationReport(
        s2_perturbation=s2_g.total,
        absolute_sum=absolute,
        perturbation_verdict=s2_g.verdict,
        stability=stability_report(base, f, g, N),
    )


def atomicity_check(f: GAdditiveFunction, j_max: int) -> AtomicityReport:
    """Smallest J <= j_max with f(c G_j) = 0 for every digit c and every j >= J"""
    bound = f.support_bound()
    if bound is None:
        return AtomicityReport(AtomicityVerdict.NOT_EVENTUALLY_ZERO, None, j_max)
    J = bound
    while J > 0 and all(f.weight(c, J - 1) == 0.0 for c in range(1, f.max_digit + 1)):
        J -= 1
    if J > j_max:
        return AtomicityReport(AtomicityVerdict.NOT_EVENTUALLY_ZERO, None, j_max)
    return AtomicityReport(AtomicityVerdict.ATOMIC, J, j_max)
