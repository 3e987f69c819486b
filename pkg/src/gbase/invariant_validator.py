"""
Invariant Validator - Numeric Self-Verification

Runs named suites of invariant checks against the test bases (1,1),
(1,1,1) and (2,1) with the damped geometric and polynomial families,
recording each check and producing a standardized report.
"""

import itertools
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.config import RunConfig, closed_grid

from .analysis.empirical import (
    build_distribution, chang_decomposition_residual, crosscheck_enumeration,
    empirical_charfn, empirical_values, ks_distance,
)
from .analysis.series import order2_series, s1_layers, s2_terms, stability_report
from .analysis.transform import (
    companion_at, contraction_constant, h_sequence, kernel_coefficients, verify_uk_identity,
)
from .base import (
    LinearRecurrenceBase, PisotVerdict, RecurrenceCoefficients, build_base,
    is_primitive_bruteforce, pisot_check, recurrence_residuals, validate_coefficients,
)
from .digits import block_decompose, decode, greedy_expand, is_admissible, theta
from .gfun import GAdditiveFunction, geom_damped, poly_damped, sum_of

logger = logging.getLogger(__name__)

TEST_COEFFS = ((1, 1), (1, 1, 1), (2, 1))
SUITES = ("base", "digits", "gfun", "transform", "series", "empirical")


class CheckStatus(Enum):
    """Outcome of a single invariant check"""
    PASSED = "passed"
    FAILED = "failed"


@dataclass
class CheckResult:
    suite: str
    name: str
    status: CheckStatus
    detail: str = ""
    seconds: float = 0.0
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "name": self.name,
            "status": self.status.value,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


CheckOutcome = Tuple[bool, str]


def geometric_family(base: LinearRecurrenceBase) -> GAdditiveFunction:
    return geom_damped(0.5, [1.0], max_digit=base.frak_a)


def polynomial_family(base: LinearRecurrenceBase) -> GAdditiveFunction:
    return poly_damped(2.0, [1.0], max_digit=base.frak_a)


class InvariantValidator:
    """
    Invariant suites over the test bases

    Provides:
    - Base construction and Pisot checks
    - Exhaustive digit-layer checks
    - Recurrence-versus-enumeration oracles
    - Exact identity residuals
    - Series closed forms and convergence witnesses
    """

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = config or RunConfig()
        self.results: List[CheckResult] = []
        self.validation_lock = threading.RLock()
        self._bases: Dict[Tuple[Tuple[int, ...], int], LinearRecurrenceBase] = {}
        self._values: Dict[Tuple[Tuple[int, ...], str], np.ndarray] = {}
        logger.debug("🔍 InvariantValidator initialized")

    def base(self, coeffs: Tuple[int, ...], max_level: int = 80) -> LinearRecurrenceBase:
        key = (coeffs, max_level)
        if key not in self._bases:
            self._bases[key] = build_base(RecurrenceCoefficients(coeffs), max_level)
        return self._bases[key]

    def values(self, base: LinearRecurrenceBase, f: GAdditiveFunction, N: int) -> np.ndarray:
        """Cached enumeration of f over [0, N)"""
        key = (base.key, f.describe())
        cached = self._values.get(key)
        if cached is None or cached.shape[0] < N:
            cached = empirical_values(base, f, N, workers=1)
            self._values[key] = cached
        return cached

    def run(self, suite: str = "all") -> Dict[str, Any]:
        """
        Run one suite or all of them

        Returns:
            Dict with suite, status, message, checks and failures
        """
        names = SUITES if suite == "all" else (suite,)
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            return self._create_report(suite, CheckStatus.FAILED, f"Unknown suite {unknown[0]!r}", [])

        with self.validation_lock:
            start = len(self.results)
            for name in names:
                logger.info(f"🔍 Running suite {name}")
                for check_name, check in self._suite_checks(name):
                    self._run_check(name, check_name, check)
            recorded = self.results[start:]

        status = self._determine_overall_status(recorded)
        return self._create_report(suite, status, self._get_status_message(status, recorded), recorded)

    def _run_check(self, suite: str, name: str, check: Callable[[], CheckOutcome]):
        began = time.perf_counter()
        try:
            ok, detail = check()
            status = CheckStatus.PASSED if ok else CheckStatus.FAILED
        except Exception as e:
            status, detail = CheckStatus.FAILED, f"Validation failed: {type(e).__name__}: {e}"
        result = CheckResult(suite, name, status, detail, time.perf_counter() - began)
        self.results.append(result)
        icon = "✅" if status is CheckStatus.PASSED else "❌"
        logger.info(f"{icon} {suite}/{name}: {detail}")

    def _determine_overall_status(self, results: List[CheckResult]) -> CheckStatus:
        if any(r.status is CheckStatus.FAILED for r in results):
            return CheckStatus.FAILED
        return CheckStatus.PASSED

    def _get_status_message(self, status: CheckStatus, results: List[CheckResult]) -> str:
        failed = sum(1 for r in results if r.status is CheckStatus.FAILED)
        if status is CheckStatus.PASSED:
            return f"All {len(results)} checks passed"
        return f"{failed} of {len(results)} checks failed"

    def _create_report(self, suite: str, status: CheckStatus, message: str,
                       results: List[CheckResult]) -> Dict[str, Any]:
        return {
            "suite": suite,
            "status": status.value,
            "message": message,
            "checks": [r.to_dict() for r in results],
            "failures": [r.name for r in results if r.status is CheckStatus.FAILED],
            "timestamp": datetime.now().isoformat(),
        }

    def _suite_checks(self, suite: str) -> List[Tuple[str, Callable[[], CheckOutcome]]]:
        return getattr(self, f"_{suite}_checks")()

    # base

    def _base_checks(self):
        checks = []
        for coeffs in TEST_COEFFS:
            checks.append((f"recurrence_exact{coeffs}", lambda c=coeffs: self._check_recurrence(c)))
            checks.append((f"perron_root{coeffs}", lambda c=coeffs: self._check_perron(c)))
        checks.append(("primitivity_oracle", self._check_primitivity))
        checks.append(("kappa_order2", self._check_kappa))
        checks.append(("pisot_verdicts", self._check_pisot))
        return checks

    def _check_recurrence(self, coeffs) -> CheckOutcome:
        residuals = recurrence_residuals(self.base(coeffs))
        bad = [n for n, r in enumerate(residuals) if r != 0]
        return not bad, f"{len(residuals)} exact steps, {len(bad)} nonzero"

    def _check_perron(self, coeffs) -> CheckOutcome:
        base = self.base(coeffs)
        inside = base.a[0] < base.alpha < base.frak_a + 1
        return inside and base.perron_residual < 1e-12, \
            f"alpha={base.alpha!r}, residual={base.perron_residual:.3g}"

    def _check_primitivity(self) -> CheckOutcome:
        mismatches = []
        tested = 0
        for d in range(2, 5):
            for a in itertools.product(range(3), repeat=d):
                if a[0] < 1 or a[-1] < 1:
                    continue
                coeffs = RecurrenceCoefficients(a)
                tested += 1
                if validate_coefficients(coeffs).primitive != is_primitive_bruteforce(coeffs):
                    mismatches.append(a)
        return not mismatches, f"{tested} vectors, mismatches={mismatches[:5]}"

    def _check_kappa(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in ((1, 1), (2, 1)):
            base = self.base(coeffs)
            worst = max(worst, abs(base.kappa - base.scaled_level(60)) / base.kappa)
        zeck = self.base((1, 1))
        closed = (3 + math.sqrt(5)) / (2 * math.sqrt(5))
        return worst < 1e-8 and abs(zeck.kappa - closed) < 1e-12, \
            f"max relative gap to G_60/alpha^60 = {worst:.3g}"

    def _check_pisot(self) -> CheckOutcome:
        expected = {(1, 1): PisotVerdict.YES, (2, 1): PisotVerdict.YES, (1, 1, 1): PisotVerdict.YES}
        got = {c: self.base(c).pisot for c in expected}
        non_pisot = pisot_check(RecurrenceCoefficients((1, 2))).verdict
        ok = got == expected and non_pisot is PisotVerdict.NO
        verdicts = ", ".join(f"{k}->{v.value}" for k, v in got.items())
        return ok, f"{verdicts}, (1, 2)->{non_pisot.value}"

    # digits

    def _digits_checks(self):
        checks = []
        for coeffs in TEST_COEFFS:
            checks.append((f"round_trip{coeffs}", lambda c=coeffs: self._check_round_trip(c)))
            checks.append((f"admissible_count{coeffs}", lambda c=coeffs: self._check_admissible_count(c)))
            checks.append((f"block_bijection{coeffs}", lambda c=coeffs: self._check_block_bijection(c)))
        return checks

    def _check_round_trip(self, coeffs) -> CheckOutcome:
        base = self.base(coeffs)
        bad = [n for n in range(base.G[12]) if decode(base, greedy_expand(base, n)) != n]
        return not bad, f"[0, {base.G[12]}) failures={bad[:5]}"

    def _check_admissible_count(self, coeffs) -> CheckOutcome:
        base = self.base(coeffs)
        count = sum(1 for word in itertools.product(range(base.frak_a + 1), repeat=10)
                    if is_admissible(base, word))
        return count == base.G[10], f"{count} admissible words of length 10, G_10={base.G[10]}"

    def _check_block_bijection(self, coeffs) -> CheckOutcome:
        base = self.base(coeffs)
        for n in range(7):
            m = n + base.d - 1
            seen = set()
            for u in range(base.G[n + base.d]):
                ell, k, v = block_decompose(base, n, u)
                if theta(base, m, ell) + k * base.G[m - ell] + v != u:
                    return False, f"reconstruction failed at n={n}, u={u}"
                seen.add((ell, k, v))
            if len(seen) != base.G[n + base.d]:
                return False, f"not injective at n={n}"
        return True, "levels 0..6 bijective"

    # gfun

    def _gfun_checks(self):
        return [
            ("additivity", self._check_additivity),
            ("unit_phase", self._check_unit_phase),
            ("sum_exact", self._check_sum_exact),
        ]

    def _check_additivity(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            f = geometric_family(base)
            for n in range(1, base.G[10]):
                digits = greedy_expand(base, n).digits
                top = len(digits) - 1
                m = n - digits[top] * base.G[top]
                worst = max(worst, abs(f.eval(base, n) - f.eval(base, m) - f.weight(digits[top], top)))
        return worst < 1e-12, f"max deviation {worst:.3g}"

    def _check_unit_phase(self) -> CheckOutcome:
        base = self.base((1, 1))
        f = polynomial_family(base)
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(0, base.G[40]))
            t = float(rng.uniform(-10, 10))
            worst = max(worst, abs(abs(f.phase(base, n, t)) - 1))
        return worst < 1e-15, f"max | |g| - 1 | = {worst:.3g}"

    def _check_sum_exact(self) -> CheckOutcome:
        base = self.base((2, 1))
        f, g = geometric_family(base), polynomial_family(base)
        h = sum_of(f, g)
        rng = np.random.default_rng(11)
        picks = [int(n) for n in rng.integers(0, base.G[30], size=1000)]
        bad = [n for n in picks if h.eval(base, n) != f.eval(base, n) + g.eval(base, n)]
        return not bad, f"{len(bad)} inexact of {len(picks)}"

    # transform

    def _transform_checks(self):
        return [
            ("oracle_equivalence", self._check_oracle),
            ("t0_exactness", self._check_t0),
            ("hermitian_symmetry", self._check_hermitian),
            ("uk_identity", self._check_uk_identity),
            ("spectral_dissipation", self._check_spectral),
            ("contraction_kernel", self._check_kernel),
        ]

    def _check_oracle(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            f = geometric_family(base)
            K = max(k for k in range(base.max_level + 1) if base.G[k] <= 2 * 10 ** 5)
            values = self.values(base, f, base.G[K])
            for t in (0.3, 1.0, 2.5):
                trace = h_sequence(base, f, t, K)
                phases = np.exp(1j * t * values)
                for k in range(K + 1):
                    brute = complex(phases[:base.G[k]].sum())
                    worst = max(worst, abs(trace.H[k] - brute) / abs(brute))
        return worst < self.config.oracle_tolerance, f"max relative gap {worst:.3g}"

    def _check_t0(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            trace = h_sequence(base, geometric_family(base), 0.0, 60)
            worst = max(worst, max(abs(trace.H[k] - base.G[k]) / base.G[k] for k in range(61)))
        return worst < 1e-9, f"max relative gap {worst:.3g}"

    def _check_hermitian(self) -> CheckOutcome:
        base = self.base((1, 1, 1))
        f = polynomial_family(base)
        worst = 0.0
        for t in (0.4, 1.3, 2.2):
            plus, minus = h_sequence(base, f, t, 30), h_sequence(base, f, -t, 30)
            worst = max(worst, max(abs(p - m.conjugate()) / max(1.0, abs(p)) for p, m in zip(plus.H, minus.H)))
        return worst < 1e-12, f"max gap {worst:.3g}"

    def _check_uk_identity(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            for f in (geometric_family(base), polynomial_family(base)):
                for t in (0.5, 1.0):
                    trace = h_sequence(base, f, t, 30)
                    for k in range(2 * base.d, 31):
                        worst = max(worst, verify_uk_identity(base, f, t, k, trace))
        return worst < self.config.identity_tolerance, f"max residual {worst:.3g}"

    def _check_spectral(self) -> CheckOutcome:
        base = self.base((1, 1))
        f = geometric_family(base)
        worst_excess, worst_t0 = -math.inf, 0.0
        for n in range(base.d - 1, 21):
            worst_t0 = max(worst_t0, abs(companion_at(base, f, 0.0, n).lam - base.alpha))
            for t in closed_grid((-2.0, 2.0, 0.25)):
                companion = companion_at(base, f, t, n)
                if companion.Q < 0:
                    return False, f"negative block energy at n={n}"
                worst_excess = max(worst_excess, abs(companion.lam) - base.alpha)
        return worst_excess <= 1e-12 and worst_t0 < 1e-12, \
            f"max |lambda|-alpha={worst_excess:.3g}, |lambda(0)-alpha|={worst_t0:.3g}"

    def _check_kernel(self) -> CheckOutcome:
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            L = contraction_constant(base)
            if not 0 < L < 1 / (base.d - 1):
                return False, f"L={L!r} out of range for {coeffs}"
        report = kernel_coefficients(self.base((1, 1)), 60)
        golden = (1 + math.sqrt(5)) / 2
        return abs(report.partial_sum - golden) < 1e-10, f"Zeckendorf kernel sum {report.partial_sum!r}"

    # series

    def _series_checks(self):
        return [
            ("s2_closed_forms", self._check_s2_closed),
            ("linearity", self._check_linearity),
            ("order2_shift", self._check_order2_shift),
        ]

    def _check_s2_closed(self) -> CheckOutcome:
        base = self.base((1, 1), max_level=210)
        geom = s2_terms(base, geometric_family(base), 60, self.config.series_tolerance).total
        poly = s2_terms(base, polynomial_family(base), 200, self.config.series_tolerance).total
        ok = abs(geom - 4 / 3) < 1e-12 and abs(poly - math.pi ** 4 / 90) < 1e-6
        return ok, f"geom={geom!r}, poly={poly!r}"

    def _check_linearity(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            report = stability_report(base, geometric_family(base), polynomial_family(base), 40)
            worst = max(worst, report.s1_residual, report.s2_residual)
            if not report.cs_holds:
                return False, f"Cauchy-Schwarz violated for {coeffs}"
        return worst < 1e-12, f"max residual {worst:.3g}"

    def _check_order2_shift(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in ((1, 1), (2, 1)):
            base = self.base(coeffs)
            for f in (geometric_family(base), polynomial_family(base)):
                worst = max(worst, order2_series(base, f, 40).shift_residual)
        return worst < 1e-12, f"max shift residual {worst:.3g}"

    # empirical

    def _empirical_checks(self):
        return [
            ("odometer_crosscheck", self._check_odometer),
            ("prefix_consistency", self._check_prefix_consistency),
            ("chang_decomposition", self._check_chang),
            ("ks_witness", self._check_ks),
        ]

    def _check_odometer(self) -> CheckOutcome:
        bad = []
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            f = polynomial_family(base)
            N = 10 ** 5
            bad.extend(crosscheck_enumeration(base, f, N, values=self.values(base, f, N)))
        return not bad, f"{len(bad)} disagreements"

    def _check_prefix_consistency(self) -> CheckOutcome:
        worst = 0.0
        for coeffs in TEST_COEFFS:
            base = self.base(coeffs)
            f = geometric_family(base)
            K = max(k for k in range(base.max_level + 1) if base.G[k] <= 2 * 10 ** 5)
            values = self.values(base, f, base.G[K])
            for t in (0.7, 1.9):
                trace = h_sequence(base, f, t, K)
                for k in range(1, K + 1):
                    empirical = empirical_charfn(base, f, base.G[k], t, values=values)
                    worst = max(worst, abs(empirical - trace.H[k] / base.G[k]))
        return worst < 1e-10, f"max gap {worst:.3g}"

    def _check_chang(self) -> CheckOutcome:
        rng = np.random.default_rng(2024)
        picks = [int(n) for n in rng.integers(1, 10 ** 6, size=20)]
        worst = 0.0
        for coeffs in ((1, 1), (1, 1, 1)):
            base = self.base(coeffs)
            for f in (geometric_family(base), polynomial_family(base)):
                values = self.values(base, f, max(picks))
                for N in picks:
                    for t in (0.5, 1.0):
                        worst = max(worst, chang_decomposition_residual(base, f, t, N, values=values))
        return worst < 1e-9, f"max relative residual {worst:.3g}"

    def _check_ks(self) -> CheckOutcome:
        base = self.base((1, 1))
        f = geometric_family(base)
        values = self.values(base, f, base.G[20])
        distances = []
        for k in range(10, 19, 2):
            first = build_distribution(base, f, base.G[k], values=values)
            second = build_distribution(base, f, base.G[k + 2], values=values)
            distances.append(ks_distance(first, second))
        decreasing = all(a > b for a, b in zip(distances, distances[1:]))
        return decreasing and distances[-1] < 0.02, f"distances={[round(x, 5) for x in distances]}"
