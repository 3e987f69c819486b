"""
Empirical Distributions

Brute-force ground truth over n < N: a digit odometer enumerating f(n),
empirical distribution functions, empirical characteristic functions,
Kolmogorov-Smirnov distances and the prefix-mean decomposition of
S(N) = sum_{n<N} exp(i t f(n)).
"""

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..base import LinearRecurrenceBase
from ..digits import greedy_expand
from ..gbase_exceptions import CapacityError, GBaseError, MismatchedDistributionError
from ..gfun import FunctionKind, GAdditiveFunction
from .transform import h_sequence

logger = logging.getLogger(__name__)

EXACT_LIMIT = 10 ** 7
SKETCH_RANK_ACCURACY = 1e-3
CHUNK_SIZE = 1 << 18


class DigitOdometer:
    """
    Walks n, n+1, ... keeping the greedy digits and f(n) up to date

    A carry at level K happens when the digits below K sum to G_K - 1;
    each level keeps the value of n at which that happens next, so every
    step touches only the levels that actually change.
    """

    def __init__(self, base: LinearRecurrenceBase, f: GAdditiveFunction, start: int = 0):
        if f.kind is FunctionKind.SUM:
            raise GBaseError("The odometer walks a single-family function", f.describe())
        top = base.max_level
        self._G = base.G
        self._top = top
        self._weights = [[f.weight(j, k) for j in range(base.frak_a + 1)] for k in range(top + 1)]

        digits = list(greedy_expand(base, start).digits)
        self._digits = digits + [0] * (top + 1 - len(digits))

        self._suffix = [0.0] * (top + 2)
        for k in range(top, -1, -1):
            self._suffix[k] = self._suffix[k + 1] + self._weights[k][self._digits[k]]

        self._deadline = [0] * (top + 1)
        self._due: Dict[int, List[int]] = {}
        prefix = 0
        for K in range(1, top + 1):
            prefix += self._digits[K - 1] * self._G[K - 1]
            self._schedule(K, start + self._G[K] - 1 - prefix)
        self.n = start

    def _schedule(self, level: int, when: int):
        self._deadline[level] = when
        self._due.setdefault(when, []).append(level)

    @property
    def value(self) -> float:
        return self._suffix[0]

    @property
    def digits(self) -> Tuple[int, ...]:
        end = len(self._digits)
        while end and self._digits[end - 1] == 0:
            end -= 1
        return tuple(self._digits[:end])

    def advance(self):
        n = self.n
        levels = self._due.pop(n, None)
        carry = 0
        if levels:
            carry = max((k for k in levels if self._deadline[k] == n), default=0)

        digits, suffix, weights = self._digits, self._suffix, self._weights
        if carry == 0:
            digits[0] += 1
            suffix[0] = suffix[1] + weights[0][digits[0]]
        else:
            if carry >= self._top:
                raise CapacityError(f"Odometer passed G_{self._top}", required_level=self._top + 1)
            for k in range(carry):
                digits[k] = 0
            digits[carry] += 1
            suffix[carry] = suffix[carry + 1] + weights[carry][digits[carry]]
            for k in range(carry):
                suffix[k] = suffix[carry]
            for k in range(1, carry + 1):
                self._schedule(k, n + self._G[k])
        self.n = n + 1

    def take(self, count: int) -> np.ndarray:
        """f(n), ..., f(n + count - 1), leaving the odometer at n + count"""
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            out[i] = self._suffix[0]
            self._advance_within_base()
        return out

    def _advance_within_base(self):
        if self.n + 1 < self._G[-1]:
            self.advance()
        else:
            self.n += 1


def _range_values(base: LinearRecurrenceBase, f: GAdditiveFunction, start: int, stop: int) -> np.ndarray:
    if f.kind is FunctionKind.SUM:
        first, second = f.parts
        return _range_values(base, first, start, stop) + _range_values(base, second, start, stop)
    if stop <= start:
        return np.empty(0, dtype=np.float64)
    return DigitOdometer(base, f, start).take(stop - start)


def _check_capacity(base: LinearRecurrenceBase, N: int):
    if N < 0:
        raise GBaseError("N must be nonnegative", f"N={N}")
    if N > base.G[-1]:
        raise CapacityError(f"N={N} exceeds G_{base.max_level}", required_level=base.required_level(N - 1))


def empirical_values(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int, workers: int = 1,
                     start: int = 0) -> np.ndarray:
    """f(n) for start <= n < N in order, enumerated in contiguous sub-ranges"""
    _check_capacity(base, N)
    bounds = list(range(start, N, CHUNK_SIZE)) + [N]
    ranges = list(zip(bounds[:-1], bounds[1:]))
    if not ranges:
        return np.empty(0, dtype=np.float64)

    def run(bound: Tuple[int, int]) -> np.ndarray:
        return _range_values(base, f, *bound)

    if workers <= 1 or len(ranges) == 1:
        chunks = [run(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(run, ranges))
    return np.concatenate(chunks)


def crosscheck_enumeration(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int,
                           samples: int = 10_000, seed: int = 0,
                           values: Optional[np.ndarray] = None) -> List[int]:
    """Integers among random n < N where the odometer disagrees with greedy evaluation"""
    if values is None:
        values = empirical_values(base, f, N)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, N, size=min(samples, N)) if N else []
    return [int(n) for n in picks if values[int(n)] != f.eval(base, int(n))]


@dataclass
class EmpiricalDistribution:
    """
    Distribution of f(n) for n < N

    In exact mode `values` holds every sample sorted; above the size
    threshold it holds a quantile sketch with per-entry `weights`.
    """
    N: int
    values: np.ndarray
    weights: Optional[np.ndarray]
    base_key: Tuple[int, ...]
    function_key: str
    mean_value: float
    variance_value: float

    @property
    def exact(self) -> bool:
        return self.weights is None

    def _cumulative(self) -> np.ndarray:
        if self.weights is None:
            return np.arange(1, self.values.shape[0] + 1, dtype=np.float64)
        return np.cumsum(self.weights, dtype=np.float64)

    def cdf(self, z) -> np.ndarray:
        """F_N(z) = #{n < N : f(n) <= z} / N"""
        points = np.atleast_1d(np.asarray(z, dtype=np.float64))
        if self.N == 0:
            return np.zeros_like(points)
        counts = np.searchsorted(self.values, points, side="right")
        cumulative = np.concatenate([[0.0], self._cumulative()])
        return cumulative[counts] / self.N

    def mean(self) -> float:
        return self.mean_value

    def variance(self) -> float:
        return self.variance_value

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise GBaseError("Quantile level must lie in [0, 1]", f"p={p!r}")
        if self.N == 0:
            raise GBaseError("Empty distribution has no quantiles")
        target = max(1, math.ceil(p * self.N))
        index = int(np.searchsorted(self._cumulative(), target, side="left"))
        return float(self.values[min(index, self.values.shape[0] - 1)])

    def comparable_with(self, other: 'EmpiricalDistribution') -> bool:
        return self.base_key == other.base_key and self.function_key == other.function_key

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "exact": self.exact,
            "support_points": int(self.values.shape[0]),
            "mean": self.mean_value,
            "variance": self.variance_value,
            "base": list(self.base_key),
            "function": self.function_key,
        }


def _sketch(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Keep every step-th order statistic of each chunk with the count it stands for"""
    kept, weights = [], []
    for start in range(0, values.shape[0], EXACT_LIMIT):
        chunk = np.sort(values[start:start + EXACT_LIMIT])
        step = max(1, math.ceil(chunk.shape[0] * SKETCH_RANK_ACCURACY))
        picks = np.arange(step - 1, chunk.shape[0], step)
        if picks.shape[0] == 0 or picks[-1] != chunk.shape[0] - 1:
            picks = np.append(picks, chunk.shape[0] - 1)
        counts = np.diff(np.concatenate([[-1], picks]))
        kept.append(chunk[picks])
        weights.append(counts.astype(np.float64))
    merged = np.concatenate(kept)
    merged_weights = np.concatenate(weights)
    order = np.argsort(merged, kind="stable")
    return merged[order], merged_weights[order]


def build_distribution(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int, workers: int = 1,
                       exact_limit: int = EXACT_LIMIT,
                       values: Optional[np.ndarray] = None) -> EmpiricalDistribution:
    if values is None:
        values = empirical_values(base, f, N, workers)
    else:
        values = values[:N]
    mean = float(values.mean()) if N else 0.0
    variance = float(values.var()) if N else 0.0
    if N <= exact_limit:
        stored, weights = np.sort(values, kind="stable"), None
    else:
        stored, weights = _sketch(values)
        logger.info(f"📉 Distribution for N={N} kept as a {stored.shape[0]}-point sketch")
    return EmpiricalDistribution(N=N, values=stored, weights=weights, base_key=base.key,
                                 function_key=f.describe(), mean_value=mean, variance_value=variance)


def empirical_cdf(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int, z_grid: Sequence[float],
                  workers: int = 1) -> List[Tuple[float, float]]:
    """(z, F_N(z)) at each grid point"""
    distribution = build_distribution(base, f, N, workers)
    return list(zip((float(z) for z in z_grid), (float(v) for v in distribution.cdf(list(z_grid)))))


def empirical_charfn(base: LinearRecurrenceBase, f: GAdditiveFunction, N: int, t: float,
                     values: Optional[np.ndarray] = None, workers: int = 1) -> complex:
    """(1/N) sum_{n<N} exp(i t f(n))"""
    if values is None:
        values = empirical_values(base, f, N, workers)
    if N == 0:
        raise GBaseError("Characteristic function needs N >= 1")
    return complex(np.exp(1j * t * values[:N]).sum() / N)


def direct_block_sum(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int,
                     values: Optional[np.ndarray] = None) -> complex:
    """sum_{m < G_k} exp(i t f(m)) by enumeration"""
    N = base.level(k)
    if values is None:
        values = empirical_values(base, f, N)
    return complex(np.exp(1j * t * values[:N]).sum())


def ks_distance(first: EmpiricalDistribution, second: EmpiricalDistribution) -> float:
    """sup_z |F_1(z) - F_2(z)| over the union of jump points"""
    if not first.comparable_with(second):
        raise MismatchedDistributionError(
            "Distributions come from different (base, f)",
            f"{first.base_key}/{first.function_key} vs {second.base_key}/{second.function_key}",
        )
    jumps = np.union1d(first.values, second.values)
    if jumps.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(first.cdf(jumps) - second.cdf(jumps))))


def chang_decomposition_residual(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, N: int,
                                 values: Optional[np.ndarray] = None) -> float:
    """
    Relative gap between S(N) summed directly and its prefix-mean decomposition

    S(N)/N = sum_q w_q(N) S(G_q)/G_q where w_q(N) carries the phases of
    the digits of N above q and the partial block sum at level q.
    """
    _check_capacity(base, N)
    if N == 0:
        return 0.0
    if values is None:
        values = empirical_values(base, f, N)
    direct = complex(np.exp(1j * t * values[:N]).sum())

    digits = greedy_expand(base, N).digits
    top = len(digits) - 1
    if top > base.max_level - 1:
        raise CapacityError(f"Decomposition of N={N} needs H_{top}", required_level=top + 1)
    trace = h_sequence(base, f, t, top)

    reconstructed = 0j
    upper_phase = 1 + 0j
    for q in range(top, -1, -1):
        block = 0j
        for j in range(digits[q]):
            block += upper_phase * cmath.exp(1j * t * f.weight(j, q))
        weight = block * base.G[q] / N
        reconstructed += weight * trace.H[q] / base.G[q]
        upper_phase *= cmath.exp(1j * t * f.weight(digits[q], q))

    gap = abs(direct - reconstructed * N)
    scale = abs(direct)
    return gap / scale if scale > 0 else gap
