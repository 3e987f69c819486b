"""
Characteristic Function Engine

Computes the block sums sigma, the H-recurrence with its block ratios,
the epsilon/u sequences, partial products of the limit characteristic
function, perturbed companion matrices and the contraction/kernel constants.
"""

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..base import LinearRecurrenceBase
from ..digits import greedy_expand
from ..gbase_exceptions import (
    CapacityError, EigenvalueTrackingError, GBaseError,
    IdentityUnavailableError, IndexRangeError, handle_gbase_error,
)
from ..gfun import GAdditiveFunction

logger = logging.getLogger(__name__)

UNDEFINED_RATIO = 1e-300
CONTINUATION_STEP = 0.05
NEWTON_ITERATIONS = 50


@dataclass
class TransformTrace:
    """
    H_0..H_K with the derived sequences, index-aligned by level

    r[0] = 1 by convention; r[k], eps[k] are None where H_{k-1} vanishes and
    u[k] is None for k < d.
    """
    t: float
    K: int
    H: List[complex]
    r: List[Optional[complex]]
    eps: List[Optional[complex]]
    u: List[Optional[complex]]
    phi_partial: List[complex]
    undefined_ratios: List[int] = field(default_factory=list)

    @property
    def phi(self) -> complex:
        return self.phi_partial[self.K]

    @property
    def last_increment(self) -> Optional[float]:
        if self.K < 1:
            return None
        return abs(self.phi_partial[self.K] - self.phi_partial[self.K - 1])

    def ratio(self, k: int) -> complex:
        value = self.r[k]
        if value is None:
            raise IdentityUnavailableError(f"Block ratio r_{k} undefined at t={self.t!r}")
        return value

    def epsilon(self, k: int) -> complex:
        value = self.eps[k]
        if value is None:
            raise IdentityUnavailableError(f"epsilon_{k} undefined at t={self.t!r}")
        return value

    def to_dict(self) -> Dict[str, Any]:
        def pair(z):
            return None if z is None else [z.real, z.imag]
        return {
            "t": self.t,
            "K": self.K,
            "H": [pair(z) for z in self.H],
            "r": [pair(z) for z in self.r],
            "eps": [pair(z) for z in self.eps],
            "u": [pair(z) for z in self.u],
            "phi_partial": [pair(z) for z in self.phi_partial],
            "undefined_ratios": list(self.undefined_ratios),
        }


@dataclass
class PerturbedCompanion:
    """A_n(t) with its tracked Perron eigenvalue and block energy"""
    n: int
    t: float
    entries: np.ndarray
    lam: complex
    Q: float
    method: str

    def first_row(self) -> List[complex]:
        return [complex(z) for z in self.entries[0]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "t": self.t,
            "first_row": [[z.real, z.imag] for z in self.first_row()],
            "lambda": [self.lam.real, self.lam.imag],
            "abs_lambda": abs(self.lam),
            "Q": self.Q,
            "method": self.method,
        }


@dataclass
class KernelReport:
    L: float
    b: List[float]
    partial_sum: float
    total: float

    @property
    def tail(self) -> float:
        return self.total - self.partial_sum

    def to_dict(self) -> Dict[str, Any]:
        return {"L": self.L, "b": list(self.b), "partial_sum": self.partial_sum,
                "total": self.total, "tail": self.tail}


@dataclass
class DissipationProfile:
    t: float
    levels: List[int]
    ratios: List[float]
    energies: List[float]
    fitted_c0: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "levels": list(self.levels), "abs_lambda_over_alpha": list(self.ratios),
                "Q": list(self.energies), "fitted_c0": self.fitted_c0}


@dataclass
class ProductPoint:
    """Phi_K(t) on a frequency grid"""
    t: float
    phi: complex
    last_increment: Optional[float]
    K: int


def _check_levels(base: LinearRecurrenceBase, top: int, what: str):
    if top > base.max_level:
        raise CapacityError(f"{what} needs level {top}", required_level=top)


def sigma(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, q: int, ell: int) -> complex:
    """sigma_{q,ell}(t) = sum_{h < a_ell} exp(i t f(h G_{q-ell}))"""
    if ell < 0 or ell >= base.d or q < ell:
        raise IndexRangeError(f"sigma_{{{q},{ell}}} needs 0 <= ell < d and q >= ell")
    _check_levels(base, q - ell, "sigma")
    level = q - ell
    total = 0j
    for h in range(base.a[ell]):
        total += cmath.exp(1j * t * f.weight(h, level))
    return total


def block_coefficient(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, q: int, ell: int) -> complex:
    """c_{q,ell}(t) = g_t(theta_{q,ell}) sigma_{q,ell}(t)"""
    if ell == 0:
        return sigma(base, f, t, q, 0)
    _check_levels(base, q, "block coefficient")
    return cmath.exp(1j * t * f.block_value(base, q, ell)) * sigma(base, f, t, q, ell)


def block_coefficients(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, q: int) -> List[complex]:
    return [block_coefficient(base, f, t, q, ell) for ell in range(base.d)]


def h_sequence(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, K: int) -> TransformTrace:
    """
    H_k(t) = sum_{m < G_k} exp(i t f(m)) for k <= K

    H_0..H_{d-1} are summed directly; higher levels follow the block
    recurrence H_k = sum_ell c_{k-1,ell} H_{k-1-ell}.
    """
    if K < 0:
        raise IndexRangeError(f"K={K} must be nonnegative")
    if K > base.max_level - 1:
        raise CapacityError(f"h_sequence up to K={K} exceeds the base", required_level=K + 1)

    d = base.d
    alpha = base.alpha
    H: List[complex] = []
    for k in range(min(d, K + 1)):
        total = 0j
        for m in range(base.G[k]):
            total += cmath.exp(1j * t * f.eval_digits(greedy_expand(base, m)))
        H.append(total)

    u: List[Optional[complex]] = [None] * (K + 1)
    for k in range(d, K + 1):
        coefficients = block_coefficients(base, f, t, k - 1)
        H.append(sum(coefficients[ell] * H[k - 1 - ell] for ell in range(d)))
        u[k] = _u_from_coefficients(base, coefficients)

    r: List[Optional[complex]] = [1 + 0j] + [None] * K
    eps: List[Optional[complex]] = [None] * (K + 1)
    undefined = []
    for k in range(1, K + 1):
        if abs(H[k - 1]) < UNDEFINED_RATIO:
            undefined.append(k)
            continue
        r[k] = H[k] / H[k - 1]
        eps[k] = r[k] - alpha
    if undefined:
        logger.warning(f"⚠️  Block ratio undefined at k={undefined} (t={t!r})")

    phi_partial = [H[k] / (base.kappa * alpha ** k) for k in range(K + 1)]
    return TransformTrace(t=t, K=K, H=H, r=r, eps=eps, u=u, phi_partial=phi_partial,
                          undefined_ratios=undefined)


def _u_from_coefficients(base: LinearRecurrenceBase, coefficients: Sequence[complex]) -> complex:
    alpha = base.alpha
    d = base.d
    total = 0j
    for ell in range(d):
        total += (coefficients[ell] - base.a[ell]) / alpha ** (ell + 1)
    return alpha ** d * total


def u_k(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int) -> complex:
    """u_k = alpha^d sum_ell (c_{k-1,ell} - a_ell) / alpha^{ell+1}"""
    if k < base.d:
        raise IndexRangeError(f"u_k needs k >= d={base.d}", f"k={k}")
    return _u_from_coefficients(base, block_coefficients(base, f, t, k - 1))


def _trace_for(base, f, t, k, trace: Optional[TransformTrace]) -> TransformTrace:
    if trace is not None and trace.K >= k and trace.t == t:
        return trace
    return h_sequence(base, f, t, k)


def _second_order_product(alpha: float, d: int, ell: int, eps_back: Sequence[complex]) -> complex:
    """
    Terms of degree >= 2 in the epsilons of prod_{j=ell+1}^{d-1} (alpha + eps_{k-j})

    eps_back[j] holds eps_{k-j}.
    """
    indices = range(ell + 1, d)
    total = 0j
    for m in range(2, d - ell):
        weight = alpha ** (d - ell - m - 1)
        for subset in combinations(indices, m):
            product = 1 + 0j
            for j in subset:
                product *= eps_back[j]
            total += weight * product
    return total


def verify_uk_identity(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int,
                       trace: Optional[TransformTrace] = None) -> float:
    """
    |u_k - (alpha^{d-2} sum_j (alpha - tau_{k,j}) eps_{k-j} + R_k)|

    tau_{k,j} = sum_{m<j} c_{k-1,m} / alpha^m and R_k collects the
    second-order products of the epsilons.
    """
    d = base.d
    if k < 2 * d:
        raise IndexRangeError(f"u_k identity needs k >= 2d={2 * d}", f"k={k}")
    trace = _trace_for(base, f, t, k, trace)
    alpha = base.alpha
    eps_back = [trace.epsilon(k - j) for j in range(d)]
    c = block_coefficients(base, f, t, k - 1)

    tau = [sum(c[m] / alpha ** m for m in range(j)) for j in range(d)]
    linear = alpha ** (d - 2) * sum((alpha - tau[j]) * eps_back[j] for j in range(d))

    eps_k = eps_back[0]
    remainder = (alpha + eps_k) * _second_order_product(alpha, d, 0, eps_back)
    remainder += alpha ** (d - 2) * sum(eps_back[j] for j in range(1, d)) * eps_k
    remainder -= sum(c[m] * _second_order_product(alpha, d, m, eps_back) for m in range(d))

    lhs = _u_from_coefficients(base, c)
    return abs(lhs - (linear + remainder))


def ratio_recurrence_residual(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int,
                              trace: Optional[TransformTrace] = None) -> float:
    """|r_k - sum_ell c_{k-1,ell} prod_{1<=s<=ell} 1/r_{k-s}|"""
    d = base.d
    if k < d:
        raise IndexRangeError(f"Ratio recurrence needs k >= d={d}", f"k={k}")
    trace = _trace_for(base, f, t, k, trace)
    c = block_coefficients(base, f, t, k - 1)
    total = 0j
    for ell in range(d):
        product = 1 + 0j
        for s in range(1, ell + 1):
            product /= trace.ratio(k - s)
        total += c[ell] * product
    return abs(trace.ratio(k) - total)


def epsilon_recursion_residual(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int,
                               trace: Optional[TransformTrace] = None) -> float:
    """
    |eps_k - (u_k + sum_ell c_{k-1,ell} Pihat_{k,ell} - alpha Pihat_{k,0}) / Pi_{k,0}|

    Pi_{k,ell} = r_{k-d+1} ... r_{k-ell-1} and Pihat_{k,ell} = Pi_{k,ell} - alpha^{d-ell-1}.
    """
    d = base.d
    if k < d:
        raise IndexRangeError(f"Epsilon recursion needs k >= d={d}", f"k={k}")
    trace = _trace_for(base, f, t, k, trace)
    alpha = base.alpha
    c = block_coefficients(base, f, t, k - 1)

    def pi(ell: int) -> complex:
        product = 1 + 0j
        for j in range(ell + 1, d):
            product *= trace.ratio(k - j)
        return product

    pi_hat = [pi(ell) - alpha ** (d - ell - 1) for ell in range(d)]
    numerator = _u_from_coefficients(base, c) + sum(c[ell] * pi_hat[ell] for ell in range(d)) - alpha * pi_hat[0]
    return abs(trace.epsilon(k) - numerator / pi(0))


def contraction_constant(base: LinearRecurrenceBase) -> float:
    """One-step contraction constant L, with 0 < L < 1/(d-1)"""
    d = base.d
    alpha = base.alpha
    if d == 2:
        L = 1 - base.a[0] / alpha
    else:
        L = (2 - 2 * base.a[0] / alpha - base.a[-1] / alpha ** d) / (2 * (d - 1))
    if not 0 < L < 1 / (d - 1):
        raise GBaseError(f"Contraction constant {L!r} outside (0, 1/(d-1))", f"base ({base.coeffs})")
    return L


def one_step_bound_margin(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, k: int,
                          trace: Optional[TransformTrace] = None) -> float:
    """|u_k| + L sum_{1<=j<d} |eps_{k-j}| - |eps_k|"""
    d = base.d
    if k < 2 * d - 1:
        raise IndexRangeError(f"One-step bound needs k >= 2d-1={2 * d - 1}", f"k={k}")
    trace = _trace_for(base, f, t, k, trace)
    L = contraction_constant(base)
    return (abs(u_k(base, f, t, k)) + L * sum(abs(trace.epsilon(k - j)) for j in range(1, d))
            - abs(trace.epsilon(k)))


def kernel_coefficients(base: LinearRecurrenceBase, N: int) -> KernelReport:
    """b_0 = 1, b_n = L sum_{j=1}^{d-1} b_{n-j}; analytic total 1/(1 - L(d-1))"""
    d = base.d
    L = contraction_constant(base)
    b = [1.0]
    for n in range(1, N + 1):
        b.append(L * sum(b[n - j] for j in range(1, d) if n - j >= 0))
    partial = 0.0
    for value in b:
        partial += value
    return KernelReport(L=L, b=b, partial_sum=partial, total=1 / (1 - L * (d - 1)))


def block_energy(base: LinearRecurrenceBase, f: GAdditiveFunction, n: int) -> float:
    """Q_n = sum_{r<d} sum_{1<=c<=frak_a} f(c G_{n-r})^2"""
    total = 0.0
    for r in range(base.d):
        for c in range(1, base.frak_a + 1):
            total += f.weight(c, n - r) ** 2
    return total


def _track_eigenvalue(first_row_at, d: int, alpha: float, t: float) -> Optional[complex]:
    """Newton continuation in s from 0 to t for the root of x^d - sum c_ell(s) x^{d-1-ell} near alpha"""
    steps = max(1, math.ceil(abs(t) / CONTINUATION_STEP))
    lam = complex(alpha)
    for i in range(1, steps + 1):
        c = first_row_at(t * i / steps)
        polynomial = np.array([1.0] + [-z for z in c], dtype=np.complex128)
        derivative = np.polyder(polynomial)
        for _ in range(NEWTON_ITERATIONS):
            slope = np.polyval(derivative, lam)
            if slope == 0:
                return None
            delta = np.polyval(polynomial, lam) / slope
            lam = complex(lam - delta)
            if abs(delta) <= 1e-15 * max(1.0, abs(lam)):
                break
        else:
            return None
    return lam


@handle_gbase_error
def companion_at(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float, n: int) -> PerturbedCompanion:
    """
    Perturbed companion matrix A_n(t) with first row c_{n,ell}(t)

    The Perron eigenvalue is followed by Newton continuation from alpha;
    a dense eigensolve picking the eigenvalue nearest alpha is the fallback.
    """
    d = base.d
    if n < d - 1:
        raise IndexRangeError(f"companion_at needs n >= d-1={d - 1}", f"n={n}")
    _check_levels(base, n, "companion_at")

    row = block_coefficients(base, f, t, n)
    entries = np.zeros((d, d), dtype=np.complex128)
    entries[0, :] = row
    for i in range(1, d):
        entries[i, i - 1] = 1.0

    lam = _track_eigenvalue(lambda s: block_coefficients(base, f, s, n), d, base.alpha, t)
    method = "continuation"
    if lam is None:
        logger.info(f"🔄 Continuation failed at n={n}, t={t!r}; using dense eigensolve")
        try:
            eigenvalues = np.linalg.eigvals(entries)
        except np.linalg.LinAlgError as e:
            raise EigenvalueTrackingError(f"Eigensolve failed at n={n}, t={t!r}", str(e))
        if not np.all(np.isfinite(eigenvalues)):
            raise EigenvalueTrackingError(f"Non-finite eigenvalues at n={n}, t={t!r}")
        lam = complex(eigenvalues[np.argmin(np.abs(eigenvalues - base.alpha))])
        method = "eigensolve"
    return PerturbedCompanion(n=n, t=t, entries=entries, lam=lam, Q=block_energy(base, f, n), method=method)


def dissipation_profile(base: LinearRecurrenceBase, f: GAdditiveFunction, t: float,
                        levels: Sequence[int]) -> DissipationProfile:
    """|lambda_n(t)| / alpha against Q_n, with c0 fitted from |lambda| <= alpha exp(-c0 t^2 Q_n)"""
    ratios, energies = [], []
    fits = []
    for n in levels:
        companion = companion_at(base, f, t, n)
        ratio = abs(companion.lam) / base.alpha
        ratios.append(ratio)
        energies.append(companion.Q)
        if t != 0 and companion.Q > 0 and 0 < ratio < 1:
            fits.append(-math.log(ratio) / (t * t * companion.Q))
    return DissipationProfile(t=t, levels=list(levels), ratios=ratios, energies=energies,
                              fitted_c0=min(fits) if fits else None)


def characteristic_function_grid(base: LinearRecurrenceBase, f: GAdditiveFunction, grid: Sequence[float],
                                 K: int, workers: int = 1) -> List[ProductPoint]:
    """Phi_K(t) for every t in the grid, in grid order"""
    def point(t: float) -> ProductPoint:
        trace = h_sequence(base, f, t, K)
        return ProductPoint(t=t, phi=trace.phi, last_increment=trace.last_increment, K=K)

    if workers <= 1 or len(grid) <= 1:
        return [point(t) for t in grid]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(point, grid))


def sum_u_and_eps(trace: TransformTrace) -> Tuple[List[complex], List[complex]]:
    """Running sums of u_k (k >= d) and of eps_k (k >= 1, defined entries only)"""
    u_sums, eps_sums = [], []
    running = 0j
    for value in trace.u:
        if value is not None:
            running += value
            u_sums.append(running)
    running = 0j
    for value in trace.eps[1:]:
        if value is not None:
            running += value
            eps_sums.append(running)
    return u_sums, eps_sums
