import cmath
import math

import numpy as np
import pytest

from src.config import closed_grid
from src.gbase.analysis import transform
from src.gbase.analysis.empirical import empirical_values
from src.gbase.analysis.series import s1_layers
from src.gbase.analysis.transform import (
    block_coefficient, block_energy, characteristic_function_grid, companion_at, contraction_constant,
    dissipation_profile, epsilon_recursion_residual, h_sequence, kernel_coefficients, one_step_bound_margin,
    ratio_recurrence_residual, sigma, sum_u_and_eps, u_k, verify_uk_identity,
)
from src.gbase.digits import theta
from src.gbase.gbase_exceptions import CapacityError, IdentityUnavailableError, IndexRangeError
from src.gbase.gfun import zero

from tests.conftest import TEST_COEFFS, geometric, make_base, polynomial


def test_sigma_examples(pell):
    f = geometric(pell)
    assert sigma(pell, f, 0.0, 5, 0) == 2
    assert sigma(pell, f, 1.3, 5, 1) == 1
    expected = 1 + cmath.exp(1j * 0.7 * f.weight(1, 5))
    assert sigma(pell, f, 0.7, 5, 0) == pytest.approx(expected, abs=1e-15)


def test_sigma_bounded_by_coefficient(pell):
    f = polynomial(pell)
    for q in range(1, 20):
        for ell in range(2):
            assert abs(sigma(pell, f, 1.7, q, ell)) <= pell.a[ell] + 1e-15


@pytest.mark.parametrize("coeffs", TEST_COEFFS)
def test_oracle_equivalence(coeffs):
    base = make_base(coeffs)
    f = geometric(base)
    K = max(k for k in range(base.max_level) if base.G[k] <= 2 * 10 ** 5)
    values = empirical_values(base, f, base.G[K])
    for t in (0.3, 1.0, 2.5):
        trace = h_sequence(base, f, t, K)
        phases = np.exp(1j * t * values)
        for k in range(K + 1):
            brute = complex(phases[:base.G[k]].sum())
            assert abs(trace.H[k] - brute) / abs(brute) < 1e-10


def test_h_sequence_at_zero_frequency(any_base):
    trace = h_sequence(any_base, geometric(any_base), 0.0, 60)
    for k in range(61):
        assert abs(trace.H[k] - any_base.G[k]) / any_base.G[k] < 1e-9
    assert trace.r[5] == pytest.approx(any_base.G[5] / any_base.G[4])


def test_h_sequence_trivial_level(zeckendorf):
    trace = h_sequence(zeckendorf, geometric(zeckendorf), 1.0, 0)
    assert trace.H == [1]
    assert trace.last_increment is None


def test_h_sequence_capacity(zeckendorf):
    with pytest.raises(CapacityError) as info:
        h_sequence(zeckendorf, geometric(zeckendorf), 1.0, zeckendorf.max_level)
    assert info.value.required_level == zeckendorf.max_level + 1


def test_hermitian_symmetry(tribonacci):
    f = polynomial(tribonacci)
    rng = np.random.default_rng(1)
    for t in rng.uniform(0.1, 3.0, size=4):
        plus, minus = h_sequence(tribonacci, f, t, 30), h_sequence(tribonacci, f, -t, 30)
        for k in range(31):
            assert abs(plus.H[k] - minus.H[k].conjugate()) <= 1e-12 * max(1.0, abs(plus.H[k]))


def test_growth_stabilizes(zeckendorf):
    trace = h_sequence(zeckendorf, geometric(zeckendorf), 1.0, 30)
    scaled = [abs(trace.H[k]) / zeckendorf.G[k] for k in range(31)]
    assert abs(scaled[25] - scaled[24]) < 1e-4


def test_phi_partial_matches_product_of_ratios(zeckendorf):
    trace = h_sequence(zeckendorf, geometric(zeckendorf), 0.8, 25)
    product = 1 / zeckendorf.kappa
    for k in range(1, 26):
        product *= trace.r[k] / zeckendorf.alpha
    assert trace.phi == pytest.approx(product, rel=1e-12)


def test_product_against_empirical(zeckendorf):
    f = geometric(zeckendorf)
    K = 25
    values = empirical_values(zeckendorf, f, zeckendorf.G[K])
    for t in closed_grid((-2.0, 2.0, 0.25)):
        trace = h_sequence(zeckendorf, f, t, K)
        empirical = complex(np.exp(1j * t * values).sum()) / zeckendorf.G[K]
        rescaled = trace.phi * zeckendorf.kappa * zeckendorf.alpha ** K / zeckendorf.G[K]
        assert abs(rescaled - empirical) < 1e-9
        assert trace.last_increment < 1e-3


def test_u_k_vanishes_without_phases(any_base):
    f = geometric(any_base)
    for k in range(any_base.d, 20):
        assert abs(u_k(any_base, f, 0.0, k)) < 1e-12
        assert abs(u_k(any_base, zero(any_base.frak_a), 1.3, k)) < 1e-12


def test_u_k_from_raw_weights(zeckendorf):
    f = geometric(zeckendorf)
    t, k = 1.0, 6
    alpha = zeckendorf.alpha
    c0 = 1.0
    c1 = cmath.exp(1j * t * f.weight(1, k - 1))
    expected = alpha ** 2 * ((c0 - 1) / alpha + (c1 - 1) / alpha ** 2)
    assert u_k(zeckendorf, f, t, k) == pytest.approx(expected, abs=1e-14)


def test_u_k_index_range(tribonacci):
    with pytest.raises(IndexRangeError):
        u_k(tribonacci, geometric(tribonacci), 1.0, 2)


@pytest.mark.parametrize("coeffs", TEST_COEFFS)
@pytest.mark.parametrize("family", [geometric, polynomial])
@pytest.mark.parametrize("t", [0.5, 1.0])
def test_uk_identity(coeffs, family, t):
    base = make_base(coeffs)
    f = family(base)
    trace = h_sequence(base, f, t, 30)
    for k in range(2 * base.d, 31):
        assert verify_uk_identity(base, f, t, k, trace) < 1e-8


def test_uk_identity_examples(zeckendorf, tribonacci):
    assert verify_uk_identity(zeckendorf, geometric(zeckendorf), 1.0, 10) < 1e-9
    assert verify_uk_identity(tribonacci, polynomial(tribonacci), 0.5, 12) < 1e-9
    assert verify_uk_identity(zeckendorf, zero(1), 1.0, 10) < 1e-12


@pytest.mark.parametrize("coeffs", TEST_COEFFS)
def test_ratio_and_epsilon_recursions(coeffs):
    base = make_base(coeffs)
    f = polynomial(base)
    trace = h_sequence(base, f, 0.9, 25)
    for k in range(2 * base.d, 26):
        assert ratio_recurrence_residual(base, f, 0.9, k, trace) < 1e-10
        assert epsilon_recursion_residual(base, f, 0.9, k, trace) < 1e-10


def test_one_step_bound_for_late_levels(zeckendorf):
    f = geometric(zeckendorf)
    trace = h_sequence(zeckendorf, f, 1.0, 30)
    assert one_step_bound_margin(zeckendorf, f, 1.0, 30, trace) >= -1e-12


@pytest.mark.parametrize("coeffs, expected", [
    ((1, 1), 1 - 2 / (1 + math.sqrt(5))),
    ((2, 1), 1 - 2 / (1 + math.sqrt(2))),
])
def test_contraction_constant_order2(coeffs, expected):
    assert contraction_constant(make_base(coeffs)) == pytest.approx(expected, abs=1e-12)


def test_contraction_constant_tribonacci(tribonacci):
    L = contraction_constant(tribonacci)
    alpha = tribonacci.alpha
    assert L == pytest.approx((2 - 2 / alpha - 1 / alpha ** 3) / 4, abs=1e-15)
    assert 0 < L < 0.5
    assert L == pytest.approx(0.18798, abs=1e-4)


def test_kernel_zeckendorf(zeckendorf):
    report = kernel_coefficients(zeckendorf, 60)
    golden = (1 + math.sqrt(5)) / 2
    assert report.b[0] == 1.0
    assert report.total == pytest.approx(golden, abs=1e-12)
    assert abs(report.partial_sum - golden) < 1e-10


def test_kernel_positive_and_monotone(any_base):
    report = kernel_coefficients(any_base, 80)
    assert all(b >= 0 for b in report.b)
    running = 0.0
    for b in report.b:
        previous, running = running, running + b
        assert running >= previous
    assert running <= report.total + 1e-12


def test_companion_at_zero_frequency(any_base):
    f = geometric(any_base)
    companion = companion_at(any_base, f, 0.0, 10)
    assert abs(companion.lam - any_base.alpha) < 1e-12
    assert np.allclose(companion.entries, any_base.companion_matrix())


def test_companion_shape_and_bounds(pell):
    f = polynomial(pell)
    companion = companion_at(pell, f, 1.4, 6)
    assert companion.entries[1, 0] == 1
    assert companion.entries[1, 1] == 0
    for ell in range(2):
        assert abs(companion.entries[0, ell]) <= pell.a[ell] + 1e-15


def test_spectral_dissipation(zeckendorf):
    f = geometric(zeckendorf)
    for n in range(1, 21):
        for t in closed_grid((-2.0, 2.0, 0.25)):
            companion = companion_at(zeckendorf, f, t, n)
            assert abs(companion.lam) <= zeckendorf.alpha + 1e-12
            assert companion.Q >= 0


def test_zero_function_keeps_perron_root(tribonacci):
    f = zero(1)
    for t in (-1.5, 0.5, 2.0):
        companion = companion_at(tribonacci, f, t, 8)
        assert companion.Q == 0
        assert abs(companion.lam - tribonacci.alpha) < 1e-12


def test_eigenvalue_is_root_of_characteristic_polynomial(tribonacci):
    f = polynomial(tribonacci)
    companion = companion_at(tribonacci, f, 1.2, 9)
    eigenvalues = np.linalg.eigvals(companion.entries)
    assert np.min(np.abs(eigenvalues - companion.lam)) < 1e-10


def test_u_linearization(zeckendorf):
    f = geometric(zeckendorf)
    d = zeckendorf.d
    layers = s1_layers(zeckendorf, f, 21)

    def gap(t, n):
        return abs(u_k(zeckendorf, f, t, n + d + 1) - 1j * t * zeckendorf.alpha ** (d - 1) * layers[n])

    constant = max(gap(0.1, n) / (0.01 * block_energy(zeckendorf, f, n + d)) for n in range(21))
    for n in range(21):
        # u_k carries an absolute rounding floor once t * f(G_k) is near 1e-8
        assert gap(0.01, n) <= 1.1 * constant * 1e-4 * block_energy(zeckendorf, f, n + d) + 1e-15


def test_block_coefficient_uses_theta(tribonacci):
    f = polynomial(tribonacci)
    q, ell, t = 9, 2, 0.6
    phase = cmath.exp(1j * t * f.eval(tribonacci, theta(tribonacci, q, ell)))
    assert block_coefficient(tribonacci, f, t, q, ell) == pytest.approx(phase * sigma(tribonacci, f, t, q, ell))


def test_dissipation_profile_reports_fit(zeckendorf):
    profile = dissipation_profile(zeckendorf, geometric(zeckendorf), 1.0, range(1, 10))
    assert len(profile.ratios) == 9
    assert all(r <= 1 + 1e-12 for r in profile.ratios)
    assert profile.fitted_c0 is None or profile.fitted_c0 >= 0


def test_characteristic_function_grid_order(zeckendorf):
    f = geometric(zeckendorf)
    grid = closed_grid((-1.0, 1.0, 0.5))
    serial = characteristic_function_grid(zeckendorf, f, grid, 20, workers=1)
    parallel = characteristic_function_grid(zeckendorf, f, grid, 20, workers=4)
    assert [p.t for p in parallel] == grid
    assert [p.phi for p in parallel] == [p.phi for p in serial]
    assert serial[2].phi == pytest.approx(1.0)


def test_sum_u_and_eps(zeckendorf):
    trace = h_sequence(zeckendorf, geometric(zeckendorf), 1.0, 30)
    u_sums, eps_sums = sum_u_and_eps(trace)
    assert len(u_sums) == 29
    assert len(eps_sums) == 30
    assert abs(u_sums[-1] - u_sums[-2]) < 1e-6


def test_undefined_ratios_keep_h_and_block_the_identity(zeckendorf, monkeypatch):
    monkeypatch.setattr(transform, "UNDEFINED_RATIO", float("inf"))
    f = geometric(zeckendorf)
    K = 12
    trace = h_sequence(zeckendorf, f, 1.0, K)
    assert trace.undefined_ratios == list(range(1, K + 1))
    assert trace.r[1:] == [None] * K

    values = empirical_values(zeckendorf, f, zeckendorf.G[K])
    phases = np.exp(1j * values)
    for k in range(K + 1):
        brute = complex(phases[:zeckendorf.G[k]].sum())
        assert abs(trace.H[k] - brute) <= 1e-10 * zeckendorf.G[k]

    with pytest.raises(IdentityUnavailableError):
        trace.ratio(5)
    with pytest.raises(IdentityUnavailableError):
        verify_uk_identity(zeckendorf, f, 1.0, 6, trace)
