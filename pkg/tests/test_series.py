import math

import pytest

from src.gbase.analysis.series import (
    AtomicityVerdict, SeriesVerdict, atomicity_check, make_report, multinacci_s1_terms, order2_series,
    perturbation_report, s1_layers, s1_terms, s2_terms, stability_report,
)
from src.gbase.gbase_exceptions import CapacityError, CoefficientError, WrongOrderError
from src.gbase.gfun import digit_count, geom_damped, poly_damped, table_function, zero

from tests.conftest import geometric, make_base, polynomial


def test_s2_geometric_closed_form(zeckendorf):
    report = s2_terms(zeckendorf, geom_damped(0.5, [1.0]), 60)
    assert report.total == pytest.approx(4 / 3, abs=1e-12)
    assert report.verdict is SeriesVerdict.CONVERGED


def test_s2_polynomial_closed_form(zeckendorf):
    report = s2_terms(zeckendorf, poly_damped(2.0, [1.0]), 80)
    assert abs(report.total - math.pi ** 4 / 90) < 1e-6
    assert report.verdict is SeriesVerdict.INCONCLUSIVE


def test_s2_constant_layers_diverge(zeckendorf):
    report = s2_terms(zeckendorf, digit_count(1, 64), 60)
    assert report.terms == [1.0] * 60
    assert report.verdict is SeriesVerdict.DIVERGING


def test_geometric_tail_estimate(zeckendorf):
    report = s2_terms(zeckendorf, geom_damped(0.5, [1.0]), 10)
    assert report.tail_estimate == pytest.approx(4.0 ** -9 / 3, rel=1e-12)


def test_s1_zeckendorf_layers(zeckendorf):
    golden = zeckendorf.alpha
    layers = s1_layers(zeckendorf, geom_damped(0.5, [1.0]), 40)
    for n, value in enumerate(layers):
        assert value == pytest.approx(0.5 ** (n + 2) / golden, rel=1e-14)


def test_s1_capacity(zeckendorf):
    with pytest.raises(CapacityError) as info:
        s1_terms(zeckendorf, geometric(zeckendorf), 80)
    assert info.value.required_level == 81


def test_s1_is_nonnegative_for_nonnegative_weights(any_base):
    for value in s1_layers(any_base, polynomial(any_base), 50):
        assert value >= 0


def test_multinacci_form_matches_general_layers(tribonacci):
    f = polynomial(tribonacci)
    general = s1_terms(tribonacci, f, 40)
    special = multinacci_s1_terms(tribonacci, f, 40)
    for x, y in zip(general.terms, special.terms):
        assert x == pytest.approx(y, rel=1e-14)


def test_multinacci_needs_unit_coefficients(pell):
    with pytest.raises(CoefficientError):
        multinacci_s1_terms(pell, geometric(pell), 10)


def test_order2_shift_identity(zeckendorf, pell):
    for base in (zeckendorf, pell):
        report = order2_series(base, polynomial(base), 40)
        assert report.shift_residual < 1e-15
        assert report.second.terms == s2_terms(base, polynomial(base), 40).terms


def test_order2_special_forms(zeckendorf, pell):
    assert order2_series(zeckendorf, geometric(zeckendorf), 20).special.name == "order2-special-a-eq-b"
    special = order2_series(pell, geometric(pell), 20).special
    assert special.name == "order2-special-b-eq-1"
    assert special.terms[3] == pytest.approx(pell.alpha * 0.125)


def test_order2_needs_order_two(tribonacci):
    with pytest.raises(WrongOrderError):
        order2_series(tribonacci, geometric(tribonacci), 10)


def test_stability_with_zero_perturbation(pell):
    report = stability_report(pell, geometric(pell), zero(2), 40)
    assert report.s1_residual == 0.0
    assert report.s2_residual == 0.0
    assert report.cross_term == 0.0
    assert report.cs_holds


def test_stability_cauchy_schwarz_is_tight_for_equal_functions(any_base):
    f = polynomial(any_base)
    report = stability_report(any_base, f, f, 40)
    assert report.s1_residual < 1e-15
    assert report.s2_residual < 1e-15
    assert report.cs_holds
    assert abs(report.cs_gap) < 1e-12


def test_stability_mixed_families(tribonacci):
    report = stability_report(tribonacci, geometric(tribonacci), polynomial(tribonacci), 50)
    assert report.s1_residual < 1e-14
    assert report.s2_residual < 1e-14
    assert report.cs_holds
    assert report.cs_gap > 0


def test_perturbation_by_finite_table(zeckendorf):
    g = table_function([(1, 4, 2.0), (1, 1, 1.0)])
    report = perturbation_report(zeckendorf, geometric(zeckendorf), g, 20)
    assert report.s2_perturbation == 5.0
    assert report.absolute_sum == 3.0
    assert report.perturbation_verdict is SeriesVerdict.CONVERGED
    assert report.stability.cs_holds


@pytest.mark.parametrize("f, j_max, label", [
    (table_function([(1, 4, 2.0), (1, 1, 1.0)]), 50, "atomic-by-level-5"),
    (zero(1), 50, "atomic-by-level-0"),
    (digit_count(1, 3), 50, "atomic-by-level-3"),
    (digit_count(1, 3), 2, "not-eventually-zero-up-to-2"),
    (geom_damped(0.5, [1.0]), 50, "not-eventually-zero-up-to-50"),
])
def test_atomicity_labels(f, j_max, label):
    assert str(atomicity_check(f, j_max)) == label


def test_atomicity_ignores_zero_table_entries():
    f = table_function([(1, 2, 1.0), (1, 7, 0.0)])
    report = atomicity_check(f, 10)
    assert report.verdict is AtomicityVerdict.ATOMIC
    assert report.level == 3


def test_short_series_is_inconclusive():
    assert make_report("tiny", [1.0, 0.5]).verdict is SeriesVerdict.INCONCLUSIVE
    assert make_report("empty", []).total == 0.0


@pytest.fixture(scope="module")
def deep_zeckendorf():
    return make_base((1, 1), 260)


@pytest.mark.parametrize("f", [
    poly_damped(1.01, [1.0]),
    poly_damped(1.5, [1.0]),
    poly_damped(2.0, [1.0]),
    geom_damped(0.5, [1.0]),
    geom_damped(0.9, [1.0]),
    geom_damped(0.99, [1.0]),
], ids=["poly-1.01", "poly-1.5", "poly-2", "geom-0.5", "geom-0.9", "geom-0.99"])
def test_convergent_families_are_never_diverging(deep_zeckendorf, f):
    assert s1_terms(deep_zeckendorf, f, 200).verdict is not SeriesVerdict.DIVERGING
    assert s2_terms(deep_zeckendorf, f, 200).verdict is not SeriesVerdict.DIVERGING


def test_slow_square_summable_weights_are_not_diverging(deep_zeckendorf):
    report = s2_terms(deep_zeckendorf, poly_damped(0.505, [1.0]), 200)
    assert report.verdict is SeriesVerdict.INCONCLUSIVE
