import cmath
import json
import math

import numpy as np
import pytest

from src.gbase.digits import greedy_expand
from src.gbase.gbase_exceptions import DigitDomainError, FunctionSpecError
from src.gbase.gfun import (
    FunctionKind, digit_count, geom_damped, parse_function_spec, poly_damped, sum_of, table_function, zero,
)

from tests.conftest import geometric, polynomial


def test_weight_examples():
    assert geom_damped(0.5, [1.0]).weight(1, 3) == 0.125
    assert poly_damped(2.0, [1.0]).weight(1, 3) == 1 / 16
    assert geom_damped(0.5, [1.0]).weight(0, 7) == 0.0


def test_weight_rejects_large_digit():
    f = geom_damped(0.5, [1.0])
    with pytest.raises(DigitDomainError):
        f.weight(2, 0)


def test_eval_examples(zeckendorf):
    f = geometric(zeckendorf)
    assert f.eval(zeckendorf, 0) == 0.0
    assert f.eval(zeckendorf, 4) == 1.25
    assert digit_count(1, 20).eval(zeckendorf, 12) == 3.0


def test_phase_examples(zeckendorf):
    f = geometric(zeckendorf)
    assert f.phase(zeckendorf, 7, 0.0) == 1
    assert f.phase(zeckendorf, 0, 3.7) == 1
    assert f.phase(zeckendorf, 4, math.pi) == pytest.approx(cmath.exp(1j * math.pi * 1.25))


def test_additivity_over_top_digit(any_base):
    f = geometric(any_base)
    for n in range(1, any_base.G[10]):
        digits = greedy_expand(any_base, n).digits
        top = len(digits) - 1
        m = n - digits[top] * any_base.G[top]
        assert f.eval(any_base, n) == pytest.approx(f.eval(any_base, m) + f.weight(digits[top], top), abs=1e-14)


def test_phase_has_unit_modulus(zeckendorf):
    f = polynomial(zeckendorf)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(0, zeckendorf.G[40]))
        t = float(rng.uniform(-10, 10))
        assert abs(abs(f.phase(zeckendorf, n, t)) - 1) < 1e-15


def test_sum_is_exact(pell):
    f, g = geometric(pell), polynomial(pell)
    h = f + g
    assert h.kind is FunctionKind.SUM
    rng = np.random.default_rng(5)
    for n in rng.integers(0, pell.G[30], size=1000):
        n = int(n)
        assert h.eval(pell, n) == f.eval(pell, n) + g.eval(pell, n)


def test_block_value_matches_eval_of_theta(tribonacci):
    from src.gbase.digits import theta
    f = polynomial(tribonacci)
    for q in range(2, 15):
        for ell in range(tribonacci.d):
            assert f.block_value(tribonacci, q, ell) == f.eval(tribonacci, theta(tribonacci, q, ell))


def test_support_bounds():
    assert table_function([(1, 4, 2.0), (1, 1, 1.0)]).support_bound() == 5
    assert geom_damped(0.5, [1.0]).support_bound() is None
    assert geom_damped(0.0, [1.0]).support_bound() == 1
    assert poly_damped(2.0, [0.0]).support_bound() == 0
    assert zero(1).support_bound() == 0
    assert sum_of(zero(1), table_function([(1, 2, 1.0)])).support_bound() == 3


def test_scaled(zeckendorf):
    f = geometric(zeckendorf)
    assert f.scaled(3.0).weight(1, 2) == pytest.approx(0.75)
    assert (f + f).scaled(2.0).weight(1, 0) == pytest.approx(4.0)


def test_parse_geom_pads_phi():
    f = parse_function_spec("geom:0.5:1", max_digit=2)
    assert f.kind is FunctionKind.GEOM_DAMPED
    assert f.max_digit == 2
    assert f.weight(2, 3) == 0.0
    assert f.weight(1, 1) == 0.5


def test_parse_poly_and_sum():
    f = parse_function_spec("sum:(poly:2:1)+(geom:0.5:1,2)", max_digit=2)
    assert f.kind is FunctionKind.SUM
    assert f.weight(2, 0) == pytest.approx(2.0)
    assert f.weight(1, 1) == pytest.approx(0.25 + 0.5)


def test_parse_nested_sum():
    f = parse_function_spec("sum:(sum:(zero)+(count:3))+(geom:0.5:1)", max_digit=1)
    assert f.weight(1, 2) == pytest.approx(1.25)
    assert f.weight(1, 3) == pytest.approx(0.125)


def test_parse_table(tmp_path, zeckendorf):
    path = tmp_path / "weights.json"
    path.write_text(json.dumps({"weights": [[1, 0, 0.5], [1, 2, 2.0]]}))
    f = parse_function_spec(f"table:{path}", max_digit=1)
    assert f.eval(zeckendorf, 4) == 2.5
    assert f.eval(zeckendorf, 8) == 0.0


@pytest.mark.parametrize("spec", [
    "geom:2:1",
    "poly:-1:1",
    "geom:0.5",
    "wave:1:1",
    "sum:(zero)",
    "sum:(zero)+(zero",
    "table:/nonexistent/weights.json",
])
def test_parse_errors(spec):
    with pytest.raises(FunctionSpecError):
        parse_function_spec(spec, max_digit=1)
