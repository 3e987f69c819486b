import pytest

from src.gbase.base import RecurrenceCoefficients, build_base
from src.gbase.gfun import geom_damped, poly_damped

TEST_COEFFS = [(1, 1), (1, 1, 1), (2, 1)]


def make_base(coeffs, max_level=80):
    return build_base(RecurrenceCoefficients(tuple(coeffs)), max_level)


def geometric(base):
    return geom_damped(0.5, [1.0], max_digit=base.frak_a)


def polynomial(base):
    return poly_damped(2.0, [1.0], max_digit=base.frak_a)


@pytest.fixture(scope="session")
def zeckendorf():
    return make_base((1, 1))


@pytest.fixture(scope="session")
def tribonacci():
    return make_base((1, 1, 1))


@pytest.fixture(scope="session")
def pell():
    return make_base((2, 1))


@pytest.fixture(scope="session", params=TEST_COEFFS, ids=lambda c: "-".join(map(str, c)))
def any_base(request):
    return make_base(request.param)
