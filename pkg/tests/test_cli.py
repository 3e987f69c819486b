import json

import pytest

from src import main as main_module
from src.config import RunConfig
from src.gbase.base import RecurrenceCoefficients, build_base
from src.main import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, run


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in ("GBASE_COEFFS", "GBASE_MAX_LEVEL", "GBASE_FUNCTION", "GBASE_FORMAT", "GBASE_THREADS"):
        monkeypatch.delenv(key, raising=False)


def test_expand(capsys):
    assert run(["expand", "--coeffs", "1,1", "--n", "4"]) == 0
    assert capsys.readouterr().out == "1 0 1\n"


def test_expand_json(capsys):
    assert run(["expand", "--coeffs", "1,1", "--n", "12", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == {"n": "12", "digits": [1, 0, 1, 0, 1]}


def test_base_info(capsys):
    assert run(["base", "info", "--coeffs", "1,1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["alpha"] == pytest.approx(1.618033988749895)
    assert payload["pisot"] == "yes"


def test_base_validate_reports_failed_rules(capsys):
    assert run(["base", "validate", "--coeffs", "1,2"]) == EXIT_DOMAIN_ERROR
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is False


def test_eval_digit_count(capsys):
    assert run(["eval", "--coeffs", "1,1", "--function", "count:20", "--n", "12"]) == 0
    assert capsys.readouterr().out == "3\n"


def test_usage_error(capsys):
    assert run(["expand", "--coeffs", "1,1"]) == EXIT_USAGE_ERROR
    assert "gbase-error: UsageError:" in capsys.readouterr().err


def test_bad_grid_is_a_usage_error(capsys):
    assert run(["cdf", "--grid", "0:1"]) == EXIT_USAGE_ERROR
    assert "gbase-error: UsageError:" in capsys.readouterr().err


def test_capacity_error(capsys):
    assert run(["expand", "--coeffs", "1,1", "--max-level", "10", "--n", "1000"]) == EXIT_DOMAIN_ERROR
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.startswith("gbase-error: CapacityError:")


def test_bad_coefficients(capsys):
    assert run(["expand", "--coeffs", "1,x", "--n", "3"]) == EXIT_DOMAIN_ERROR
    assert "gbase-error: CoefficientError:" in capsys.readouterr().err


def test_cdf_csv(capsys):
    assert run(["cdf", "--coeffs", "1,1", "--function", "count", "--N", "21", "--grid", "0:3:1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "z,F_N"
    assert len(lines) == 5
    z, F = lines[2].split(",")
    assert float(z) == 1.0
    assert float(F) == pytest.approx(7 / 21)


def test_charfn_output_is_deterministic(capsys):
    argv = ["charfn", "--coeffs", "1,1,1", "--t-grid", "-1:1:0.5", "--K", "20", "--threads", "3"]
    assert run(argv) == 0
    first = capsys.readouterr().out
    assert run(argv) == 0
    assert capsys.readouterr().out == first
    lines = first.splitlines()
    assert lines[0] == "t,re,im,abs,K"
    assert len(lines) == 6
    assert lines[3].split(",")[4] == "20"


def test_charfn_empirical(capsys):
    assert run(["charfn", "--method", "empirical", "--t-grid", "0:0:1", "--N", "100"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,re,im,abs"
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0)


def test_series_s2(capsys):
    assert run(["series", "--which", "s2", "--terms", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,term,partial_sum"
    assert lines[2] == "1,0.25,1.25"
    assert lines[-1] == "# verdict: inconclusive"


def test_series_order2_blocks(capsys):
    assert run(["series", "--which", "order2", "--coeffs", "2,1", "--terms", "12"]) == 0
    out = capsys.readouterr().out
    assert "# series: order2-first" in out
    assert "# series: order2-special-b-eq-1" in out
    assert out.splitlines()[-1].startswith("# shift_residual: ")


def test_series_order2_needs_order_two(capsys):
    assert run(["series", "--which", "order2", "--coeffs", "1,1,1", "--terms", "12"]) == EXIT_DOMAIN_ERROR
    assert "gbase-error: WrongOrderError:" in capsys.readouterr().err


def test_series_stability_json(capsys):
    argv = ["series", "--which", "stability", "--function", "geom:0.5:1", "--other", "poly:2:1",
            "--terms", "30", "--format", "json"]
    assert run(argv) == 0
    assert json.loads(capsys.readouterr().out)["cs_holds"] is True


def test_verify_digits_suite(capsys):
    assert run(["verify", "--suite", "digits"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "status,suite,check,detail"
    assert out.splitlines()[-1].startswith("# passed:")


def test_negative_grids_are_accepted(capsys):
    assert run(["cdf", "--coeffs", "1,1", "--function", "count", "--N", "21", "--grid", "-1:1:0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 6
    z, F = lines[1].split(",")
    assert (float(z), float(F)) == (-1.0, 0.0)
    assert float(lines[3].split(",")[1]) == pytest.approx(1 / 21)

    assert run(["charfn", "--coeffs", "1,1", "--t-grid", "-2:2:1", "--K", "10"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert [float(row.split(",")[0]) for row in rows] == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_steep_polynomial_weights_underflow(capsys):
    assert run(["eval", "--coeffs", "1,1", "--function", "poly:5000:1", "--n", "12"]) == 0
    assert capsys.readouterr().out == "0\n"


def test_numeric_failures_keep_the_error_prefix(capsys, monkeypatch):
    def overflowing(args, config):
        raise OverflowError(34, "Numerical result out of range")

    monkeypatch.setitem(main_module.COMMANDS, "eval", overflowing)
    assert run(["eval", "--n", "12"]) == EXIT_DOMAIN_ERROR
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.startswith("gbase-error: CapacityError:")
    assert len(captured.err.splitlines()) == 1


def test_json_floats_round_trip(capsys):
    assert run(["base", "info", "--coeffs", "1,1,1", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    expected = build_base(RecurrenceCoefficients((1, 1, 1)), RunConfig().max_level)
    assert payload["alpha"] == expected.alpha
    assert payload["kappa"] == expected.kappa
