from src.config import RunConfig
from src.gbase.invariant_validator import CheckStatus, InvariantValidator


def test_base_suite_passes():
    report = InvariantValidator(RunConfig()).run("base")
    assert report["status"] == CheckStatus.PASSED.value
    assert report["failures"] == []
    assert all(check["suite"] == "base" for check in report["checks"])


def test_series_suite_passes():
    report = InvariantValidator().run("series")
    assert report["status"] == "passed", report["failures"]


def test_unknown_suite_is_reported():
    report = InvariantValidator().run("nonsense")
    assert report["status"] == "failed"
    assert "nonsense" in report["message"]
    assert report["checks"] == []


def test_failing_check_is_recorded_not_raised():
    validator = InvariantValidator()

    def broken():
        raise ValueError("boom")

    validator._run_check("custom", "broken", broken)
    result = validator.results[-1]
    assert result.status is CheckStatus.FAILED
    assert "ValueError: boom" in result.detail


def test_bases_are_cached():
    validator = InvariantValidator()
    assert validator.base((1, 1)) is validator.base((1, 1))
