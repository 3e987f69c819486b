"""
gbase command-line interface
Numeration bases, G-additive functions and their limit-law diagnostics

Run as `python -m src.main <command> ...`. Results go to stdout as CSV or
JSON; logging and the single-line failure message go to stderr.
"""

import argparse
import csv
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from src.config import RunConfig, load_config, parse_grid
from src.gbase.analysis.empirical import empirical_cdf, empirical_charfn, empirical_values
from src.gbase.analysis.series import (
    SeriesReport, order2_series, s1_terms, s2_terms, stability_report,
)
from src.gbase.analysis.transform import characteristic_function_grid
from src.gbase.base import LinearRecurrenceBase, RecurrenceCoefficients, build_base, pisot_check, validate_coefficients
from src.gbase.digits import greedy_expand
from src.gbase.gbase_exceptions import ConfigurationError, GBaseError, handle_gbase_error
from src.gbase.gfun import GAdditiveFunction, parse_function_spec
from src.gbase.invariant_validator import SUITES, InvariantValidator

logger = logging.getLogger("gbase")

EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


class UsageError(Exception):
    pass


class GBaseArgumentParser(argparse.ArgumentParser):
    """ArgumentParser reporting usage problems with the gbase-error prefix"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _grid_arg(text: str):
    try:
        return parse_grid(text)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e))


GRID_FLAGS = ("--t-grid", "--grid")


def _join_grid_values(argv: Sequence[str]) -> List[str]:
    """Glue grid flags to their value so argparse accepts grids like -2:2:0.25"""
    joined: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        value = next(tokens, None) if token in GRID_FLAGS else None
        joined.append(token if value is None else f"{token}={value}")
    return joined


def fmt(x: float) -> str:
    return format(x, ".17g")


def _writer(stream=None):
    return csv.writer(stream or sys.stdout, lineterminator="\n")


def _emit_json(payload: Any):
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def _build_parser() -> GBaseArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--coeffs", help="recurrence coefficients a0,a1,...")
    common.add_argument("--max-level", dest="max_level", type=int, help="highest stored level of the G-sequence")
    common.add_argument("--config", help="JSON file mirroring the run configuration")
    common.add_argument("--format", dest="output_format", choices=["csv", "json"])
    common.add_argument("--threads", type=int, help="worker threads (0 = auto)")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    function = argparse.ArgumentParser(add_help=False)
    function.add_argument("--function", dest="function_spec",
                          help="geom:RHO:PHI.., poly:BETA:PHI.., table:PATH, sum:(A)+(B), zero, count[:LEVELS]")

    parser = GBaseArgumentParser(prog="gbase", description=__doc__.splitlines()[1])
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=GBaseArgumentParser)
    commands.required = True

    base = commands.add_parser("base", parents=[common], help="describe a base")
    base.add_argument("action", nargs="?", default="info", choices=["info", "validate", "pisot"])

    expand = commands.add_parser("expand", parents=[common], help="greedy digits of n")
    expand.add_argument("--n", type=int, required=True)

    evaluate = commands.add_parser("eval", parents=[common, function], help="f(n)")
    evaluate.add_argument("--n", type=int, required=True)

    cdf = commands.add_parser("cdf", parents=[common, function], help="empirical distribution function")
    cdf.add_argument("--N", dest="n_samples", type=int)
    cdf.add_argument("--grid", dest="z_grid", type=_grid_arg, help="lo:hi:step")

    charfn = commands.add_parser("charfn", parents=[common, function], help="characteristic function on a grid")
    charfn.add_argument("--method", choices=["product", "empirical"], default="product")
    charfn.add_argument("--t-grid", dest="t_grid", type=_grid_arg, help="lo:hi:step")
    charfn.add_argument("--K", dest="product_terms", type=int, help="product truncation level")
    charfn.add_argument("--N", dest="n_samples", type=int, help="sample range for the empirical method")

    series = commands.add_parser("series", parents=[common, function], help="canonical series")
    series.add_argument("--which", choices=["s1", "s2", "order2", "stability"], default="s1")
    series.add_argument("--terms", dest="series_terms", type=int)
    series.add_argument("--other", help="second function spec for stability")

    verify = commands.add_parser("verify", parents=[common], help="run invariant suites")
    verify.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    return parser


OVERRIDE_KEYS = ("coeffs", "max_level", "function_spec", "t_grid", "z_grid", "n_samples",
                 "product_terms", "series_terms", "output_format", "threads")


def _configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _base(config: RunConfig, min_level: int = 0) -> LinearRecurrenceBase:
    coeffs = RecurrenceCoefficients.parse(config.coeffs)
    return build_base(coeffs, max(config.max_level, min_level))


def _function(config: RunConfig, base: LinearRecurrenceBase, spec: Optional[str] = None) -> GAdditiveFunction:
    return parse_function_spec(spec or config.function_spec, base.frak_a)


def _cmd_base(args, config: RunConfig) -> int:
    coeffs = RecurrenceCoefficients.parse(config.coeffs)
    if args.action == "validate":
        report = validate_coefficients(coeffs)
        _emit_json(report.to_dict())
        return 0 if report.passed else EXIT_DOMAIN_ERROR
    if args.action == "pisot":
        _emit_json(pisot_check(coeffs).to_dict())
        return 0
    _emit_json(build_base(coeffs, config.max_level).to_dict())
    return 0


def _cmd_expand(args, config: RunConfig) -> int:
    base = _base(config)
    expansion = greedy_expand(base, args.n)
    if config.output_format == "json":
        _emit_json(expansion.to_dict(args.n))
    else:
        sys.stdout.write(str(expansion) + "\n")
    return 0


def _cmd_eval(args, config: RunConfig) -> int:
    base = _base(config)
    f = _function(config, base)
    value = f.eval(base, args.n)
    if config.output_format == "json":
        _emit_json({"n": str(args.n), "function": f.describe(), "value": value})
    else:
        sys.stdout.write(fmt(value) + "\n")
    return 0


def _cmd_cdf(args, config: RunConfig) -> int:
    base = _base(config)
    f = _function(config, base)
    rows = empirical_cdf(base, f, config.n_samples, config.z_values(), workers=config.worker_count())
    if config.output_format == "json":
        _emit_json({"N": config.n_samples, "points": [[z, F] for z, F in rows]})
        return 0
    out = _writer()
    out.writerow(["z", "F_N"])
    for z, F in rows:
        out.writerow([fmt(z), fmt(F)])
    return 0


def _cmd_charfn(args, config: RunConfig) -> int:
    grid = config.t_values()
    workers = config.worker_count()
    if args.method == "empirical":
        base = _base(config)
        f = _function(config, base)
        values = empirical_values(base, f, config.n_samples, workers)
        points = [(t, empirical_charfn(base, f, config.n_samples, t, values=values)) for t in grid]
        if config.output_format == "json":
            _emit_json({"N": config.n_samples,
                        "points": [{"t": t, "re": z.real, "im": z.imag, "abs": abs(z)} for t, z in points]})
            return 0
        out = _writer()
        out.writerow(["t", "re", "im", "abs"])
        for t, z in points:
            out.writerow([fmt(t), fmt(z.real), fmt(z.imag), fmt(abs(z))])
        return 0

    K = config.product_terms
    base = _base(config, K + 1)
    f = _function(config, base)
    points = characteristic_function_grid(base, f, grid, K, workers)
    if config.output_format == "json":
        _emit_json({"K": K, "points": [
            {"t": p.t, "re": p.phi.real, "im": p.phi.imag, "abs": abs(p.phi), "last_increment": p.last_increment}
            for p in points]})
        return 0
    out = _writer()
    out.writerow(["t", "re", "im", "abs", "K"])
    for p in points:
        out.writerow([fmt(p.t), fmt(p.phi.real), fmt(p.phi.imag), fmt(abs(p.phi)), p.K])
    worst = max((p.last_increment for p in points if p.last_increment is not None), default=None)
    if worst is not None:
        logger.info(f"📈 Largest last increment |Phi_K - Phi_(K-1)| on the grid: {worst!r}")
    return 0


def _write_series(out, report: SeriesReport):
    out.writerow(["n", "term", "partial_sum"])
    for n, (term, partial) in enumerate(zip(report.terms, report.partial_sums)):
        out.writerow([n, fmt(term), fmt(partial)])
    sys.stdout.write(f"# verdict: {report.verdict.value}\n")


def _cmd_series(args, config: RunConfig) -> int:
    N = config.series_terms
    base = _base(config, N + 2 + len(RecurrenceCoefficients.parse(config.coeffs).a))
    f = _function(config, base)
    tol = config.series_tolerance
    out = _writer()

    if args.which == "stability":
        g = _function(config, base, args.other or "zero")
        report = stability_report(base, f, g, N)
        if config.output_format == "json":
            _emit_json(report.to_dict())
            return 0
        out.writerow(["key", "value"])
        for key, value in report.to_dict().items():
            out.writerow([key, fmt(value) if isinstance(value, float) else value])
        return 0

    if args.which == "order2":
        report = order2_series(base, f, N, tol)
        if config.output_format == "json":
            _emit_json(report.to_dict())
            return 0
        for part in (report.first, report.second, report.special):
            if part is None:
                continue
            sys.stdout.write(f"# series: {part.name}\n")
            _write_series(out, part)
        sys.stdout.write(f"# shift_residual: {fmt(report.shift_residual)}\n")
        return 0

    report = s1_terms(base, f, N, tol) if args.which == "s1" else s2_terms(base, f, N, tol)
    if config.output_format == "json":
        _emit_json(report.to_dict())
    else:
        _write_series(out, report)
    return 0


def _cmd_verify(args, config: RunConfig) -> int:
    report = InvariantValidator(config).run(args.suite)
    if config.output_format == "json":
        _emit_json(report)
    else:
        out = _writer()
        out.writerow(["status", "suite", "check", "detail"])
        for check in report["checks"]:
            out.writerow([check["status"], check["suite"], check["name"], check["detail"]])
        sys.stdout.write(f"# {report['status']}: {report['message']}\n")
    return 0 if report["status"] == "passed" else EXIT_DOMAIN_ERROR


COMMANDS = {
    "base": _cmd_base,
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "cdf": _cmd_cdf,
    "charfn": _cmd_charfn,
    "series": _cmd_series,
    "verify": _cmd_verify,
}


def run(argv: Sequence[str]) -> int:
    """Parse argv, run one command and return the process exit code"""
    parser = _build_parser()
    try:
        args = parser.parse_args(_join_grid_values(argv))
    except UsageError as e:
        sys.stderr.write(f"gbase-error: UsageError: {e}\n")
        return EXIT_USAGE_ERROR

    _configure_logging(args.verbose)
    overrides: Dict[str, Any] = {key: getattr(args, key, None) for key in OVERRIDE_KEYS}
    try:
        config = load_config(args.config, overrides)
        config.log_summary()
        return handle_gbase_error(COMMANDS[args.command])(args, config)
    except GBaseError as e:
        sys.stderr.write(f"gbase-error: {type(e).__name__}: {e}\n")
        return EXIT_DOMAIN_ERROR


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
