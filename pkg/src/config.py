"""
Configuration management for gbase runs
Handles defaults, GBASE_* environment variables and JSON config files
"""

import json
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.gbase.gbase_exceptions import ConfigurationError

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")
Grid = Tuple[float, float, float]


def parse_grid(text: str) -> Grid:
    """Parse "lo:hi:step" """
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError("Grid must look like lo:hi:step", repr(text))
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigurationError("Grid bounds must be numbers", repr(text))
    return lo, hi, step


def closed_grid(grid: Grid) -> List[float]:
    """lo, lo+step, ... up to hi inclusive; a step that overshoots stops at the last point <= hi"""
    lo, hi, step = grid
    count = int((hi - lo) / step + 1e-9) + 1
    return [lo + i * step for i in range(count)]


@dataclass
class RunConfig:
    """Run configuration with environment variable support"""

    # Base
    coeffs: str = "1,1"
    max_level: int = 60

    # Function
    function_spec: str = "geom:0.5:1"

    # Grids
    t_grid: Grid = (-2.0, 2.0, 0.25)
    z_grid: Grid = (0.0, 2.0, 0.125)

    # Sizes
    n_samples: int = 10000
    product_terms: int = 25
    series_terms: int = 60

    # Output
    output_format: str = "csv"

    # Tolerances
    series_tolerance: float = 1e-10
    identity_tolerance: float = 1e-8
    oracle_tolerance: float = 1e-10

    # Parallelism (0 = auto)
    threads: int = 0

    @classmethod
    def from_env(cls) -> 'RunConfig':
        """Create configuration from GBASE_* environment variables"""
        defaults = cls()

        def get_int(key: str, default: int) -> int:
            try:
                return int(os.getenv(key, str(default)))
            except ValueError:
                logger.warning(f"⚠️  Ignoring non-integer {key}={os.getenv(key)!r}")
                return default

        def get_float(key: str, default: float) -> float:
            try:
                return float(os.getenv(key, str(default)))
            except ValueError:
                logger.warning(f"⚠️  Ignoring non-numeric {key}={os.getenv(key)!r}")
                return default

        def get_str(key: str, default: str) -> str:
            return os.getenv(key, default)

        def get_grid(key: str, default: Grid) -> Grid:
            value = os.getenv(key)
            return parse_grid(value) if value else default

        return cls(
            coeffs=get_str('GBASE_COEFFS', defaults.coeffs),
            max_level=get_int('GBASE_MAX_LEVEL', defaults.max_level),
            function_spec=get_str('GBASE_FUNCTION', defaults.function_spec),
            t_grid=get_grid('GBASE_T_GRID', defaults.t_grid),
            z_grid=get_grid('GBASE_Z_GRID', defaults.z_grid),
            n_samples=get_int('GBASE_N', defaults.n_samples),
            product_terms=get_int('GBASE_K', defaults.product_terms),
            series_terms=get_int('GBASE_SERIES_TERMS', defaults.series_terms),
            output_format=get_str('GBASE_FORMAT', defaults.output_format),
            series_tolerance=get_float('GBASE_SERIES_TOL', defaults.series_tolerance),
            identity_tolerance=get_float('GBASE_IDENTITY_TOL', defaults.identity_tolerance),
            oracle_tolerance=get_float('GBASE_ORACLE_TOL', defaults.oracle_tolerance),
            threads=get_int('GBASE_THREADS', defaults.threads),
        )

    def merged(self, overrides: Dict[str, Any]) -> 'RunConfig':
        """Copy with the given field overrides; unknown keys are an error"""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigurationError("Unknown configuration keys", ", ".join(unknown))
        values = dict(overrides)
        for key in ("t_grid", "z_grid"):
            if isinstance(values.get(key), str):
                values[key] = parse_grid(values[key])
            elif key in values:
                values[key] = tuple(float(v) for v in values[key])
        return replace(self, **values)

    @classmethod
    def from_json(cls, path: str, start: Optional['RunConfig'] = None) -> 'RunConfig':
        """Load a JSON object mirroring the field names"""
        try:
            with open(Path(path)) as handle:
                payload = json.load(handle)
        except FileNotFoundError:
            raise ConfigurationError("Config file not found", path)
        except json.JSONDecodeError as e:
            raise ConfigurationError("Config file is not valid JSON", f"{path}: {e}")
        if not isinstance(payload, dict):
            raise ConfigurationError("Config file must hold a JSON object", path)
        return (start or cls()).merged(payload)

    def validate(self) -> list[str]:
        """Validate configuration and return list of errors"""
        errors = []

        if self.max_level < 2:
            errors.append(f"max_level must be at least 2 (got {self.max_level})")

        for name in ("t_grid", "z_grid"):
            lo, hi, step = getattr(self, name)
            if not step > 0:
                errors.append(f"{name} step must be positive (got {step})")
            elif hi < lo:
                errors.append(f"{name} is empty: hi={hi} < lo={lo}")

        if self.n_samples < 1:
            errors.append(f"N must be at least 1 (got {self.n_samples})")
        if self.product_terms < 0:
            errors.append(f"K must be nonnegative (got {self.product_terms})")
        if self.series_terms < 1:
            errors.append(f"series_terms must be at least 1 (got {self.series_terms})")

        if self.output_format not in OUTPUT_FORMATS:
            errors.append(f"Invalid output format {self.output_format!r}. Must be one of: {list(OUTPUT_FORMATS)}")

        for name in ("series_tolerance", "identity_tolerance", "oracle_tolerance"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be positive")

        if self.threads < 0:
            errors.append(f"threads must be >= 0 (got {self.threads})")

        return errors

    def worker_count(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def t_values(self) -> List[float]:
        return closed_grid(self.t_grid)

    def z_values(self) -> List[float]:
        return closed_grid(self.z_grid)

    def summary_lines(self) -> List[str]:
        return [
            "📋 Configuration Summary:",
            f"   📐 Base: coeffs=({self.coeffs}), max_level={self.max_level}",
            f"   🧮 Function: {self.function_spec}",
            f"   📈 Grids: t={self.t_grid}, z={self.z_grid}",
            f"   🔢 Sizes: N={self.n_samples}, K={self.product_terms}, terms={self.series_terms}",
            f"   🎯 Tolerances: series={self.series_tolerance}, identity={self.identity_tolerance}, "
            f"oracle={self.oracle_tolerance}",
            f"   🧵 Threads: {self.threads or 'auto'}, Output: {self.output_format}",
        ]

    def log_summary(self):
        for line in self.summary_lines():
            logger.debug(line)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Defaults, then environment, then the JSON file, then explicit overrides"""
    config = RunConfig.from_env()
    if path:
        config = RunConfig.from_json(path, start=config)
    if overrides:
        config = config.merged({k: v for k, v in overrides.items() if v is not None})

    errors = config.validate()
    if errors:
        for error in errors:
            logger.error(f"❌ {error}")
        raise ConfigurationError("Invalid configuration", "; ".join(errors))
    return config


# Global configuration instance
run_config: Optional[RunConfig] = None


def get_config() -> RunConfig:
    """Get global configuration instance"""
    global run_config
    if run_config is None:
        run_config = load_config()
    return run_config
