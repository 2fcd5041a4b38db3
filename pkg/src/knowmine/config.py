"""Run configuration.

Settings live in a small TOML file; command-line flags override it. Paths
inside the file are resolved relative to the file's own directory, so a
checked-in config keeps working from any working directory.

    [inputs]
    catalog = "courses.csv"
    performance = "performance.csv"
    lexical_kb = "kb.txt"        # optional
    stoplist = "extra_stops.txt" # optional

    [lsa]
    rank = 150                   # optional, default min(150, docs-1, vocab-1)

    [scoring]
    index_rounding = "floor"               # or "nearest"
    expected_rounding = "half_away_from_zero"  # or "half_to_even"

    [output]
    directory = "out"
    matrix = "course_matrix.bin"

    [runtime]
    threads = 4

    [columns.catalog]            # remap CSV headers, all keys optional
    course_number = "course-number"

    [columns.performance]
    preceding_cgpa = "preceding-CGPA"
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .records import DEFAULT_CATALOG_COLUMNS, DEFAULT_PERFORMANCE_COLUMNS
from .scoring import EXPECTED_ROUNDING_MODES, INDEX_ROUNDING_MODES

ENV_CONFIG_VAR = "KNOWMINE_CONFIG"


@dataclass
class PipelineConfig:
    catalog_csv: Optional[Path] = None
    performance_csv: Optional[Path] = None
    lexical_kb: Optional[Path] = None
    stoplist: Optional[Path] = None
    lsa_rank: Optional[int] = None
    index_rounding: str = "floor"
    expected_rounding: str = "half_away_from_zero"
    out_dir: Path = Path("out")
    matrix_path: Path = Path("course_matrix.bin")
    threads: Optional[int] = None
    catalog_columns: dict = field(default_factory=lambda: dict(DEFAULT_CATALOG_COLUMNS))
    performance_columns: dict = field(
        default_factory=lambda: dict(DEFAULT_PERFORMANCE_COLUMNS)
    )

    def validate(self) -> None:
        if self.lsa_rank is not None and self.lsa_rank < 1:
            raise ConfigError(f"lsa rank must be >= 1, got {self.lsa_rank}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.index_rounding not in INDEX_ROUNDING_MODES:
            raise ConfigError(
                f"index_rounding must be one of {INDEX_ROUNDING_MODES}, "
                f"got {self.index_rounding!r}"
            )
        if self.expected_rounding not in EXPECTED_ROUNDING_MODES:
            raise ConfigError(
                f"expected_rounding must be one of {EXPECTED_ROUNDING_MODES}, "
                f"got {self.expected_rounding!r}"
            )


def _take(table: dict, section: str, key: str, kind, base: Path | None):
    value = table.pop(key, None)
    if value is None:
        return None
    if kind is Path:
        if not isinstance(value, str) or not value:
            raise ConfigError(f"[{section}] {key} must be a non-empty path string")
        path = Path(value)
        return path if path.is_absolute() or base is None else base / path
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"[{section}] {key} must be of type {kind.__name__}")
    return value


def _reject_unknown(table: dict, section: str) -> None:
    if table:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(table))}")


def _column_section(data: dict, name: str, defaults) -> dict:
    table = data.pop(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[columns.{name}] must be a table")
    columns = dict(defaults)
    for key, value in table.items():
        if key not in defaults:
            raise ConfigError(f"unknown column {key!r} in [columns.{name}]")
        if not isinstance(value, str) or not value:
            raise ConfigError(f"[columns.{name}] {key} must be a non-empty string")
        columns[key] = value
    return columns


def load_config(path) -> PipelineConfig:
    """Parse and validate a TOML config file."""
    file_path = Path(path)
    try:
        data = tomllib.loads(file_path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{file_path}: {exc}") from None
    base = file_path.parent

    cfg = PipelineConfig()

    inputs = data.pop("inputs", {})
    cfg.catalog_csv = _take(inputs, "inputs", "catalog", Path, base) or cfg.catalog_csv
    cfg.performance_csv = (
        _take(inputs, "inputs", "performance", Path, base) or cfg.performance_csv
    )
    cfg.lexical_kb = _take(inputs, "inputs", "lexical_kb", Path, base) or cfg.lexical_kb
    cfg.stoplist = _take(inputs, "inputs", "stoplist", Path, base) or cfg.stoplist
    _reject_unknown(inputs, "inputs")

    lsa = data.pop("lsa", {})
    cfg.lsa_rank = _take(lsa, "lsa", "rank", int, None) or cfg.lsa_rank
    _reject_unknown(lsa, "lsa")

    scoring = data.pop("scoring", {})
    cfg.index_rounding = (
        _take(scoring, "scoring", "index_rounding", str, None) or cfg.index_rounding
    )
    cfg.expected_rounding = (
        _take(scoring, "scoring", "expected_rounding", str, None) or cfg.expected_rounding
    )
    _reject_unknown(scoring, "scoring")

    output = data.pop("output", {})
    cfg.out_dir = _take(output, "output", "directory", Path, base) or cfg.out_dir
    cfg.matrix_path = _take(output, "output", "matrix", Path, base) or cfg.matrix_path
    _reject_unknown(output, "output")

    runtime = data.pop("runtime", {})
    cfg.threads = _take(runtime, "runtime", "threads", int, None) or cfg.threads
    _reject_unknown(runtime, "runtime")

    columns = data.pop("columns", {})
    if not isinstance(columns, dict):
        raise ConfigError("[columns] must contain catalog/performance tables")
    cfg.catalog_columns = _column_section(columns, "catalog", DEFAULT_CATALOG_COLUMNS)
    cfg.performance_columns = _column_section(
        columns, "performance", DEFAULT_PERFORMANCE_COLUMNS
    )
    _reject_unknown(columns, "columns")

    if data:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(data))}")
    cfg.validate()
    return cfg
