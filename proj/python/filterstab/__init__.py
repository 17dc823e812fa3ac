"""Python access to the filter stability laboratory.

The compiled core does the numerical work; the helpers here read the CSV and
JSON artifacts written by ``filterstab run``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ._core import (
    TRACE_HEADER,
    ConfigError,
    DegenerateUpdate,
    DimensionError,
    NumericalError,
    __version__,
    bl_discrete,
    check_assumptions,
    cos_bl_lower_bound,
    estimate_rate,
    kalman_static,
    preset_names,
    read_trace_csv,
    run,
    tv_discrete,
    tv_gaussian,
    twin_run,
)

TRACE_COLUMNS = tuple(TRACE_HEADER.split(","))


def load_trace(path: str | Path) -> dict[str, list[float]]:
    """Parse a trace CSV into columns; empty fields become NaN."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: header must be {TRACE_HEADER!r}, got {header!r}")
        columns: dict[str, list[float]] = {name: [] for name in TRACE_COLUMNS}
        for row in reader:
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}: expected {len(TRACE_COLUMNS)} fields, got {len(row)}")
            columns["step"].append(int(row[0]))
            for name, field in zip(TRACE_COLUMNS[1:], row[1:]):
                columns[name].append(float(field) if field else math.nan)
    steps = columns["step"]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError(f"{path}: steps must be strictly increasing")
    return columns


def load_summary(path: str | Path) -> dict:
    """Read summary.json and check the keys every consumer relies on."""
    with open(path) as handle:
        summary = json.load(handle)
    required = ("preset", "seeds", "final_bl", "final_tv", "rate_slope", "rate_class", "liminf_estimate", "checks")
    missing = [key for key in required if key not in summary]
    if missing:
        raise ValueError(f"{path}: missing keys {missing}")
    return summary


__all__ = [
    "TRACE_COLUMNS",
    "TRACE_HEADER",
    "ConfigError",
    "DegenerateUpdate",
    "DimensionError",
    "NumericalError",
    "__version__",
    "bl_discrete",
    "check_assumptions",
    "cos_bl_lower_bound",
    "estimate_rate",
    "kalman_static",
    "load_summary",
    "load_trace",
    "preset_names",
    "read_trace_csv",
    "run",
    "tv_discrete",
    "tv_gaussian",
    "twin_run",
]
