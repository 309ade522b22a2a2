"""Machining time series and windowed feature matrices.

Series come from the star-delimited CSVs written by the log pipeline.
Rows are ordered by (Id, ServerTimestamp, timestamp) and grouped by the
parameter Id; non-numeric values are skipped with a warning but still
count toward a log's raw length for the length filter.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AnalyticsError
from ..yamllog import MACHINING_CSV_HEADER

log = logging.getLogger(__name__)


@dataclass
class MachiningSeries:
    log_id: str
    series: dict = field(default_factory=dict)  # parameter id -> list of floats
    total_rows: int = 0

    def length(self, parameter: str) -> int:
        return len(self.series.get(parameter, ()))


def load_series_file(path) -> MachiningSeries:
    """Read one ``log<id>.csv`` file into a :class:`MachiningSeries`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise AnalyticsError(f"{path}: empty machining CSV")
    header = lines[0].split("*")
    if header != list(MACHINING_CSV_HEADER):
        raise AnalyticsError(f"{path}: unexpected machining CSV header {header!r}")

    log_id = path.stem
    if log_id.startswith("log"):
        log_id = log_id[len("log"):]

    rows = []
    total = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("*")
        if len(fields) != len(MACHINING_CSV_HEADER):
            log.warning("%s:%d: expected 11 fields, got %d; line skipped", path, lineno, len(fields))
            continue
        total += 1
        parameter, value = fields[0], fields[5]
        timestamp, server_timestamp = fields[6], fields[8]
        try:
            number = float(value)
        except ValueError:
            log.warning("%s:%d: non-numeric value %r skipped", path, lineno, value)
            continue
        if not math.isfinite(number):
            log.warning("%s:%d: non-finite value %r skipped", path, lineno, value)
            continue
        rows.append((parameter, server_timestamp, timestamp, number))

    rows.sort(key=lambda row: (row[0], row[1], row[2]))
    series: dict[str, list] = {}
    for parameter, _, _, number in rows:
        series.setdefault(parameter, []).append(number)
    return MachiningSeries(log_id=log_id, series=series, total_rows=total)


def load_series(paths) -> list:
    return [load_series_file(path) for path in paths]


def filter_logs(series_list, min_points: int, strict: bool = False) -> list:
    """Keep logs with at least ``min_points`` data rows (``>`` when strict)."""
    if min_points < 1:
        raise AnalyticsError("min_points must be >= 1")
    if strict:
        return [s for s in series_list if s.total_rows > min_points]
    return [s for s in series_list if s.total_rows >= min_points]


def select_parameters(series_list, min_occurrence: int) -> list:
    """Parameters present in every log with at least ``min_occurrence`` values.

    Returned sorted for reproducibility.  Raises when nothing qualifies,
    which usually means the occurrence threshold is too high.
    """
    if not series_list:
        raise AnalyticsError("no logs to select parameters from")
    common = set(series_list[0].series)
    for entry in series_list[1:]:
        common &= set(entry.series)
    selected = sorted(
        parameter
        for parameter in common
        if min(entry.length(parameter) for entry in series_list) >= min_occurrence
    )
    if not selected:
        raise AnalyticsError(
            f"no parameter occurs >= {min_occurrence} times in every log; lower the threshold"
        )
    return selected


@dataclass
class WindowSpec:
    position: str  # "first" | "middle" | "last"
    k: int

    def __post_init__(self):
        if self.position not in ("first", "middle", "last"):
            raise AnalyticsError(f"unknown window position {self.position!r}")
        if self.k < 1:
            raise AnalyticsError("window size must be >= 1")


def window_values(values, spec: WindowSpec, log_id: str = "", parameter: str = "") -> list:
    """Pick the window slice of a series.

    ``first`` takes indices 1..k, ``last`` takes n-k+1..n, and ``middle``
    takes round(n/2)-3+j for j=1..k with banker's rounding (1-based, the
    centering constant matching the original five-point window).
    """
    n = len(values)
    if spec.position == "first":
        start, end = 1, spec.k
    elif spec.position == "last":
        start, end = n - spec.k + 1, n
    else:
        mid = round(n / 2)
        start, end = mid - 3 + 1, mid - 3 + spec.k
    if start < 1 or end > n:
        raise AnalyticsError(
            f"window {spec.position}/{spec.k} out of range for log {log_id!r} "
            f"parameter {parameter!r} (length {n}, indices {start}..{end})"
        )
    return list(values[start - 1 : end])


@dataclass
class FeatureMatrix:
    ids: list
    columns: list
    values: np.ndarray

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["id"] + list(self.columns))
        for row_id, row in zip(self.ids, self.values):
            writer.writerow([row_id] + [repr(float(v)) for v in row])
        return buffer.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8")

    @classmethod
    def from_csv_text(cls, text: str) -> "FeatureMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:1] != ["id"]:
            raise AnalyticsError("feature CSV must start with an 'id' header column")
        columns = rows[0][1:]
        ids, values = [], []
        for row in rows[1:]:
            if not row:
                continue
            if len(row) != len(columns) + 1:
                raise AnalyticsError(f"feature CSV row for {row[0]!r} has wrong width")
            ids.append(row[0])
            values.append([float(v) for v in row[1:]])
        return cls(ids=ids, columns=columns, values=np.asarray(values, dtype=float))

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        return cls.from_csv_text(Path(path).read_text(encoding="utf-8"))


def build_feature_matrix(series_list, parameters, spec: WindowSpec) -> FeatureMatrix:
    """One row per log, one column per parameter/window-slot pair.

    Column names are ``<parameter><j>`` with j=1 the earliest slot inside
    the window; every selected log must provide every parameter.
    """
    columns = [f"{parameter}{j}" for parameter in parameters for j in range(1, spec.k + 1)]
    data = np.empty((len(series_list), len(columns)), dtype=float)
    for row, entry in enumerate(series_list):
        offset = 0
        for parameter in parameters:
            if parameter not in entry.series:
                raise AnalyticsError(
                    f"log {entry.log_id!r} is missing parameter {parameter!r}"
                )
            window = window_values(entry.series[parameter], spec, entry.log_id, parameter)
            data[row, offset : offset + spec.k] = window
            offset += spec.k
    return FeatureMatrix(
        ids=[entry.log_id for entry in series_list], columns=columns, values=data
    )
