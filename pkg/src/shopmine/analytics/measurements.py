"""Quality measurement tables: manual (MM1-MM3) and automatic test results.

The measuring CSV is star-delimited with any number of leading identifier
columns, then MM1..MM3, then the automatic test columns; the first three
automatic tests (the surface/"Flaeche" checks) are excluded from overall
automatic acceptance.  A recording error in one batch shifted the manual
results, which :func:`apply_measurement_shift` undoes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AnalyticsError

log = logging.getLogger(__name__)

MANUAL_COLUMNS = ("MM1", "MM2", "MM3")

# Automatic acceptance skips this many leading tests (the Flaeche ones).
SKIPPED_AUTOMATIC_TESTS = 3

_TRUE = {"true", "t", "1", "ok", "wahr"}
_FALSE = {"false", "f", "0", "nok", "falsch"}


def _parse_bool(text: str):
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    if value in ("", "na", "nan"):
        return None
    raise AnalyticsError(f"cannot interpret {text!r} as a boolean measurement")


@dataclass
class MeasurementTable:
    ids: list  # one per part, in file order
    mm: list  # rows of (MM1, MM2, MM3); entries Optional[bool]
    test_names: list
    tests: list  # rows of Optional[bool], aligned with test_names

    def __len__(self) -> int:
        return len(self.ids)

    def manual_acceptance(self, row: int):
        values = self.mm[row]
        if any(v is None for v in values):
            return None
        return all(values)

    def automatic_acceptance(self, row: int):
        values = self.tests[row][SKIPPED_AUTOMATIC_TESTS:]
        if any(v is None for v in values):
            return None
        return all(values)


def read_measurements(path) -> MeasurementTable:
    """Parse a star-delimited measuring CSV into a :class:`MeasurementTable`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise AnalyticsError(f"{path}: empty measurements file")
    header = lines[0].split("*")
    try:
        mm_start = header.index("MM1")
    except ValueError:
        raise AnalyticsError(f"{path}: header has no MM1 column") from None
    if header[mm_start : mm_start + 3] != list(MANUAL_COLUMNS):
        raise AnalyticsError(f"{path}: MM1..MM3 must be consecutive columns")
    test_names = header[mm_start + 3 :]
    if len(test_names) <= SKIPPED_AUTOMATIC_TESTS:
        raise AnalyticsError(f"{path}: too few automatic test columns")

    table = MeasurementTable(ids=[], mm=[], test_names=test_names, tests=[])
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("*")
        if len(fields) != len(header):
            raise AnalyticsError(f"{path}:{lineno}: row width does not match header")
        table.ids.append(fields[0] if mm_start > 0 else str(lineno - 1))
        table.mm.append(tuple(_parse_bool(v) for v in fields[mm_start : mm_start + 3]))
        table.tests.append([_parse_bool(v) for v in fields[mm_start + 3 :]])
    return table


def apply_measurement_shift(table: MeasurementTable, from_row: int, to_row: int,
                            offset: int) -> MeasurementTable:
    """Realign MM1-MM3 for rows ``from_row..to_row`` (1-based, inclusive).

    Each row in the range takes the manual values of the row ``offset``
    above it; the displaced values from the end of the range land just
    before the range (rows ``from_row-offset .. from_row-1``).
    """
    n = len(table)
    if offset < 0:
        raise AnalyticsError("shift offset must be >= 0")
    if offset == 0:
        return MeasurementTable(
            ids=list(table.ids),
            mm=list(table.mm),
            test_names=list(table.test_names),
            tests=[list(row) for row in table.tests],
        )
    if not (1 <= from_row <= to_row <= n):
        raise AnalyticsError(f"shift range {from_row}..{to_row} outside table of {n} rows")
    if from_row - offset < 1:
        raise AnalyticsError("shift offset reaches above the first row")

    mm = list(table.mm)
    for row in range(from_row, to_row + 1):  # 1-based
        mm[row - 1] = table.mm[row - 1 - offset]
    for j in range(offset):
        mm[from_row - offset - 1 + j] = table.mm[to_row - offset + j]
    return MeasurementTable(
        ids=list(table.ids),
        mm=mm,
        test_names=list(table.test_names),
        tests=[list(row) for row in table.tests],
    )


def _complete_rows(table: MeasurementTable) -> list:
    """Rows that have a manual measurement recorded (MM1 present)."""
    return [row for row in range(len(table)) if table.mm[row][0] is not None]


def derive_measurement_labels(table: MeasurementTable, kind: str):
    """Boolean labels per part for one label definition.

    ``kind`` is ``MM1``/``MM2``/``MM3``, a named automatic test,
    ``manual`` (all three MM pass) or ``automatic`` (all non-surface
    automatic tests pass).  Parts without manual measurements are dropped;
    parts where the requested label is itself missing are excluded with a
    warning.  Returns (row indices, labels).
    """
    rows = _complete_rows(table)
    dropped = len(table) - len(rows)
    if dropped:
        log.warning("%d parts without manual measurements dropped", dropped)

    def value(row: int):
        if kind in MANUAL_COLUMNS:
            return table.mm[row][MANUAL_COLUMNS.index(kind)]
        if kind == "manual":
            return table.manual_acceptance(row)
        if kind == "automatic":
            return table.automatic_acceptance(row)
        if kind in table.test_names:
            return table.tests[row][table.test_names.index(kind)]
        raise AnalyticsError(f"unknown label kind {kind!r}")

    kept, labels = [], []
    for row in rows:
        label = value(row)
        if label is None:
            log.warning("part %s has no %s result; excluded", table.ids[row], kind)
            continue
        kept.append(row)
        labels.append(label)
    return kept, labels


@dataclass
class MeasurementStats:
    test_pass_counts: dict  # test name -> (pass, fail)
    confusion: dict = field(default_factory=dict)  # (auto, manual) -> count


def measurement_stats(table: MeasurementTable) -> MeasurementStats:
    """Pass/fail counts per automatic test plus the manual-vs-automatic confusion.

    Both are computed over parts that have manual measurements, matching
    the rows that enter classification.
    """
    rows = _complete_rows(table)
    counts = {}
    for index, name in enumerate(table.test_names):
        passed = sum(1 for row in rows if table.tests[row][index] is True)
        failed = sum(1 for row in rows if table.tests[row][index] is False)
        counts[name] = (passed, failed)
    confusion = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    for row in rows:
        auto = table.automatic_acceptance(row)
        manual = table.manual_acceptance(row)
        if auto is None or manual is None:
            continue
        confusion[(auto, manual)] += 1
    return MeasurementStats(test_pass_counts=counts, confusion=confusion)
