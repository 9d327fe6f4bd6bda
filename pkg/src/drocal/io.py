"""CSV reading and writing.

Machine-readable outputs use 17 significant digits so every float
round-trips exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .summary import TimeSeries


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else f"{x:.17g}"
    return "" if x is None else str(x)


def write_csv(path: Path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InvalidInputError(f"{path}: file is empty")
    return rows[0], rows[1:]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_series_csv(path: Path) -> list[TimeSeries]:
    """One series per row: ``dt, y(0), ..., y(T)``. An optional header row is skipped."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    start = 1 if rows and rows[0] and not _is_number(rows[0][0]) else 0
    series, length = [], None
    for r, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        values = []
        for c, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise InvalidInputError(f"{path}: row {r}, column {c}: not a number: {cell!r}") from None
        if len(values) < 3:
            raise InvalidInputError(f"{path}: row {r}: need dt and at least 2 samples")
        if length is None:
            length = len(values)
        elif len(values) != length:
            raise InvalidInputError(f"{path}: row {r}: has {len(values)} columns, expected {length}")
        try:
            series.append(TimeSeries(np.array(values[1:]), values[0]))
        except InvalidInputError as exc:
            raise InvalidInputError(f"{path}: row {r}: {exc}") from None
    if not series:
        raise InvalidInputError(f"{path}: no data rows")
    if len({s.dt for s in series}) != 1:
        raise InvalidInputError(f"{path}: all rows must share one dt")
    return series


def write_series_csv(path: Path, series):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        n = series[0].values.size
        writer.writerow(["dt"] + [f"y{t}" for t in range(n)])
        for s in series:
            writer.writerow([fmt(s.dt)] + [fmt(v) for v in s.values])


def read_matrix(path: Path) -> tuple[list[str], np.ndarray]:
    header, rows = read_csv(path)
    try:
        data = np.array([[float(c) for c in row] for row in rows if row], dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    return header, data.reshape(-1, len(header))
