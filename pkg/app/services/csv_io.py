"""
CSV reading and writing for data matrices and result tables.
"""

import csv
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np
import structlog

from app.core.exceptions import CSVParseError
from app.schemas.monitoring import MonitoringResult

logger = structlog.get_logger()

PathLike = Union[str, Path]


def variable_names(n_variables: int) -> List[str]:
    """x1 .. xm."""
    return [f"x{i}" for i in range(1, n_variables + 1)]


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; 0/1 for booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_matrix(path: PathLike) -> np.ndarray:
    """Read a header + numeric rows CSV into an N x m matrix."""
    path = Path(path)
    rows: List[List[float]] = []
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header: Optional[List[str]] = None
        for fields in reader:
            line = reader.line_num
            if not fields or all(not field.strip() for field in fields):
                continue
            if header is None:
                if all(_is_number(field) for field in fields):
                    raise CSVParseError("missing header row", str(path), line)
                header = [field.strip() for field in fields]
                continue
            if len(fields) != len(header):
                raise CSVParseError(
                    f"expected {len(header)} fields, found {len(fields)}", str(path), line
                )
            try:
                values = [float(field) for field in fields]
            except ValueError as exc:
                raise CSVParseError(f"non-numeric value ({exc})", str(path), line) from exc
            if not all(np.isfinite(values)):
                raise CSVParseError("non-finite value", str(path), line)
            rows.append(values)

    if header is None:
        raise CSVParseError("file is empty", str(path))
    if not rows:
        raise CSVParseError("no data rows", str(path))

    logger.debug("csv_read", path=str(path), n_samples=len(rows), n_variables=len(header))
    return np.array(rows, dtype=float)


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header and rows with round-trip float formatting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def write_matrix(path: PathLike, X: np.ndarray, header: Optional[Sequence[str]] = None) -> Path:
    """Write an N x m matrix under an x1..xm header."""
    X = np.asarray(X, dtype=float)
    return write_table(path, header or variable_names(X.shape[1]), X.tolist())


STATISTICS_HEADER = ("sample", "t2", "spe", "t2_threshold", "spe_threshold", "alarm")


def write_statistics(path: PathLike, result: MonitoringResult) -> Path:
    """Per-sample statistics and limits, one row per sample numbered from 1."""
    rows = (
        (index, t2, spe, result.t2_threshold, result.spe_threshold, alarm)
        for index, (t2, spe, alarm) in enumerate(
            zip(result.t2.tolist(), result.spe.tolist(), result.alarms.tolist()), start=1
        )
    )
    return write_table(path, STATISTICS_HEADER, rows)
