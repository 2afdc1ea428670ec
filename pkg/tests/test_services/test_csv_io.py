"""
Tests for CSV reading and writing.
"""

import numpy as np
import pytest

from app.core.exceptions import CSVParseError
from app.schemas.monitoring import MonitoringResult
from app.services.csv_io import (
    STATISTICS_HEADER,
    format_value,
    read_matrix,
    variable_names,
    write_matrix,
    write_statistics,
)


@pytest.mark.unit
@pytest.mark.cli
class TestCSVIO:
    """Test cases for CSV helpers."""

    def test_variable_names(self):
        """Variables are named x1..xm."""
        assert variable_names(3) == ["x1", "x2", "x3"]

    @pytest.mark.parametrize(
        "value, text",
        [(True, "1"), (np.bool_(False), "0"), (0.1, "0.1"), (np.float64(1e-8), "1e-08"), (3, "3"), (None, "")],
    )
    def test_format_value(self, value, text):
        """Floats use their shortest round-trip text."""
        assert format_value(value) == text

    def test_matrix_round_trip(self, tmp_path, rng):
        """Written matrices read back exactly."""
        X = rng.normal(size=(20, 4))
        path = write_matrix(tmp_path / "data.csv", X)

        np.testing.assert_array_equal(read_matrix(path), X)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "x1,x2,x3,x4"

    def test_blank_lines_are_skipped(self, tmp_path):
        """Empty lines do not count as rows."""
        path = tmp_path / "data.csv"
        path.write_text("a,b\n1,2\n\n3,4\n", encoding="utf-8")

        np.testing.assert_array_equal(read_matrix(path), [[1.0, 2.0], [3.0, 4.0]])

    @pytest.mark.parametrize(
        "content, line",
        [
            ("1,2\n3,4\n", 1),
            ("a,b\n1,2\n3\n", 3),
            ("a,b\n1,2\n3,oops\n", 3),
            ("a,b\n1,nan\n", 2),
        ],
    )
    def test_malformed_rows_name_the_line(self, tmp_path, content, line):
        """Parse errors carry the offending line number."""
        path = tmp_path / "bad.csv"
        path.write_text(content, encoding="utf-8")

        with pytest.raises(CSVParseError) as exc_info:
            read_matrix(path)

        assert exc_info.value.line == line
        assert f"bad.csv:{line}" in str(exc_info.value)

    @pytest.mark.parametrize("content", ["", "a,b\n"])
    def test_no_data(self, tmp_path, content):
        """Empty files and header-only files are rejected."""
        path = tmp_path / "empty.csv"
        path.write_text(content, encoding="utf-8")

        with pytest.raises(CSVParseError):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        """A missing file surfaces as an OS error."""
        with pytest.raises(FileNotFoundError):
            read_matrix(tmp_path / "absent.csv")

    def test_write_statistics(self, tmp_path):
        """One numbered row per sample with 0/1 alarms."""
        result = MonitoringResult(
            t2=np.array([1.0, 9.0]), spe=np.array([0.5, 0.25]), t2_threshold=4.0, spe_threshold=1.0,
            alarms=np.array([False, True]),
        )

        lines = write_statistics(tmp_path / "stats.csv", result).read_text(encoding="utf-8").splitlines()

        assert lines[0] == ",".join(STATISTICS_HEADER)
        assert lines[1:] == ["1,1.0,0.5,4.0,1.0,0", "2,9.0,0.25,4.0,1.0,1"]
