"""Tests for field dumps and CSV tables."""
import numpy as np
import pytest

from src.exceptions import GridError, SchemaError
from src.field_io import (
    SCHEMAS,
    format_value,
    read_csv,
    read_field,
    read_field_values,
    write_csv,
    write_field,
)
from src.grid import DomainSpec, Shape, build_domain


class TestFormatting:
    """Test CSV cell formatting."""

    def test_values(self):
        """Test booleans, integers, floats and missing values."""
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(np.int64(7)) == "7"
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(float("nan")) == "nan"
        assert format_value(None) == ""
        assert format_value("pass") == "pass"


class TestCsv:
    """Test fixed-schema CSV output."""

    def test_eig_schema(self, temp_dir):
        """Test the eig table has its fixed header."""
        path = write_csv(
            [{"lambda": 9.87, "residual": 1e-8, "cw_lower": 9.8, "iterations": 12, "method": "power"}],
            "eig",
            temp_dir / "run_eig.csv",
        )

        lines = path.read_text().splitlines()
        assert lines[0] == "lambda,residual,cw_lower,iterations,method"
        assert lines[1].endswith(",12,power")
        assert read_csv(path)[0]["method"] == "power"

    def test_sweep_schemas(self):
        """Test sweep schemas prepend parameter and value."""
        assert SCHEMAS["sweep_eig"][:2] == ["parameter", "value"]
        assert SCHEMAS["sweep_solve"][2:] == SCHEMAS["solve"]

    def test_row_mismatch(self, temp_dir):
        """Test a row with a missing column is rejected."""
        with pytest.raises(SchemaError) as exc_info:
            write_csv([{"lambda": 1.0}], "eig", temp_dir / "bad.csv")

        assert "missing" in str(exc_info.value)

    def test_unknown_schema(self, temp_dir):
        """Test an unknown schema name is rejected."""
        with pytest.raises(SchemaError):
            write_csv([], "plot", temp_dir / "bad.csv")

    def test_creates_directories(self, temp_dir):
        """Test missing parent directories are created."""
        path = write_csv([], ["a", "b"], temp_dir / "nested" / "empty.csv")

        assert path.read_text() == "a,b\n"


class TestFieldDumps:
    """Test field dump files."""

    def test_header_and_rows(self, temp_dir, square_grid):
        """Test the header line and one line per y row."""
        u = square_grid.field(lambda X, Y: X + 2.0 * Y)
        path = write_field(u, square_grid, temp_dir / "u.field")

        lines = path.read_text().splitlines()
        assert lines[0].split()[:2] == ["17", "17"]
        assert len(lines) == 1 + 17
        values, header = read_field_values(path)
        assert header["h"] == pytest.approx(1.0 / 16.0)
        np.testing.assert_array_equal(values, u.values)

    def test_exterior_written_as_nan(self, temp_dir, disk_grid):
        """Test exterior nodes survive as NaN."""
        u = disk_grid.field(1.0)
        path = write_field(u, disk_grid, temp_dir / "disk.field")

        restored = read_field(path, disk_grid)

        assert np.all(np.isnan(restored.values[~disk_grid.active]))
        assert np.all(restored.values[disk_grid.active] == 1.0)

    def test_grid_mismatch(self, temp_dir, square_grid):
        """Test reading onto a grid of another shape fails."""
        path = write_field(square_grid.zeros(), square_grid, temp_dir / "u.field")
        other = build_domain(DomainSpec(shape=Shape.RECTANGLE), 8)

        with pytest.raises(GridError) as exc_info:
            read_field(path, other)

        assert "does not match grid" in str(exc_info.value)

    def test_malformed_file(self, temp_dir):
        """Test a file without the header is rejected."""
        path = temp_dir / "bad.field"
        path.write_text("1 2 3\n")

        with pytest.raises(GridError):
            read_field_values(path)
