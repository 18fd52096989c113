"""Pytest configuration and fixtures."""
import tempfile
from pathlib import Path
from typing import Callable, Generator

import pytest

from src.dirichlet import SolveConfig
from src.grid import DomainSpec, Grid, Shape, build_domain
from src.operators import OperatorKind, OperatorSpec


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def unit_interval() -> DomainSpec:
    """The interval (0, 1)."""
    return DomainSpec(shape=Shape.INTERVAL)


@pytest.fixture
def interval_grid(unit_interval: DomainSpec) -> Grid:
    """Coarse grid on (0, 1)."""
    return build_domain(unit_interval, 64)


@pytest.fixture
def square_grid() -> Grid:
    """Coarse grid on the unit square."""
    return build_domain(DomainSpec(shape=Shape.RECTANGLE), 16)


@pytest.fixture
def disk_grid() -> Grid:
    """Coarse grid on the unit disk."""
    return build_domain(DomainSpec(shape=Shape.DISK), 24)


@pytest.fixture
def laplacian() -> OperatorSpec:
    """Laplacian written as the linear kind with a = A = 1."""
    return OperatorSpec(kind=OperatorKind.LINEAR)


@pytest.fixture
def pucci_plus() -> OperatorSpec:
    """Pucci maximal operator with a=1, A=2."""
    return OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0)


@pytest.fixture
def solve_cfg() -> SolveConfig:
    """Default solver settings."""
    return SolveConfig()


@pytest.fixture
def write_config(temp_dir: Path) -> Callable[[str], Path]:
    """Write config text to a file and return its path."""

    def write(text: str, name: str = "run.cfg") -> Path:
        path = temp_dir / name
        path.write_text(text)
        return path

    return write
