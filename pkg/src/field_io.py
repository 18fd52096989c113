"""Field dumps and CSV tables."""
import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .exceptions import GridError, SchemaError
from .grid import SPACING_RTOL, Grid, ScalarField

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.17g}"

SCHEMAS: Dict[str, List[str]] = {
    "solve": [
        "case", "n", "lambda", "converged", "iterations", "residual", "delta",
        "sup_norm", "status",
    ],
    "eig": ["lambda", "residual", "cw_lower", "iterations", "method"],
    "verify": ["check", "case", "n", "measured", "threshold", "verdict"],
}
SCHEMAS["sweep_solve"] = ["parameter", "value"] + SCHEMAS["solve"]
SCHEMAS["sweep_eig"] = ["parameter", "value"] + SCHEMAS["eig"]

FIELD_HEADER = ("nx", "ny", "xmin", "xmax", "ymin", "ymax", "h")

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """Render one CSV cell; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(
    rows: Iterable[Mapping[str, Any]], schema: Union[str, Sequence[str]], path: PathLike
) -> Path:
    """
    Write rows under a fixed column order.

    Args:
        rows: Mappings whose keys are exactly the schema columns
        schema: Schema name from ``SCHEMAS`` or an explicit column list
        path: Output file

    Returns:
        The written path

    Raises:
        SchemaError: If the schema is unknown or a row does not match it
        OSError: If the file cannot be written
    """
    if isinstance(schema, str):
        if schema not in SCHEMAS:
            raise SchemaError(f"Unknown CSV schema: {schema}")
        columns = SCHEMAS[schema]
    else:
        columns = list(schema)

    lines: List[List[str]] = []
    for index, row in enumerate(rows):
        keys = set(row)
        if keys != set(columns):
            missing = sorted(set(columns) - keys)
            extra = sorted(keys - set(columns))
            raise SchemaError(f"Row {index} does not match schema: missing {missing}, extra {extra}")
        lines.append([format_value(row[c]) for c in columns])

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(lines)
    logger.debug(f"Wrote {len(lines)} rows to {target}", extra={"columns": len(columns)})
    return target


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    """Read a table written by ``write_csv`` as string-valued rows."""
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_field(u: ScalarField, g: Grid, path: PathLike) -> Path:
    """
    Dump a field as text.

    Line 1 is ``nx ny xmin xmax ymin ymax h``; each following line holds one
    y row with x varying fastest. Exterior nodes are written as ``nan``.

    Raises:
        GridError: If the field does not belong to ``g``
        OSError: If the file cannot be written
    """
    g.check(u)
    nx, ny = g.shape
    header = [str(nx), str(ny)] + [
        FLOAT_FORMAT.format(float(v))
        for v in (g.x[0], g.x[-1], g.y[0], g.y[-1], g.h)
    ]
    values = np.asarray(u.values)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as f:
        f.write(" ".join(header) + "\n")
        for j in range(ny):
            f.write(" ".join(FLOAT_FORMAT.format(float(v)) for v in values[:, j]) + "\n")
    logger.debug(f"Wrote field to {target}", extra={"grid": g.tag})
    return target


def read_field_values(path: PathLike) -> Tuple[NDArray[np.float64], Dict[str, float]]:
    """
    Read a field dump without a grid.

    Returns:
        Tuple of (values with shape (nx, ny), header mapping)

    Raises:
        GridError: If the file is malformed
    """
    try:
        with open(path) as f:
            lines = [line.split() for line in f if line.strip()]
    except OSError as e:
        raise GridError(f"Cannot read field file {path}: {e}") from e
    if not lines or len(lines[0]) != len(FIELD_HEADER):
        raise GridError(f"Field file {path} lacks the '{' '.join(FIELD_HEADER)}' header")
    try:
        nx, ny = int(lines[0][0]), int(lines[0][1])
        header: Dict[str, float] = {"nx": nx, "ny": ny}
        for key, token in zip(FIELD_HEADER[2:], lines[0][2:]):
            header[key] = float(token)
        rows = [[float(t) for t in line] for line in lines[1:]]
    except ValueError as e:
        raise GridError(f"Malformed field file {path}: {e}") from e
    if len(rows) != ny or any(len(r) != nx for r in rows):
        raise GridError(f"Field file {path} does not hold {ny} rows of {nx} values")
    return np.asarray(rows, dtype=float).T, header


def read_field(path: PathLike, g: Grid) -> ScalarField:
    """
    Read a field dump onto a grid.

    Raises:
        GridError: If the dump does not match the grid's shape or spacing
    """
    values, header = read_field_values(path)
    if values.shape != g.shape:
        raise GridError(f"Field shape {values.shape} does not match grid {g.shape}")
    if abs(header["h"] - g.h) > SPACING_RTOL * g.h:
        raise GridError(f"Field spacing {header['h']} does not match grid {g.h}")
    return g.field(np.where(g.active, values, np.nan))
