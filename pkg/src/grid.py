"""Discrete 1D/2D domains on uniform lattices.

Every domain is realized on a uniform lattice with spacing ``h``. Arrays are
indexed ``[i, j]`` with ``i`` along x and ``j`` along y; one-dimensional
domains use a single column (``ny == 1``). Node classes follow the mask-file
codes: 0 exterior, 1 interior, 2 boundary.
"""
import hashlib
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .exceptions import GridError, InvalidDomainError

logger = logging.getLogger(__name__)

EXTERIOR = 0
INTERIOR = 1
BOUNDARY = 2

# Relative tolerance for matching lattice spacing to a side length
SPACING_RTOL = 1e-9

# Sample count per axis for containment tests between domains
CONTAINMENT_SAMPLES = 401


class Shape(str, Enum):
    """Supported domain shapes."""

    INTERVAL = "interval"
    RECTANGLE = "rectangle"
    DISK = "disk"
    ANNULUS = "annulus"
    MASK_FILE = "mask_file"


@dataclass(frozen=True)
class DomainSpec:
    """
    Continuous domain description.

    Lengths and positions are multiplied by ``scale``, so ``spec.scaled(t)``
    describes the dilated domain tΩ.

    Attributes:
        shape: Domain shape
        length: Interval length or rectangle side along x
        width: Rectangle side along y
        radius: Disk radius or annulus outer radius
        inner_radius: Annulus inner radius
        origin: Left end (interval) or lower-left corner (rectangle)
        center: Center of disk or annulus
        mask_path: Mask file for ``mask_file`` domains
        scale: Positive factor applied to all lengths
    """

    shape: Shape
    length: float = 1.0
    width: float = 1.0
    radius: float = 1.0
    inner_radius: float = 0.5
    origin: Tuple[float, float] = (0.0, 0.0)
    center: Tuple[float, float] = (0.0, 0.0)
    mask_path: Optional[str] = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "shape", Shape(self.shape))
        except ValueError as e:
            raise InvalidDomainError(f"Unknown domain shape: {self.shape}") from e
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

        if not self.scale > 0:
            raise InvalidDomainError(f"Scale must be positive, got {self.scale}")
        if self.shape in (Shape.INTERVAL, Shape.RECTANGLE) and not self.length > 0:
            raise InvalidDomainError(f"Side length must be positive: {self.length}")
        if self.shape == Shape.RECTANGLE and not self.width > 0:
            raise InvalidDomainError(f"Side width must be positive: {self.width}")
        if self.shape in (Shape.DISK, Shape.ANNULUS) and not self.radius > 0:
            raise InvalidDomainError(f"Radius must be positive: {self.radius}")
        if self.shape == Shape.ANNULUS and not 0 < self.inner_radius < self.radius:
            raise InvalidDomainError(
                f"Annulus requires 0 < r_inner < r_outer, got "
                f"{self.inner_radius} and {self.radius}"
            )
        if self.shape == Shape.MASK_FILE and not self.mask_path:
            raise InvalidDomainError("Mask-file domain requires mask_path")

    @property
    def dim(self) -> int:
        """Spatial dimension of the domain (mask files report 2)."""
        return 1 if self.shape == Shape.INTERVAL else 2

    def scaled(self, t: float) -> "DomainSpec":
        """Return the domain dilated by ``t`` about the coordinate origin."""
        return replace(self, scale=self.scale * t)

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """Return (xmin, xmax, ymin, ymax) of the scaled analytic domain."""
        s = self.scale
        if self.shape == Shape.INTERVAL:
            x0 = self.origin[0] * s
            return x0, x0 + self.length * s, 0.0, 0.0
        if self.shape == Shape.RECTANGLE:
            x0, y0 = self.origin[0] * s, self.origin[1] * s
            return x0, x0 + self.length * s, y0, y0 + self.width * s
        if self.shape in (Shape.DISK, Shape.ANNULUS):
            cx, cy, r = self.center[0] * s, self.center[1] * s, self.radius * s
            return cx - r, cx + r, cy - r, cy + r
        raise InvalidDomainError("Mask-file domains have no analytic bounding box")

    def signed_distance(
        self, x: NDArray[np.float64], y: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """
        Signed distance to the continuous boundary, positive inside.

        Args:
            x: x coordinates
            y: y coordinates (ignored for intervals)

        Returns:
            Array of signed distances broadcast from ``x`` and ``y``

        Raises:
            InvalidDomainError: For mask-file domains
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s = self.scale
        if self.shape == Shape.INTERVAL:
            x0 = self.origin[0] * s
            return np.minimum(x - x0, x0 + self.length * s - x) + 0.0 * y
        if self.shape == Shape.RECTANGLE:
            xmin, xmax, ymin, ymax = self.bounding_box()
            inside = np.minimum(
                np.minimum(x - xmin, xmax - x), np.minimum(y - ymin, ymax - y)
            )
            dx = np.maximum(np.maximum(xmin - x, x - xmax), 0.0)
            dy = np.maximum(np.maximum(ymin - y, y - ymax), 0.0)
            return np.where(inside >= 0, inside, -np.hypot(dx, dy))
        if self.shape in (Shape.DISK, Shape.ANNULUS):
            rho = np.hypot(x - self.center[0] * s, y - self.center[1] * s)
            outer = self.radius * s - rho
            if self.shape == Shape.DISK:
                return outer
            return np.minimum(rho - self.inner_radius * s, outer)
        raise InvalidDomainError("Mask-file domains have no analytic distance")

    def contains(self, other: "DomainSpec") -> bool:
        """
        Check that ``other`` lies inside the closure of this domain.

        The test samples ``other`` on a fine lattice, so it is exact for the
        axis-aligned and radial shapes used in practice up to the sampling
        resolution.
        """
        if Shape.MASK_FILE in (self.shape, other.shape):
            raise InvalidDomainError("Containment is undefined for mask-file domains")
        xmin, xmax, ymin, ymax = other.bounding_box()
        xs = np.linspace(xmin, xmax, CONTAINMENT_SAMPLES)
        ys = np.linspace(ymin, ymax, CONTAINMENT_SAMPLES) if other.dim == 2 else [0.0]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        inside_other = other.signed_distance(X, Y) >= 0
        tol = 1e-12 * max(1.0, xmax - xmin)
        return bool(np.all(self.signed_distance(X, Y)[inside_other] >= -tol))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Real values on the nodes of one grid.

    Exterior nodes carry NaN, which every reduction in this package skips.

    Attributes:
        values: Array with the grid's ``(nx, ny)`` shape
        grid_tag: Identity tag of the owning grid
    """

    values: NDArray[np.float64]
    grid_tag: str

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: NDArray[np.float64]) -> "ScalarField":
        """Return a field on the same grid with new values."""
        return ScalarField(values, self.grid_tag)

    def __neg__(self) -> "ScalarField":
        return self.with_values(-self.values)


FieldSource = Union[float, NDArray[np.float64], ScalarField, Callable[..., object]]


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Immutable discrete domain.

    Attributes:
        spec: Domain the grid discretizes
        n: Requested resolution
        h: Lattice spacing
        x: Node x coordinates along axis 0
        y: Node y coordinates along axis 1
        node_class: Per-node class code (EXTERIOR, INTERIOR, BOUNDARY)
        labels: Boundary component label per boundary node, -1 elsewhere
        normals: Outward unit normal per boundary node, zero elsewhere
        distance: Distance to the continuous boundary, NaN on exterior nodes
        diameter: Maximum pairwise distance between non-exterior nodes
        tag: Identity tag shared by fields on this grid
    """

    spec: DomainSpec
    n: int
    h: float
    x: NDArray[np.float64]
    y: NDArray[np.float64]
    node_class: NDArray[np.int8]
    labels: NDArray[np.int64]
    normals: NDArray[np.float64]
    distance: NDArray[np.float64]
    diameter: float
    tag: str

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.x), len(self.y))

    @property
    def dim(self) -> int:
        return 1 if len(self.y) == 1 else 2

    @property
    def interior(self) -> NDArray[np.bool_]:
        return self.node_class == INTERIOR

    @property
    def boundary(self) -> NDArray[np.bool_]:
        return self.node_class == BOUNDARY

    @property
    def active(self) -> NDArray[np.bool_]:
        return self.node_class != EXTERIOR

    @property
    def node_count(self) -> int:
        return int(self.node_class.size)

    @property
    def interior_count(self) -> int:
        return int(np.count_nonzero(self.interior))

    @property
    def boundary_count(self) -> int:
        """Number of boundary components."""
        return int(self.labels.max()) + 1 if np.any(self.labels >= 0) else 0

    def coordinates(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Return node coordinate arrays (X, Y) in grid layout."""
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return X, Y

    def field(self, source: FieldSource) -> ScalarField:
        """
        Build a field on this grid.

        Args:
            source: Constant, array of grid shape, existing field, or a
                callable ``f(X, Y)`` evaluated on node coordinates

        Returns:
            Field with NaN on exterior nodes
        """
        if isinstance(source, ScalarField):
            self.check(source)
            values = np.array(source.values, dtype=float)
        elif callable(source):
            X, Y = self.coordinates()
            values = np.broadcast_to(
                np.asarray(source(X, Y), dtype=float), self.shape
            ).copy()
        else:
            values = np.broadcast_to(np.asarray(source, dtype=float), self.shape).copy()
        values[~self.active] = np.nan
        return ScalarField(values, self.tag)

    def zeros(self) -> ScalarField:
        """Return the zero field."""
        return self.field(0.0)

    def check(self, u: ScalarField) -> None:
        """
        Ensure a field belongs to this grid.

        Raises:
            GridError: If the tag or shape does not match
        """
        if u.grid_tag != self.tag or u.values.shape != self.shape:
            raise GridError(
                f"Field on grid {u.grid_tag} {u.values.shape} used with grid "
                f"{self.tag} {self.shape}"
            )

    def sup_norm(self, u: Union[ScalarField, NDArray[np.float64]]) -> float:
        """Sup norm over non-exterior nodes."""
        values = u.values if isinstance(u, ScalarField) else np.asarray(u)
        active = values[self.active]
        return float(np.max(np.abs(active))) if active.size else 0.0


def build_domain(spec: DomainSpec, n: int) -> Grid:
    """
    Discretize a domain on a uniform lattice.

    Intervals and rectangles place boundary nodes on the edges. Disks and
    annuli use a masked lattice of spacing 2R/n with one padding layer:
    nodes deeper than h/2 inside are interior, the remaining nodes touching
    an interior node are boundary, everything else is exterior.

    Args:
        spec: Domain specification
        n: Resolution (number of cells across the domain's x extent)

    Returns:
        Grid satisfying the stencil-closure invariant

    Raises:
        InvalidDomainError: If n < 4 or the domain is degenerate
    """
    if n < 4:
        raise InvalidDomainError(f"Resolution must be at least 4, got {n}")

    if spec.shape == Shape.MASK_FILE:
        return _build_mask_domain(spec, n)

    x, y, h, effective = _lattice(spec, n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    node_class = np.full(X.shape, EXTERIOR, dtype=np.int8)

    if spec.shape in (Shape.INTERVAL, Shape.RECTANGLE):
        node_class[:] = BOUNDARY
        if spec.shape == Shape.INTERVAL:
            node_class[1:-1, :] = INTERIOR
        else:
            node_class[1:-1, 1:-1] = INTERIOR
    else:
        sd = effective.signed_distance(X, Y)
        interior = sd > 0.5 * h
        grown = ndimage.binary_dilation(interior, structure=np.ones((3, 3), bool))
        node_class[grown] = BOUNDARY
        node_class[interior] = INTERIOR

    if not np.any(node_class == INTERIOR):
        raise InvalidDomainError(f"Domain {spec.shape.value} has no interior nodes")
    _check_closure(node_class)

    distance = np.where(node_class == INTERIOR, effective.signed_distance(X, Y), 0.0)
    distance[node_class == EXTERIOR] = np.nan
    normals = _analytic_normals(effective, X, Y, node_class)
    return _assemble(spec, n, h, x, y, node_class, normals, distance)


def boundary_components(g: Grid) -> Tuple[int, NDArray[np.int64]]:
    """
    Count boundary components and return per-node labels.

    Labels are -1 off the boundary; components are ordered by size and then
    by centroid, so labels do not depend on node enumeration order.
    """
    return g.boundary_count, g.labels.copy()


def distance_field(g: Grid) -> ScalarField:
    """Distance to the continuous boundary, zero on boundary nodes."""
    return ScalarField(g.distance, g.tag)


def read_mask(
    path: Union[str, Path],
) -> Tuple[NDArray[np.int8], Tuple[float, float, float, float]]:
    """
    Read a mask file.

    Line 1 holds ``nx ny xmin xmax ymin ymax``; the remaining tokens are
    ``nx*ny`` class codes in row-major order with x varying fastest.

    Args:
        path: Mask file path

    Returns:
        Tuple of (node classes shaped (nx, ny), bounds)

    Raises:
        InvalidDomainError: If the file is missing or malformed
    """
    try:
        with open(path, "r") as f:
            header = f.readline().split()
            body = f.read().split()
    except OSError as e:
        raise InvalidDomainError(f"Cannot read mask file {path}: {e}") from e

    try:
        nx, ny = int(header[0]), int(header[1])
        bounds = tuple(float(v) for v in header[2:6])
        codes = np.array([int(tok) for tok in body], dtype=np.int8)
    except (IndexError, ValueError) as e:
        raise InvalidDomainError(f"Malformed mask file {path}: {e}") from e

    if len(bounds) != 4 or codes.size != nx * ny:
        raise InvalidDomainError(
            f"Mask file {path} declares {nx}x{ny} nodes but holds {codes.size}"
        )
    if not np.isin(codes, (EXTERIOR, INTERIOR, BOUNDARY)).all():
        raise InvalidDomainError(f"Mask file {path} holds codes outside 0, 1, 2")
    return codes.reshape(ny, nx).T.copy(), bounds  # type: ignore[return-value]


def _lattice(
    spec: DomainSpec, n: int
) -> Tuple[NDArray[np.float64], NDArray[np.float64], float, DomainSpec]:
    """Lattice coordinates, spacing and the domain actually realized."""
    s = spec.scale
    if spec.shape == Shape.INTERVAL:
        h = spec.length * s / n
        x = spec.origin[0] * s + h * np.arange(n + 1)
        return x, np.array([0.0]), h, spec

    if spec.shape == Shape.RECTANGLE:
        h = spec.length * s / n
        m = int(round(spec.width * s / h))
        if m < 2:
            raise InvalidDomainError(
                f"Rectangle width {spec.width * s} is below two cells at n={n}"
            )
        effective = spec
        if abs(m * h - spec.width * s) > SPACING_RTOL * spec.width * s:
            effective = replace(spec, width=m * h / s)
            logger.warning(
                f"Rectangle width adjusted to {m * h} to fit the lattice",
                extra={"requested": spec.width * s, "n": n},
            )
        x = spec.origin[0] * s + h * np.arange(n + 1)
        y = spec.origin[1] * s + h * np.arange(m + 1)
        return x, y, h, effective

    h = 2.0 * spec.radius * s / n
    offsets = h * (np.arange(n + 3) - (n + 2) / 2.0)
    return spec.center[0] * s + offsets, spec.center[1] * s + offsets, h, spec


def _check_closure(node_class: NDArray[np.int8]) -> None:
    """Require every interior node's 8-neighbourhood to be non-exterior."""
    nx, ny = node_class.shape
    interior = node_class == INTERIOR
    padded = np.pad(node_class, 1, constant_values=EXTERIOR)
    col_offsets = (0,) if ny == 1 else (-1, 0, 1)
    for di in (-1, 0, 1):
        for dj in col_offsets:
            neighbour = padded[1 + di : 1 + di + nx, 1 + dj : 1 + dj + ny]
            if np.any(interior & (neighbour == EXTERIOR)):
                raise InvalidDomainError(
                    "Interior node has an exterior or missing stencil neighbour"
                )


def _analytic_normals(
    spec: DomainSpec,
    X: NDArray[np.float64],
    Y: NDArray[np.float64],
    node_class: NDArray[np.int8],
) -> NDArray[np.float64]:
    normals = np.zeros(X.shape + (2,))
    boundary = node_class == BOUNDARY
    s = spec.scale

    if spec.shape in (Shape.INTERVAL, Shape.RECTANGLE):
        nx, ny = X.shape
        normals[0, :, 0] = -1.0
        normals[-1, :, 0] = 1.0
        if spec.shape == Shape.RECTANGLE:
            normals[:, 0, 1] = -1.0
            normals[:, -1, 1] = 1.0
    else:
        dx = X - spec.center[0] * s
        dy = Y - spec.center[1] * s
        rho = np.hypot(dx, dy)
        rho[rho == 0] = 1.0
        sign = np.ones_like(rho)
        if spec.shape == Shape.ANNULUS:
            middle = 0.5 * (spec.inner_radius + spec.radius) * s
            sign[rho < middle] = -1.0
        normals[..., 0] = sign * dx / rho
        normals[..., 1] = sign * dy / rho

    length = np.linalg.norm(normals, axis=-1, keepdims=True)
    length[length == 0] = 1.0
    normals = normals / length
    normals[~boundary] = 0.0
    return normals


def _label_boundary(
    node_class: NDArray[np.int8], X: NDArray[np.float64], Y: NDArray[np.float64]
) -> NDArray[np.int64]:
    boundary = node_class == BOUNDARY
    raw, count = ndimage.label(boundary, structure=np.ones((3, 3), dtype=bool))
    keys = []
    for k in range(1, count + 1):
        members = raw == k
        keys.append(
            (
                -int(np.count_nonzero(members)),
                round(float(X[members].mean()), 9),
                round(float(Y[members].mean()), 9),
                k,
            )
        )
    labels = np.full(node_class.shape, -1, dtype=np.int64)
    for new_label, key in enumerate(sorted(keys)):
        labels[raw == key[3]] = new_label
    return labels


def _diameter(
    X: NDArray[np.float64], Y: NDArray[np.float64], active: NDArray[np.bool_]
) -> float:
    points = np.column_stack([X[active], Y[active]])
    if np.ptp(points[:, 1]) == 0.0:
        return float(np.ptp(points[:, 0]))
    hull = ConvexHull(points)
    return float(pdist(points[hull.vertices]).max())


def _assemble(
    spec: DomainSpec,
    n: int,
    h: float,
    x: NDArray[np.float64],
    y: NDArray[np.float64],
    node_class: NDArray[np.int8],
    normals: NDArray[np.float64],
    distance: NDArray[np.float64],
) -> Grid:
    X, Y = np.meshgrid(x, y, indexing="ij")
    labels = _label_boundary(node_class, X, Y)
    diameter = _diameter(X, Y, node_class != EXTERIOR)
    digest = hashlib.sha1(f"{spec!r}|{n}".encode()).hexdigest()[:12]
    tag = f"{spec.shape.value}-n{n}-{digest}"

    for array in (x, y, node_class, labels, normals, distance):
        array.setflags(write=False)

    grid = Grid(
        spec=spec,
        n=n,
        h=float(h),
        x=x,
        y=y,
        node_class=node_class,
        labels=labels,
        normals=normals,
        distance=distance,
        diameter=diameter,
        tag=tag,
    )
    logger.debug(
        f"Built {spec.shape.value} grid with {grid.interior_count} interior nodes",
        extra={"grid": tag, "h": grid.h, "components": grid.boundary_count},
    )
    return grid


def _build_mask_domain(spec: DomainSpec, n: int) -> Grid:
    node_class, (xmin, xmax, ymin, ymax) = read_mask(spec.mask_path or "")
    nx, ny = node_class.shape
    if nx < 3:
        raise InvalidDomainError(f"Mask needs at least 3 columns, got {nx}")

    h = (xmax - xmin) / (nx - 1)
    if ny > 1:
        hy = (ymax - ymin) / (ny - 1)
        if abs(hy - h) > SPACING_RTOL * h:
            raise InvalidDomainError(f"Mask spacing differs between axes: {h} vs {hy}")
    if not h > 0:
        raise InvalidDomainError(f"Mask bounds give non-positive spacing {h}")
    if n != nx - 1:
        logger.debug(
            f"Mask resolution fixed by file; ignoring n={n}",
            extra={"nx": nx, "ny": ny},
        )
    if not np.any(node_class == INTERIOR):
        raise InvalidDomainError("Mask has no interior nodes")
    _check_closure(node_class)

    s = spec.scale
    h *= s
    x = xmin * s + h * np.arange(nx)
    y = ymin * s + h * np.arange(ny)

    distance = ndimage.distance_transform_edt(node_class != BOUNDARY) * h
    distance[node_class == EXTERIOR] = np.nan

    filled = np.nan_to_num(distance, nan=0.0)
    if ny == 1:
        gradient = [np.gradient(filled[:, 0], h)[:, None], np.zeros_like(filled)]
    else:
        gradient = np.gradient(filled, h)
    normals = -np.stack(gradient, axis=-1)
    length = np.linalg.norm(normals, axis=-1, keepdims=True)
    length[length == 0] = 1.0
    normals = normals / length
    normals[node_class != BOUNDARY] = 0.0

    return _assemble(spec, n, h, x, y, node_class, normals, distance)
