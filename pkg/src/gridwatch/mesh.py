"""Rectangular surveillance mesh: points, square blocks, terrain, candidate sites.

The area is the axis-aligned bounding rectangle of four projected corner
coordinates, tiled with square blocks of side ``block_side`` km.  Terrain
arrives as a row-major integer grid (row 0 = southernmost block row); a code
of -1 marks blocks outside the irregular area boundary.  Every in-area,
non-water block contributes one candidate sensor site at its center.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, ParseError, RangeTooSmall, ValidationError
from .geo import GeoPoint, PlanePoint, project, unproject


class Terrain(enum.IntEnum):
    """Per-block terrain classification; OUTSIDE_AREA means the block is not part of the area."""

    OUTSIDE_AREA = -1
    OPEN = 0
    WATER = 1
    NEIGHBORHOOD = 2
    HILL = 3
    COMMERCIAL = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_code(cls, code: int) -> "Terrain":
        try:
            return cls(int(code))
        except ValueError:
            raise ParseError(f"unknown terrain code {code!r}; expected one of -1, 0, 1, 2, 3, 4") from None


#: Terrain kinds that carry a detection probability (everything except OUTSIDE_AREA).
DETECTABLE_TERRAINS = (Terrain.OPEN, Terrain.WATER, Terrain.NEIGHBORHOOD, Terrain.HILL, Terrain.COMMERCIAL)


def _cells_to_span(length: float, cell: float) -> int:
    """Number of cells of size ``cell`` needed to tile ``length``, robust to float noise."""
    q = length / cell
    nearest = round(q)
    if nearest >= 1 and abs(q - nearest) <= 1e-9 * max(1.0, abs(q)):
        return int(nearest)
    return max(1, math.ceil(q))


def load_terrain_grid(path) -> np.ndarray:
    """Read a terrain CSV (rows of integer codes, row 0 = southernmost) into an int array."""
    rows = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            codes = [int(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        rows.append(codes)
    if not rows:
        raise ParseError(f"{path}: empty terrain grid")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{path}: ragged terrain grid (expected {width} columns on every row)")
    grid = np.array(rows, dtype=np.int64)
    valid = {t.value for t in Terrain}
    bad = sorted(set(np.unique(grid).tolist()) - valid)
    if bad:
        raise ParseError(f"{path}: unknown terrain code(s) {bad}; expected codes in {sorted(valid)}")
    return grid


@dataclass(frozen=True)
class CandidateSite:
    """A potential sensor location: the center of an in-area, non-water block."""

    block: int
    x: float
    y: float


@dataclass(frozen=True)
class AreaMesh:
    """Immutable projected mesh over the surveillance area."""

    corners: tuple
    origin: GeoPoint
    block_side: float
    length_a: float
    length_b: float
    n_a: int  # points along x
    n_b: int  # points along y
    x0: float
    y0: float
    terrain: np.ndarray = field(repr=False)  # flat int8, len n_blocks, row-major from the south
    candidate_sites: tuple = field(repr=False)

    # -- sizes ---------------------------------------------------------------

    @property
    def blocks_x(self) -> int:
        return self.n_a - 1

    @property
    def blocks_y(self) -> int:
        return self.n_b - 1

    @property
    def n_points(self) -> int:
        return self.n_a * self.n_b

    @property
    def n_blocks(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def removed_count(self) -> int:
        """Number of mesh blocks falling outside the area boundary."""
        return int(np.count_nonzero(self.terrain == Terrain.OUTSIDE_AREA))

    # -- geometry ------------------------------------------------------------

    def point_xy(self, i: int) -> PlanePoint:
        j, k = divmod(i, self.n_a)
        return PlanePoint(self.x0 + k * self.block_side, self.y0 + j * self.block_side)

    @property
    def points(self) -> tuple:
        return tuple(self.point_xy(i) for i in range(self.n_points))

    def block_corner_point_indices(self, z: int) -> tuple:
        j, k = divmod(z, self.blocks_x)
        base = j * self.n_a + k
        return (base, base + 1, base + self.n_a, base + self.n_a + 1)

    def block_bounds(self, z: int) -> tuple:
        """(x_lo, y_lo, x_hi, y_hi) of block z in plane km."""
        j, k = divmod(z, self.blocks_x)
        L = self.block_side
        return (self.x0 + k * L, self.y0 + j * L, self.x0 + (k + 1) * L, self.y0 + (j + 1) * L)

    def block_center(self, z: int) -> PlanePoint:
        j, k = divmod(z, self.blocks_x)
        L = self.block_side
        return PlanePoint(self.x0 + (k + 0.5) * L, self.y0 + (j + 0.5) * L)

    # -- terrain -------------------------------------------------------------

    def block_terrain(self, z: int) -> Terrain:
        return Terrain(int(self.terrain[z]))

    @property
    def in_area(self) -> np.ndarray:
        return self.terrain != Terrain.OUTSIDE_AREA

    @property
    def in_area_blocks(self) -> tuple:
        return tuple(int(z) for z in np.nonzero(self.in_area)[0])

    @property
    def terrain_grid(self) -> np.ndarray:
        return self.terrain.reshape(self.blocks_y, self.blocks_x)


def build_mesh(
    corners: Sequence[GeoPoint],
    block_side: float,
    terrain_grid,
    min_sensor_range: float,
) -> AreaMesh:
    """Build the projected mesh for four geographic corners.

    ``terrain_grid`` is either a path to a terrain CSV or an integer array of
    shape (blocks_y, blocks_x).  ``min_sensor_range`` must be at least
    block_side/sqrt(2) so a sensor at a block center can reach the block's own
    corners; smaller ranges would leave guaranteed blind spots.
    """
    corners = tuple(corners)
    if len(corners) != 4:
        raise ValidationError(f"expected 4 corner coordinates, got {len(corners)}")
    if block_side <= 0 or not math.isfinite(block_side):
        raise ValidationError(f"block side must be positive, got {block_side}")
    if min_sensor_range < block_side / math.sqrt(2):
        raise RangeTooSmall(
            f"minimum sensor range {min_sensor_range:.6g} km is below "
            f"block_side/sqrt(2) = {block_side / math.sqrt(2):.6g} km"
        )

    lons = [c.lon for c in corners]
    lats = [c.lat for c in corners]
    origin = GeoPoint((min(lons) + max(lons)) / 2.0, (min(lats) + max(lats)) / 2.0)
    projected = [project(c, origin) for c in corners]
    xs = [p.x for p in projected]
    ys = [p.y for p in projected]
    x0, y0 = min(xs), min(ys)
    length_a = max(xs) - x0
    length_b = max(ys) - y0
    if length_a <= 0 or length_b <= 0:
        raise InvariantViolation("corner coordinates span a degenerate (zero-area) rectangle")

    blocks_x = _cells_to_span(length_a, block_side)
    blocks_y = _cells_to_span(length_b, block_side)

    if isinstance(terrain_grid, (str, Path)):
        grid = load_terrain_grid(terrain_grid)
    else:
        grid = np.asarray(terrain_grid, dtype=np.int64)
        valid = {t.value for t in Terrain}
        bad = sorted(set(np.unique(grid).tolist()) - valid)
        if bad:
            raise ParseError(f"unknown terrain code(s) {bad}")
    if grid.shape != (blocks_y, blocks_x):
        raise DimensionMismatch(
            f"terrain grid is {grid.shape[0]}x{grid.shape[1]} but the mesh has "
            f"{blocks_y}x{blocks_x} blocks ({blocks_x + 1}x{blocks_y + 1} points)"
        )

    terrain = grid.reshape(-1).astype(np.int8)
    L = block_side
    sites = []
    placeable = (terrain != Terrain.OUTSIDE_AREA) & (terrain != Terrain.WATER)
    for z in np.nonzero(placeable)[0]:
        j, k = divmod(int(z), blocks_x)
        sites.append(CandidateSite(int(z), x0 + (k + 0.5) * L, y0 + (j + 0.5) * L))

    return AreaMesh(
        corners=corners,
        origin=origin,
        block_side=block_side,
        length_a=length_a,
        length_b=length_b,
        n_a=blocks_x + 1,
        n_b=blocks_y + 1,
        x0=x0,
        y0=y0,
        terrain=terrain,
        candidate_sites=tuple(sites),
    )


def mesh_to_geojson(mesh: AreaMesh) -> dict:
    """GeoJSON FeatureCollection of block polygons with terrain and in-area flags."""
    features = []
    for z in range(mesh.n_blocks):
        x_lo, y_lo, x_hi, y_hi = mesh.block_bounds(z)
        ring = [
            unproject(PlanePoint(x_lo, y_lo), mesh.origin),
            unproject(PlanePoint(x_hi, y_lo), mesh.origin),
            unproject(PlanePoint(x_hi, y_hi), mesh.origin),
            unproject(PlanePoint(x_lo, y_hi), mesh.origin),
        ]
        coords = [[p.lon, p.lat] for p in ring]
        coords.append(coords[0])
        terrain = mesh.block_terrain(z)
        features.append(
            {
                "type": "Feature",
                "id": z,
                "geometry": {"type": "Polygon", "coordinates": [coords]},
                "properties": {"terrain": terrain.label, "in_area": terrain != Terrain.OUTSIDE_AREA},
            }
        )
    return {"type": "FeatureCollection", "features": features}
