"""Per-(sensor type, candidate site) coverage precomputation.

For every pair this module derives the set of blocks whose four corners all
lie within the sensor's range, the mean detection probability over that set,
the complementary misdetection probability, and the number of sensor units
needed at the site to push the at-least-one-detection probability up to the
required level.

Covered-block sets are stored as integer bitmasks (bit z = block index z) so
that tables for city-scale meshes stay small and set algebra in the placement
solver is cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import SensorCatalog, SensorSpec
from .errors import DegenerateDetection, InfeasibleCoverage, ValidationError
from .mesh import AreaMesh, CandidateSite, Terrain

#: Rounding modes for the unit-count formula.  The formula yields a real
#: number; ``ceil`` is the only mode that guarantees the detection requirement.
ROUNDING_MODES = ("ceil", "nearest", "floor")

# Tolerance for boundary blocks: a corner exactly on the range circle counts
# as covered, and float noise of well under a millimeter must not flip it.
_EDGE_EPS_KM = 1e-12

# Ratios this close to an integer are snapped before rounding so that
# analytically integer cases (e.g. log(0.04)/log(0.2) = 2) stay exact.
_SNAP_REL = 1e-9


def block_detection(mesh: AreaMesh, catalog: SensorCatalog) -> dict:
    """Detection probability per block for each sensor type (0 outside the area)."""
    table = {}
    for spec in catalog:
        omega = np.zeros(mesh.n_blocks, dtype=np.float64)
        for terrain, p in spec.detect.items():
            omega[mesh.terrain == int(terrain)] = p
        omega[mesh.terrain == int(Terrain.OUTSIDE_AREA)] = 0.0
        table[spec.name] = omega
    return table


class _BlockGeometry:
    """Precomputed per-block corner bounds along each axis."""

    def __init__(self, mesh: AreaMesh):
        L = mesh.block_side
        self.x_lo = mesh.x0 + np.arange(mesh.blocks_x, dtype=np.float64) * L
        self.x_hi = self.x_lo + L
        self.y_lo = mesh.y0 + np.arange(mesh.blocks_y, dtype=np.float64) * L
        self.y_hi = self.y_lo + L
        self.in_area = mesh.in_area.reshape(mesh.blocks_y, mesh.blocks_x)
        self.mesh = mesh

    def covered(self, site_x: float, site_y: float, range_km: float) -> np.ndarray:
        """Boolean grid of in-area blocks whose farthest corner is within range."""
        mesh = self.mesh
        L = mesh.block_side
        j_lo = max(0, int(math.floor((site_y - range_km - mesh.y0) / L)) - 1)
        j_hi = min(mesh.blocks_y, int(math.ceil((site_y + range_km - mesh.y0) / L)) + 1)
        k_lo = max(0, int(math.floor((site_x - range_km - mesh.x0) / L)) - 1)
        k_hi = min(mesh.blocks_x, int(math.ceil((site_x + range_km - mesh.x0) / L)) + 1)
        out = np.zeros((mesh.blocks_y, mesh.blocks_x), dtype=bool)
        if j_lo >= j_hi or k_lo >= k_hi:
            return out
        # Farthest corner of each block from the site, per axis.
        dx = np.maximum(np.abs(site_x - self.x_lo[k_lo:k_hi]), np.abs(site_x - self.x_hi[k_lo:k_hi]))
        dy = np.maximum(np.abs(site_y - self.y_lo[j_lo:j_hi]), np.abs(site_y - self.y_hi[j_lo:j_hi]))
        limit = (range_km + _EDGE_EPS_KM) ** 2
        window = dx[None, :] ** 2 + dy[:, None] ** 2 <= limit
        out[j_lo:j_hi, k_lo:k_hi] = window & self.in_area[j_lo:j_hi, k_lo:k_hi]
        return out


def covered_blocks(mesh: AreaMesh, sensor: SensorSpec, site: CandidateSite) -> tuple:
    """Indices of in-area blocks fully inside the sensor's range from ``site``."""
    grid = _BlockGeometry(mesh).covered(site.x, site.y, sensor.range_km)
    return tuple(int(z) for z in np.nonzero(grid.reshape(-1))[0])


def redundancy(mean_detect: float, required: float, fov: int = 1, rounding: str = "ceil") -> int:
    """Units of one sensor type needed at a site to meet the detection requirement.

    The real-valued unit count log(1-required)/log(1-mean_detect) is rounded
    per ``rounding`` (near-integer ratios are snapped first), clamped to at
    least 1, then multiplied by the 360-degree field-of-view multiplier.
    """
    if mean_detect >= 1.0:
        raise DegenerateDetection(f"mean detection probability {mean_detect} leaves zero misdetection")
    if not 0.0 < mean_detect < 1.0:
        raise ValidationError(f"mean detection probability must be in (0, 1), got {mean_detect}")
    if not 0.0 < required < 1.0:
        raise ValidationError(f"required detection probability must be in (0, 1), got {required}")
    if rounding not in ROUNDING_MODES:
        raise ValidationError(f"unknown rounding mode {rounding!r}; expected one of {ROUNDING_MODES}")
    raw = math.log1p(-required) / math.log1p(-mean_detect)
    nearest_int = round(raw)
    if abs(raw - nearest_int) <= _SNAP_REL * max(1.0, abs(raw)):
        n = int(nearest_int)
    elif rounding == "ceil":
        n = math.ceil(raw)
    elif rounding == "floor":
        n = math.floor(raw)
    else:
        n = math.floor(raw + 0.5)
    return max(1, n) * fov


@dataclass(frozen=True)
class CoverageEntry:
    """Coverage, detection statistics, and install cost of one (sensor, site) pair."""

    sensor: str
    site: int
    mask: int = field(repr=False)
    n_covered: int
    mean_detect: float
    misdetect: float
    units: int
    install_cost: float

    @property
    def covered_blocks(self) -> tuple:
        return _mask_indices(self.mask)


def _mask_indices(mask: int) -> tuple:
    out = []
    while mask:
        lsb = mask & -mask
        out.append(lsb.bit_length() - 1)
        mask ^= lsb
    return tuple(out)


def _mask_from_bools(flags: np.ndarray) -> int:
    packed = np.packbits(flags.reshape(-1), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


@dataclass(frozen=True)
class CoverageTable:
    """All retained (sensor, site) coverage entries for one mesh and catalog."""

    mesh: AreaMesh = field(repr=False)
    catalog: SensorCatalog = field(repr=False)
    required_detection: float
    rounding: str
    entries: tuple = field(repr=False)
    uncovered: tuple

    @property
    def feasible(self) -> bool:
        return not self.uncovered

    def entries_for(self, sensor: str) -> tuple:
        return tuple(e for e in self.entries if e.sensor == sensor)

    def write_csv(self, fp) -> None:
        fp.write("sensor,site_index,n_blocks,zeta,tau,kappa,install_cost_usd\n")
        for e in self.entries:
            fp.write(
                f"{e.sensor},{e.site},{e.n_covered},{e.mean_detect!r},{e.misdetect!r},{e.units},{e.install_cost!r}\n"
            )


def build_coverage(
    mesh: AreaMesh,
    catalog: SensorCatalog,
    required_detection: float,
    rounding: str = "ceil",
    strict: bool = True,
) -> CoverageTable:
    """Compute coverage entries for every (sensor type, candidate site) pair.

    Pairs covering no block are dropped.  If some in-area block is covered by
    no pair at all the table is infeasible: with ``strict`` (the default) an
    :class:`InfeasibleCoverage` error lists the uncovered block indices,
    otherwise the table is returned with its ``uncovered`` field populated.
    """
    if not 0.0 < required_detection < 1.0:
        raise ValidationError(f"required detection must be in (0, 1), got {required_detection}")
    if rounding not in ROUNDING_MODES:
        raise ValidationError(f"unknown rounding mode {rounding!r}; expected one of {ROUNDING_MODES}")

    geometry = _BlockGeometry(mesh)
    omegas = block_detection(mesh, catalog)
    entries = []
    union = np.zeros(mesh.n_blocks, dtype=bool)
    for spec in sorted(catalog, key=lambda s: s.name):
        omega = omegas[spec.name]
        for site in mesh.candidate_sites:
            grid = geometry.covered(site.x, site.y, spec.range_km)
            flags = grid.reshape(-1)
            n = int(np.count_nonzero(flags))
            if n == 0:
                continue
            union |= flags
            zeta = float(omega[flags].mean())
            units = redundancy(zeta, required_detection, spec.fov_multiplier, rounding)
            entries.append(
                CoverageEntry(
                    sensor=spec.name,
                    site=site.block,
                    mask=_mask_from_bools(flags),
                    n_covered=n,
                    mean_detect=zeta,
                    misdetect=1.0 - zeta,
                    units=units,
                    install_cost=units * spec.unit_price_usd,
                )
            )

    uncovered = tuple(int(z) for z in np.nonzero(mesh.in_area & ~union)[0])
    if uncovered and strict:
        raise InfeasibleCoverage(uncovered)
    return CoverageTable(
        mesh=mesh,
        catalog=catalog,
        required_detection=required_detection,
        rounding=rounding,
        entries=tuple(entries),
        uncovered=uncovered,
    )
