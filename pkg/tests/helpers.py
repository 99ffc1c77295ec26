"""Shared builders for tests: geographic rectangles with exact km spans and
small synthetic meshes/specs."""

import math

import numpy as np

from gridwatch.catalog import SensorSpec
from gridwatch.geo import EARTH_RADIUS_KM, GeoPoint
from gridwatch.mesh import DETECTABLE_TERRAINS, build_mesh

_DEG = math.pi / 180.0


def corners_for(width_km, height_km, lon0=-84.0, lat0=39.0):
    """Four corners whose projected bounding box spans exactly the given km."""
    dlat = height_km / (EARTH_RADIUS_KM * _DEG)
    # The projection origin sits at the bounding-box centroid, so the cosine
    # factor must be taken at mid-latitude for the width to come out exact.
    dlon = width_km / (EARTH_RADIUS_KM * math.cos((lat0 + dlat / 2.0) * _DEG) * _DEG)
    return (
        GeoPoint(lon0, lat0),
        GeoPoint(lon0 + dlon, lat0),
        GeoPoint(lon0 + dlon, lat0 + dlat),
        GeoPoint(lon0, lat0 + dlat),
    )


def square_mesh(blocks, terrain=None, block_side=0.3, min_range=None):
    """Square mesh of blocks x blocks; terrain defaults to all-open."""
    if terrain is None:
        terrain = np.zeros((blocks, blocks), dtype=int)
    else:
        terrain = np.asarray(terrain, dtype=int)
    if min_range is None:
        min_range = block_side
    span = blocks * block_side
    return build_mesh(corners_for(span, span), block_side, terrain, min_range)


def uniform_detect(p):
    return {t: p for t in DETECTABLE_TERRAINS}


def make_spec(name="Probe", range_km=1.0, price=1000.0, fov=1, detect=None, noncoop=True):
    return SensorSpec(
        name=name,
        range_km=range_km,
        unit_price_usd=price,
        fov_multiplier=fov,
        tracks_noncooperative=noncoop,
        detect=detect if detect is not None else uniform_detect(0.9),
    )


def site_for_block(mesh, block):
    for s in mesh.candidate_sites:
        if s.block == block:
            return s
    raise AssertionError(f"block {block} has no candidate site")
