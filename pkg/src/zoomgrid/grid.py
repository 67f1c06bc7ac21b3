"""Zoom-discretized grid math.

The grid spacing (separation) starts at 90 degrees for zoom 0 and halves
per zoom level down to zoom 17. Snapping a coordinate means replacing it
with the nearest multiple of the separation; the multiple's index is the
cell index. Because 90/2**z is an exact binary float for every level, cell
centers reconstruct exactly from integer indices and grouping by cell is
plain integer equality.

Also provides the older decimal-truncation discretizer kept for the
level-jump comparison experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal

import numpy as np

from .geomodel import ZOOM_LEVELS, GeoPoint, GridCell, ValidationError, check_zoom

# 90/2**z is exactly representable: dividing by two only shifts the exponent.
SEPARATIONS: tuple[float, ...] = tuple(90.0 / (1 << z) for z in range(ZOOM_LEVELS))

MIN_DECIMALS = 2
MAX_DECIMALS = 8


def separation(zoom: int) -> float:
    """Grid spacing in degrees at a zoom level: 90 / 2**zoom, exact."""
    check_zoom(zoom)
    return SEPARATIONS[zoom]


def snap_index(value: float, sep: float) -> int:
    """Index of the multiple of `sep` nearest to `value`; ties round toward +inf.

    The float quotient can land on the wrong side of a cell boundary, so the
    candidate from round-half-up is corrected against the exact boundaries
    (2k +/- 1) * sep/2. Those products are exact binary floats for every
    zoom separation and |k| <= 2**18, making the comparisons exact.
    """
    half = sep * 0.5
    k = math.floor(value / sep + 0.5)
    while value < (2 * k - 1) * half:
        k -= 1
    while value >= (2 * k + 1) * half:
        k += 1
    return k


def snap(p: GeoPoint, zoom: int) -> GridCell:
    """Snap a point to its grid cell at a zoom level."""
    sep = separation(zoom)
    return GridCell(zoom=zoom, i=snap_index(p.lat, sep), j=snap_index(p.lon, sep))


def snap_indices(values: np.ndarray, zoom: int) -> np.ndarray:
    """Vectorized snap_index over an array of coordinates.

    Same boundary-exact correction as the scalar version; one step in each
    direction suffices because the rounded quotient is off by at most one.
    """
    sep = SEPARATIONS[check_zoom(zoom)]
    half = sep * 0.5
    k = np.floor(values / sep + 0.5)
    k = np.where(values < (2.0 * k - 1.0) * half, k - 1.0, k)
    k = np.where(values >= (2.0 * k + 1.0) * half, k + 1.0, k)
    return k.astype(np.int32)


def cell_center(c: GridCell) -> GeoPoint:
    """Reconstruct the cell's coordinate: (i * separation, j * separation).

    Exact: the products have at most 25 significant bits. Snapping the
    center returns the same cell.
    """
    sep = SEPARATIONS[c.zoom]
    return GeoPoint(lat=c.i * sep, lon=c.j * sep)


@dataclass(frozen=True, slots=True)
class MultiResPoint:
    """A point's 18 precomputed grid cells, one per zoom level 0..17."""

    cells: tuple[GridCell, ...]

    def __post_init__(self) -> None:
        if len(self.cells) != ZOOM_LEVELS:
            raise ValidationError(f"expected {ZOOM_LEVELS} cells, got {len(self.cells)}")
        for z, cell in enumerate(self.cells):
            if cell.zoom != z:
                raise ValidationError(f"cell at position {z} has zoom {cell.zoom}")


def precompute(p: GeoPoint) -> MultiResPoint:
    """Compute the point's snapped cell at every zoom level."""
    return MultiResPoint(cells=tuple(snap(p, z) for z in range(ZOOM_LEVELS)))


def check_decimals(decimals: int) -> int:
    if not MIN_DECIMALS <= decimals <= MAX_DECIMALS:
        raise ValidationError(
            f"decimal precision out of range [{MIN_DECIMALS}, {MAX_DECIMALS}]: {decimals}"
        )
    return decimals


def truncate_decimal(value: float, decimals: int) -> float:
    """Truncate toward zero to `decimals` decimal digits.

    Operates on the shortest round-trip decimal representation of the float
    so values already within precision (e.g. 43.37 at 8 decimals) are
    unchanged, matching how a decimal-string pipeline would behave.
    """
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_DOWN))


def decimal_snap(p: GeoPoint, decimals: int) -> GeoPoint:
    """The prior-work discretizer: truncate both coordinates to d decimals.

    Kept only for the comparison experiment showing the 100x jump between
    adjacent precision levels; the zoom grid above supersedes it.
    """
    check_decimals(decimals)
    return GeoPoint(
        lat=truncate_decimal(p.lat, decimals),
        lon=truncate_decimal(p.lon, decimals),
    )
