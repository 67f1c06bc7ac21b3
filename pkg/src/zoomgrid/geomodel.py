"""Core domain types shared by every other module.

All types are immutable values validated at construction time, so they can
be shared and sent between threads freely. Coordinates are plain WGS84
degrees; timestamps are epoch milliseconds UTC.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

MIN_LAT = -90.0
MAX_LAT = 90.0
MIN_LON = -180.0
MAX_LON = 180.0

MIN_ZOOM = 0
MAX_ZOOM = 17
ZOOM_LEVELS = MAX_ZOOM - MIN_ZOOM + 1


class ValidationError(ValueError):
    """A domain value violates one of its invariants."""


def check_zoom(zoom: int) -> int:
    """Validate a zoom level (18 discrete levels, 0 coarsest .. 17 finest)."""
    if not isinstance(zoom, int) or isinstance(zoom, bool):
        raise ValidationError(f"zoom must be an integer, got {zoom!r}")
    if not MIN_ZOOM <= zoom <= MAX_ZOOM:
        raise ValidationError(f"zoom out of range [{MIN_ZOOM}, {MAX_ZOOM}]: {zoom}")
    return zoom


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A position in degrees latitude/longitude.

    Raises ValidationError on out-of-range coordinates (NaN included).
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not MIN_LAT <= self.lat <= MAX_LAT:
            raise ValidationError(f"latitude out of range: {self.lat!r}")
        if not MIN_LON <= self.lon <= MAX_LON:
            raise ValidationError(f"longitude out of range: {self.lon!r}")


@dataclass(frozen=True, slots=True)
class Event:
    """One driver observation.

    Attributes:
        driver_id: opaque identifier of the reporting device/driver.
        pos: GPS position.
        ts: epoch milliseconds UTC, must be positive.
        speed: meters/second, non-negative.
        bearing: degrees, conventionally in [0, 360); carried, not validated.
        accuracy: horizontal accuracy in meters, non-negative.
        alt: meters above sea level; carried but ignored by all grid and
            aggregation logic.
        payload: free-form key-value document specific to the domain.
    """

    driver_id: str
    pos: GeoPoint
    ts: int
    speed: float
    bearing: float
    accuracy: float
    alt: float | None = None
    payload: Mapping[str, Any] | None = None


def validate_event(raw: Event) -> Event:
    """Return the event unchanged if all field invariants hold.

    Raises ValidationError with a distinct message per violation:
    out-of-range coordinates are rejected by GeoPoint itself; this checks
    the remaining invariants (positive timestamp, non-negative speed and
    accuracy). NaN fails the non-negative checks.
    """
    if not isinstance(raw.pos, GeoPoint):
        raise ValidationError(f"position is not a GeoPoint: {raw.pos!r}")
    if raw.ts <= 0:
        raise ValidationError(f"non-positive timestamp: {raw.ts!r}")
    if not raw.speed >= 0:
        raise ValidationError(f"negative speed: {raw.speed!r}")
    if not raw.accuracy >= 0:
        raise ValidationError(f"negative accuracy: {raw.accuracy!r}")
    return raw


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """A closed lat/lon rectangle (the map viewport).

    Antimeridian-crossing boxes (min.lon > max.lon) are rejected; callers
    wanting one must issue two queries.
    """

    min: GeoPoint
    max: GeoPoint

    def __post_init__(self) -> None:
        if self.min.lat > self.max.lat:
            raise ValidationError(
                f"bounding box min.lat > max.lat: {self.min.lat} > {self.max.lat}"
            )
        if self.min.lon > self.max.lon:
            raise ValidationError(
                f"bounding box min.lon > max.lon: {self.min.lon} > {self.max.lon}"
            )

    @property
    def lat_extent(self) -> float:
        return self.max.lat - self.min.lat

    @property
    def lon_extent(self) -> float:
        return self.max.lon - self.min.lon

    def contains(self, lat: float, lon: float) -> bool:
        """Closed-bounds membership test."""
        return (
            self.min.lat <= lat <= self.max.lat
            and self.min.lon <= lon <= self.max.lon
        )


@dataclass(frozen=True, slots=True)
class TimeRange:
    """A closed interval of epoch milliseconds."""

    tmin: int
    tmax: int

    def __post_init__(self) -> None:
        if self.tmin > self.tmax:
            raise ValidationError(f"time range tmin > tmax: {self.tmin} > {self.tmax}")

    def contains(self, ts: int) -> bool:
        return self.tmin <= ts <= self.tmax


@dataclass(frozen=True, slots=True)
class GridCell:
    """The snapped identity of a point: integer cell indices at one zoom.

    Index i counts multiples of the zoom's separation along latitude,
    j along longitude. At zoom z the extreme indices are |i| <= 2**z and
    |j| <= 2**(z+1) (latitudes span half the longitude range).
    """

    zoom: int
    i: int
    j: int

    def __post_init__(self) -> None:
        check_zoom(self.zoom)
        if abs(self.i) > (1 << self.zoom):
            raise ValidationError(f"cell index i out of range at zoom {self.zoom}: {self.i}")
        if abs(self.j) > (2 << self.zoom):
            raise ValidationError(f"cell index j out of range at zoom {self.zoom}: {self.j}")


@dataclass(frozen=True, slots=True)
class ClusterResult:
    """A snapped coordinate plus the count of events aggregated into it."""

    pos: GeoPoint
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValidationError(f"cluster count must be >= 1: {self.count}")
