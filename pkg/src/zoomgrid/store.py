"""Storage system: the retriever interface and an in-memory columnar store.

Each event is stored once together with its 18 precomputed cell indices,
so an aggregation query is a scan over the query zoom's cell columns plus
a group-by-count on (i, j). Spatial filtering is on the snapped cell
center (closed bounds), which makes every returned cluster render inside
the requested viewport; raw-coordinate filtering is exposed separately via
scan_count for cross-checks.

Concurrency: many concurrent readers or one writer. Chunks are immutable
once appended; readers snapshot the chunk list under a short lock and then
work lock-free, so they observe only fully ingested batches.
"""

from __future__ import annotations

import json
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geomodel import (
    ZOOM_LEVELS,
    BoundingBox,
    ClusterResult,
    Event,
    GeoPoint,
    TimeRange,
    ValidationError,
    check_zoom,
    validate_event,
)
from .grid import SEPARATIONS, snap_indices

SNAPSHOT_MAGIC = "zoomgrid-columns"
SNAPSHOT_VERSION = 1


class StoreCapacityError(RuntimeError):
    """Raised when the store cannot allocate room for a batch.

    Batches already ingested remain; the failing batch is dropped whole.
    """


@dataclass(frozen=True, slots=True)
class AggregateQuery:
    """A viewport aggregation request: bounding box, zoom, optional time."""

    bbox: BoundingBox
    zoom: int
    time: TimeRange | None = None

    def __post_init__(self) -> None:
        check_zoom(self.zoom)


@dataclass(frozen=True, slots=True)
class IngestReport:
    accepted: int
    rejected: int


@dataclass(frozen=True, slots=True)
class StoreStats:
    """Store totals for viewer initialization: row count, raw-coordinate
    extent and timestamp range (None on an empty store)."""

    events: int
    extent: BoundingBox | None
    time: TimeRange | None


class Retriever(ABC):
    """The pluggable storage-access contract behind which engines sit.

    Implementations must satisfy the ingest_batch/aggregate post-conditions
    identically; scan_count and stats exist for oracles and for viewer
    initialization.
    """

    @abstractmethod
    def ingest_batch(self, events: Iterable[Event]) -> IngestReport:
        """Append valid events (with all 18 precomputed cells), count rejects."""

    @abstractmethod
    def aggregate(self, query: AggregateQuery) -> list[ClusterResult]:
        """Per-cell counts of events whose cell center lies in the query bbox
        (closed bounds) and whose timestamp lies in the optional time range."""

    @abstractmethod
    def scan_count(self, bbox: BoundingBox, time: TimeRange | None = None) -> int:
        """Count events by RAW position inside bbox (closed bounds)."""

    @abstractmethod
    def stats(self) -> StoreStats:
        """Current totals and data extent."""


def result_size_bound(bbox: BoundingBox, zoom: int) -> int:
    """Upper bound on the number of clusters a query can return."""
    sep = SEPARATIONS[check_zoom(zoom)]
    return (math.floor(bbox.lat_extent / sep) + 2) * (math.floor(bbox.lon_extent / sep) + 2)


def _min_center_index(bound: float, sep: float) -> int:
    """Smallest k with k*sep >= bound; exact because k*sep is exact."""
    k = math.ceil(bound / sep)
    while (k - 1) * sep >= bound:
        k -= 1
    while k * sep < bound:
        k += 1
    return k


def _max_center_index(bound: float, sep: float) -> int:
    """Largest k with k*sep <= bound."""
    k = math.floor(bound / sep)
    while (k + 1) * sep <= bound:
        k += 1
    while k * sep > bound:
        k -= 1
    return k


class _Chunk:
    """One immutable batch of columns. cell_i/cell_j are (18, n) arrays,
    row z holding the zoom-z indices. zoom_index caches, per zoom, the row
    order sorted by cell_i so queries can slice the latitude band instead
    of scanning every row."""

    __slots__ = (
        "n", "ts", "lat", "lon", "speed", "bearing", "accuracy", "alt",
        "driver_code", "payloads", "cell_i", "cell_j", "zoom_index",
        "lat_bounds", "lon_bounds", "ts_bounds",
    )

    def __init__(
        self,
        ts: np.ndarray,
        lat: np.ndarray,
        lon: np.ndarray,
        speed: np.ndarray,
        bearing: np.ndarray,
        accuracy: np.ndarray,
        alt: np.ndarray,
        driver_code: np.ndarray,
        payloads: list | None,
        cell_i: np.ndarray,
        cell_j: np.ndarray,
    ):
        self.n = len(ts)
        self.ts = ts
        self.lat = lat
        self.lon = lon
        self.speed = speed
        self.bearing = bearing
        self.accuracy = accuracy
        self.alt = alt
        self.driver_code = driver_code
        self.payloads = payloads
        self.cell_i = cell_i
        self.cell_j = cell_j
        self.zoom_index: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.lat_bounds = (float(lat.min()), float(lat.max())) if self.n else None
        self.lon_bounds = (float(lon.min()), float(lon.max())) if self.n else None
        self.ts_bounds = (int(ts.min()), int(ts.max())) if self.n else None

    def build_zoom_index(self, zoom: int) -> None:
        if zoom in self.zoom_index:
            return
        order = np.argsort(self.cell_i[zoom], kind="stable")
        self.zoom_index[zoom] = (order, self.cell_i[zoom][order])

    def select_keys(
        self,
        zoom: int,
        i_lo: int,
        i_hi: int,
        j_lo: int,
        j_hi: int,
        time: TimeRange | None,
    ) -> np.ndarray:
        """Packed (i << 32 | j) keys of rows matching the cell-index ranges."""
        ci = self.cell_i[zoom]
        cj = self.cell_j[zoom]
        index = self.zoom_index.get(zoom)
        if index is not None:
            order, sorted_i = index
            # dtype-matched needles; a plain int would promote (and copy)
            # the whole sorted column on every call
            lo = int(np.searchsorted(sorted_i, np.int32(i_lo), side="left"))
            hi = int(np.searchsorted(sorted_i, np.int32(i_hi), side="right"))
            rows = order[lo:hi]
            jj = cj[rows]
            mask = (jj >= j_lo) & (jj <= j_hi)
            if time is not None:
                tt = self.ts[rows]
                mask &= (tt >= time.tmin) & (tt <= time.tmax)
            ii = sorted_i[lo:hi][mask]
            jj = jj[mask]
        else:
            mask = (ci >= i_lo) & (ci <= i_hi) & (cj >= j_lo) & (cj <= j_hi)
            if time is not None:
                mask &= (self.ts >= time.tmin) & (self.ts <= time.tmax)
            ii = ci[mask]
            jj = cj[mask]
        return (ii.astype(np.int64) << 32) | (jj.astype(np.int64) & 0xFFFFFFFF)


def _columns_from_events(events: Iterable[Event]) -> tuple[dict, list[str], int]:
    """Validate events and gather plain-Python columns; returns
    (columns, driver ids in row order, rejected count)."""
    ids: list[str] = []
    ts: list[int] = []
    lat: list[float] = []
    lon: list[float] = []
    speed: list[float] = []
    bearing: list[float] = []
    accuracy: list[float] = []
    alt: list[float] = []
    payloads: list = []
    rejected = 0
    for ev in events:
        try:
            validate_event(ev)
        except ValidationError:
            rejected += 1
            continue
        ids.append(ev.driver_id)
        ts.append(ev.ts)
        lat.append(ev.pos.lat)
        lon.append(ev.pos.lon)
        speed.append(ev.speed)
        bearing.append(ev.bearing)
        accuracy.append(ev.accuracy)
        alt.append(math.nan if ev.alt is None else ev.alt)
        payloads.append(dict(ev.payload) if ev.payload else None)
    cols = {
        "ts": ts, "lat": lat, "lon": lon, "speed": speed,
        "bearing": bearing, "accuracy": accuracy, "alt": alt,
        "payloads": payloads,
    }
    return cols, ids, rejected


class InMemoryColumnStore(Retriever):
    """Append-only in-memory columnar reference implementation.

    No deletes or updates: the workload is insert + read. consolidate()
    merges chunks into one, after which per-zoom sorted indexes are built
    lazily (or via build_zoom_index) to keep query work proportional to the
    latitude band actually requested.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._chunks: list[_Chunk] = []
        self._driver_index: dict[str, int] = {}
        self._driver_ids: list[str] = []

    def __len__(self) -> int:
        return sum(c.n for c in self._snapshot())

    def _snapshot(self) -> tuple[_Chunk, ...]:
        with self._lock:
            return tuple(self._chunks)

    def _codes_for(self, ids: Sequence[str]) -> np.ndarray:
        codes = np.empty(len(ids), dtype=np.int32)
        index = self._driver_index
        for row, driver_id in enumerate(ids):
            code = index.get(driver_id)
            if code is None:
                code = len(self._driver_ids)
                index[driver_id] = code
                self._driver_ids.append(driver_id)
            codes[row] = code
        return codes

    def ingest_batch(self, events: Iterable[Event]) -> IngestReport:
        cols, ids, rejected = _columns_from_events(events)
        n = len(ids)
        if n == 0:
            return IngestReport(accepted=0, rejected=rejected)
        try:
            lat = np.asarray(cols["lat"], dtype=np.float64)
            lon = np.asarray(cols["lon"], dtype=np.float64)
            cell_i = np.empty((ZOOM_LEVELS, n), dtype=np.int32)
            cell_j = np.empty((ZOOM_LEVELS, n), dtype=np.int32)
            for z in range(ZOOM_LEVELS):
                cell_i[z] = snap_indices(lat, z)
                cell_j[z] = snap_indices(lon, z)
            payloads = cols["payloads"]
            chunk = _Chunk(
                ts=np.asarray(cols["ts"], dtype=np.int64),
                lat=lat,
                lon=lon,
                speed=np.asarray(cols["speed"], dtype=np.float32),
                bearing=np.asarray(cols["bearing"], dtype=np.float32),
                accuracy=np.asarray(cols["accuracy"], dtype=np.float32),
                alt=np.asarray(cols["alt"], dtype=np.float32),
                driver_code=np.empty(0, dtype=np.int32),  # filled under lock
                payloads=payloads if any(p is not None for p in payloads) else None,
                cell_i=cell_i,
                cell_j=cell_j,
            )
        except MemoryError as exc:
            raise StoreCapacityError(
                f"storage capacity exhausted; batch of {n} events dropped"
            ) from exc
        with self._lock:
            chunk.driver_code = self._codes_for(ids)
            self._chunks.append(chunk)
        return IngestReport(accepted=n, rejected=rejected)

    def aggregate(self, query: AggregateQuery) -> list[ClusterResult]:
        sep = SEPARATIONS[query.zoom]
        i_lo = _min_center_index(query.bbox.min.lat, sep)
        i_hi = _max_center_index(query.bbox.max.lat, sep)
        j_lo = _min_center_index(query.bbox.min.lon, sep)
        j_hi = _max_center_index(query.bbox.max.lon, sep)
        if i_lo > i_hi or j_lo > j_hi:
            return []
        parts = []
        for chunk in self._snapshot():
            keys = chunk.select_keys(query.zoom, i_lo, i_hi, j_lo, j_hi, query.time)
            if keys.size:
                parts.append(keys)
        if not parts:
            return []
        keys = parts[0] if len(parts) == 1 else np.concatenate(parts)
        uniq, counts = np.unique(keys, return_counts=True)
        cell_i = uniq >> 32
        cell_j = (uniq << 32) >> 32  # sign-extend the low 32 bits
        lat = cell_i.astype(np.float64) * sep
        lon = cell_j.astype(np.float64) * sep
        return [
            ClusterResult(pos=GeoPoint(lat=la, lon=lo), count=int(c))
            for la, lo, c in zip(lat.tolist(), lon.tolist(), counts.tolist())
        ]

    def scan_count(self, bbox: BoundingBox, time: TimeRange | None = None) -> int:
        total = 0
        for chunk in self._snapshot():
            mask = (
                (chunk.lat >= bbox.min.lat) & (chunk.lat <= bbox.max.lat)
                & (chunk.lon >= bbox.min.lon) & (chunk.lon <= bbox.max.lon)
            )
            if time is not None:
                mask &= (chunk.ts >= time.tmin) & (chunk.ts <= time.tmax)
            total += int(np.count_nonzero(mask))
        return total

    def stats(self) -> StoreStats:
        chunks = [c for c in self._snapshot() if c.n]
        if not chunks:
            return StoreStats(events=0, extent=None, time=None)
        events = sum(c.n for c in chunks)
        lat_lo = min(c.lat_bounds[0] for c in chunks)
        lat_hi = max(c.lat_bounds[1] for c in chunks)
        lon_lo = min(c.lon_bounds[0] for c in chunks)
        lon_hi = max(c.lon_bounds[1] for c in chunks)
        t_lo = min(c.ts_bounds[0] for c in chunks)
        t_hi = max(c.ts_bounds[1] for c in chunks)
        return StoreStats(
            events=events,
            extent=BoundingBox(min=GeoPoint(lat_lo, lon_lo), max=GeoPoint(lat_hi, lon_hi)),
            time=TimeRange(tmin=t_lo, tmax=t_hi),
        )

    def consolidate(self) -> None:
        """Merge all chunks into one. Existing zoom indexes are dropped."""
        with self._lock:
            if len(self._chunks) <= 1:
                return
            chunks = self._chunks
            payloads: list | None
            if any(c.payloads is not None for c in chunks):
                payloads = []
                for c in chunks:
                    payloads.extend(c.payloads if c.payloads is not None else [None] * c.n)
            else:
                payloads = None
            merged = _Chunk(
                ts=np.concatenate([c.ts for c in chunks]),
                lat=np.concatenate([c.lat for c in chunks]),
                lon=np.concatenate([c.lon for c in chunks]),
                speed=np.concatenate([c.speed for c in chunks]),
                bearing=np.concatenate([c.bearing for c in chunks]),
                accuracy=np.concatenate([c.accuracy for c in chunks]),
                alt=np.concatenate([c.alt for c in chunks]),
                driver_code=np.concatenate([c.driver_code for c in chunks]),
                payloads=payloads,
                cell_i=np.concatenate([c.cell_i for c in chunks], axis=1),
                cell_j=np.concatenate([c.cell_j for c in chunks], axis=1),
            )
            self._chunks = [merged]

    def build_zoom_index(self, zooms: Iterable[int]) -> None:
        """Consolidate and pre-sort the given zooms' cell columns so query
        cost tracks the requested latitude band. Index build happens here,
        not inside queries."""
        self.consolidate()
        with self._lock:
            if not self._chunks:
                return
            chunk = self._chunks[0]
            for z in zooms:
                chunk.build_zoom_index(check_zoom(z))

    # -- snapshot persistence -------------------------------------------

    def save_snapshot(self, path: str | Path) -> None:
        """Binary dump of the columns so benches can skip re-simulation."""
        self.consolidate()
        chunks = self._snapshot()
        if chunks:
            c = chunks[0]
            arrays = dict(
                ts=c.ts, lat=c.lat, lon=c.lon, speed=c.speed, bearing=c.bearing,
                accuracy=c.accuracy, alt=c.alt, driver_code=c.driver_code,
                cell_i=c.cell_i, cell_j=c.cell_j,
            )
            if c.payloads is not None:
                arrays["payloads"] = np.asarray(
                    [json.dumps(p) if p is not None else "null" for p in c.payloads]
                )
        else:
            arrays = {}
        with self._lock:
            driver_ids = np.asarray(self._driver_ids, dtype=str)
        np.savez(
            path,
            magic=np.asarray(SNAPSHOT_MAGIC),
            version=np.asarray(SNAPSHOT_VERSION),
            driver_ids=driver_ids,
            **arrays,
        )

    @classmethod
    def load_snapshot(cls, path: str | Path) -> "InMemoryColumnStore":
        with np.load(path, allow_pickle=False) as data:
            if "magic" not in data or str(data["magic"]) != SNAPSHOT_MAGIC:
                raise ValueError(f"not a {SNAPSHOT_MAGIC} snapshot: {path}")
            if int(data["version"]) != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported snapshot version: {int(data['version'])}")
            store = cls()
            store._driver_ids = [str(d) for d in data["driver_ids"]]
            store._driver_index = {d: i for i, d in enumerate(store._driver_ids)}
            if "ts" in data:
                payloads = None
                if "payloads" in data:
                    decoded = [json.loads(s) for s in data["payloads"]]
                    payloads = [p if p is not None else None for p in decoded]
                chunk = _Chunk(
                    ts=data["ts"], lat=data["lat"], lon=data["lon"],
                    speed=data["speed"], bearing=data["bearing"],
                    accuracy=data["accuracy"], alt=data["alt"],
                    driver_code=data["driver_code"], payloads=payloads,
                    cell_i=data["cell_i"], cell_j=data["cell_j"],
                )
                store._chunks = [chunk]
            return store
