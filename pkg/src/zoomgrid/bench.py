"""Latency benchmark: random viewport queries per zoom, executed once each.

Query generation mirrors a slippy-map viewer: the viewport's pixel size is
converted to degrees with the 256-pixel world-tile convention and centered
on points drawn uniformly from the data extent. Every query runs exactly
once, cold, and per-zoom statistics plus the raw per-query CSV come out.
Timing is at the retriever boundary by default, with an optional
end-to-end HTTP mode.
"""

from __future__ import annotations

import csv
import random
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .geomodel import (
    MAX_LAT,
    MAX_LON,
    MIN_LAT,
    MIN_LON,
    BoundingBox,
    GeoPoint,
    check_zoom,
)
from .store import AggregateQuery, Retriever, result_size_bound

WORLD_TILE_PX = 256

DEFAULT_ZOOMS = (10, 11, 12, 13, 14, 15)
DEFAULT_QUERIES_PER_ZOOM = 100
DEFAULT_VIEWPORT = (600, 400)

CSV_COLUMNS = ("zoom", "query_index", "seconds", "clusters", "total_count")


class BenchError(RuntimeError):
    """A benchmark query failed or violated a store invariant."""


@dataclass(frozen=True)
class BenchPlan:
    """What to run: zoom levels, queries per level, viewer pixels, extent."""

    extent: BoundingBox
    zooms: tuple[int, ...] = DEFAULT_ZOOMS
    queries_per_zoom: int = DEFAULT_QUERIES_PER_ZOOM
    viewport_px: tuple[int, int] = DEFAULT_VIEWPORT
    seed: int = 0

    def __post_init__(self) -> None:
        for z in self.zooms:
            check_zoom(z)
        if self.queries_per_zoom < 1:
            raise ValueError(f"queries per zoom must be >= 1: {self.queries_per_zoom}")
        if self.viewport_px[0] < 1 or self.viewport_px[1] < 1:
            raise ValueError(f"viewport must be positive: {self.viewport_px}")


@dataclass(frozen=True, slots=True)
class QueryTiming:
    zoom: int
    query_index: int
    seconds: float
    clusters: int
    total_count: int


@dataclass(frozen=True, slots=True)
class ZoomStats:
    zoom: int
    mean_s: float
    median_s: float
    p95_s: float
    min_s: float
    max_s: float
    mean_clusters: float
    mean_total: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[QueryTiming, ...]
    per_zoom: tuple[ZoomStats, ...] = field(default=())

    def zoom_means(self) -> dict[int, float]:
        return {s.zoom: s.mean_s for s in self.per_zoom}


def degrees_per_pixel(zoom: int) -> float:
    """World-tile convention: 360 degrees across 256 * 2**zoom pixels."""
    return 360.0 / (WORLD_TILE_PX * (1 << check_zoom(zoom)))


def viewport_bbox(center: GeoPoint, zoom: int, viewport_px: tuple[int, int]) -> BoundingBox:
    """Bounding box a viewer of the given pixel size shows at this zoom,
    centered on `center`, clamped to valid coordinates."""
    dpp = degrees_per_pixel(zoom)
    half_lon = viewport_px[0] * dpp / 2.0
    half_lat = viewport_px[1] * dpp / 2.0
    return BoundingBox(
        min=GeoPoint(
            lat=max(MIN_LAT, center.lat - half_lat),
            lon=max(MIN_LON, center.lon - half_lon),
        ),
        max=GeoPoint(
            lat=min(MAX_LAT, center.lat + half_lat),
            lon=min(MAX_LON, center.lon + half_lon),
        ),
    )


def generate_queries(plan: BenchPlan) -> list[AggregateQuery]:
    """Seeded query workload: per zoom, centers drawn uniformly from the
    data extent; no time filter."""
    if plan.extent.lat_extent == 0 and plan.extent.lon_extent == 0:
        raise BenchError("data extent is a single point; nothing to sample")
    rng = random.Random(plan.seed)
    queries = []
    for zoom in plan.zooms:
        for _ in range(plan.queries_per_zoom):
            center = GeoPoint(
                lat=rng.uniform(plan.extent.min.lat, plan.extent.max.lat),
                lon=rng.uniform(plan.extent.min.lon, plan.extent.max.lon),
            )
            queries.append(AggregateQuery(bbox=viewport_bbox(center, zoom, plan.viewport_px), zoom=zoom))
    return queries


def _percentile_95(values: Sequence[float]) -> float:
    """Linear-interpolated 95th percentile (numpy's default definition)."""
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    rank = 0.95 * (len(ordered) - 1)
    lo = int(rank)
    frac = rank - lo
    if lo + 1 == len(ordered):
        return ordered[lo]
    return ordered[lo] * (1.0 - frac) + ordered[lo + 1] * frac


def summarize(rows: Sequence[QueryTiming], zooms: Sequence[int]) -> tuple[ZoomStats, ...]:
    stats = []
    for zoom in zooms:
        zoom_rows = [r for r in rows if r.zoom == zoom]
        seconds = [r.seconds for r in zoom_rows]
        stats.append(ZoomStats(
            zoom=zoom,
            mean_s=statistics.fmean(seconds),
            median_s=statistics.median(seconds),
            p95_s=_percentile_95(seconds),
            min_s=min(seconds),
            max_s=max(seconds),
            mean_clusters=statistics.fmean(r.clusters for r in zoom_rows),
            mean_total=statistics.fmean(r.total_count for r in zoom_rows),
        ))
    return tuple(stats)


def run(
    plan: BenchPlan,
    retriever: Retriever,
    csv_path: str | Path | None = None,
    concurrency: int = 1,
) -> BenchReport:
    """Execute the plan against the retriever boundary.

    Planned zooms get their store indexes built before timing starts (index
    build is storage preparation, not query work). Each query runs exactly
    once; the result-size bound is checked on every response. Latency is
    the metric, so queries run sequentially by default; concurrency > 1
    measures latency under load instead and stays out of acceptance runs.
    """
    prepare = getattr(retriever, "build_zoom_index", None)
    if prepare is not None:
        prepare(sorted(set(plan.zooms)))
    queries = generate_queries(plan)

    def call(query: AggregateQuery) -> tuple[float, int, int]:
        return _timed_retriever_call(retriever, query)

    if concurrency > 1:
        from concurrent.futures import ThreadPoolExecutor

        try:
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                outcomes = list(pool.map(call, queries))
        except Exception as exc:
            raise BenchError(f"query failed under concurrency: {exc}") from exc
        executed = _collect(plan, queries, outcomes)
    else:
        executed = _execute(plan, queries, call)
    if csv_path is not None:
        write_csv(executed, csv_path)
    return BenchReport(rows=tuple(executed), per_zoom=summarize(executed, plan.zooms))


def run_http(
    plan: BenchPlan,
    base_url: str,
    csv_path: str | Path | None = None,
) -> BenchReport:
    """End-to-end variant timing GET /aggregate round trips."""
    import httpx

    with httpx.Client(base_url=base_url, timeout=60.0) as client:

        def call(query: AggregateQuery) -> tuple[float, int, int]:
            params = {
                "minLat": query.bbox.min.lat, "minLon": query.bbox.min.lon,
                "maxLat": query.bbox.max.lat, "maxLon": query.bbox.max.lon,
                "zoom": query.zoom,
            }
            start = time.perf_counter()
            response = client.get("/aggregate", params=params)
            elapsed = time.perf_counter() - start
            if response.status_code != 200:
                raise BenchError(f"HTTP {response.status_code}: {response.text[:200]}")
            body = response.json()
            return elapsed, len(body["clusters"]), body["total"]

        queries = generate_queries(plan)
        executed = _execute(plan, queries, call)
    if csv_path is not None:
        write_csv(executed, csv_path)
    return BenchReport(rows=tuple(executed), per_zoom=summarize(executed, plan.zooms))


def _timed_retriever_call(retriever: Retriever, query: AggregateQuery) -> tuple[float, int, int]:
    start = time.perf_counter()
    clusters = retriever.aggregate(query)
    elapsed = time.perf_counter() - start
    return elapsed, len(clusters), sum(c.count for c in clusters)


def _execute(
    plan: BenchPlan,
    queries: Sequence[AggregateQuery],
    call: Callable[[AggregateQuery], tuple[float, int, int]],
) -> list[QueryTiming]:
    outcomes = []
    for query in queries:
        try:
            outcomes.append(call(query))
        except BenchError:
            raise
        except Exception as exc:
            raise BenchError(f"query failed at zoom {query.zoom}: {exc}") from exc
    return _collect(plan, queries, outcomes)


def _collect(
    plan: BenchPlan,
    queries: Sequence[AggregateQuery],
    outcomes: Sequence[tuple[float, int, int]],
) -> list[QueryTiming]:
    rows: list[QueryTiming] = []
    index_within_zoom: dict[int, int] = {}
    for query, (elapsed, clusters, total) in zip(queries, outcomes):
        bound = result_size_bound(query.bbox, query.zoom)
        if clusters > bound:
            raise BenchError(
                f"result-size bound violated at zoom {query.zoom}: {clusters} > {bound}"
            )
        qi = index_within_zoom.get(query.zoom, 0)
        index_within_zoom[query.zoom] = qi + 1
        rows.append(QueryTiming(
            zoom=query.zoom, query_index=qi, seconds=elapsed,
            clusters=clusters, total_count=total,
        ))
    return rows


def write_csv(rows: Sequence[QueryTiming], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            # repr keeps full float precision so statistics recompute exactly
            writer.writerow([r.zoom, r.query_index, repr(r.seconds), r.clusters, r.total_count])


def read_csv(path: str | Path) -> list[QueryTiming]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for record in csv.DictReader(handle):
            rows.append(QueryTiming(
                zoom=int(record["zoom"]),
                query_index=int(record["query_index"]),
                seconds=float(record["seconds"]),
                clusters=int(record["clusters"]),
                total_count=int(record["total_count"]),
            ))
    return rows


def format_report(report: BenchReport) -> str:
    lines = [
        f"{'zoom':>4}  {'mean_s':>10}  {'median_s':>10}  {'p95_s':>10}  "
        f"{'min_s':>10}  {'max_s':>10}  {'clusters':>9}  {'total':>12}"
    ]
    for s in report.per_zoom:
        lines.append(
            f"{s.zoom:>4}  {s.mean_s:>10.6f}  {s.median_s:>10.6f}  {s.p95_s:>10.6f}  "
            f"{s.min_s:>10.6f}  {s.max_s:>10.6f}  {s.mean_clusters:>9.1f}  {s.mean_total:>12.1f}"
        )
    return "\n".join(lines)
