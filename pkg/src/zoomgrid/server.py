"""HTTP query service: /aggregate, /events and /stats over a Retriever.

Query parameters are plain lat/lon degrees, keeping the service
projection-agnostic; responses are JSON. Aggregate handlers take shared
store access and stay responsive between ingest batches. Configuration
comes from explicit arguments, overridable through ZOOMGRID_* environment
variables.
"""

from __future__ import annotations

import asyncio
import os
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .geomodel import BoundingBox, GeoPoint, TimeRange, ValidationError
from .ingest import load_lines
from .store import AggregateQuery, Retriever
from .grid import separation

ENV_PREFIX = "ZOOMGRID_"

DEFAULT_BIND = "127.0.0.1:8000"
DEFAULT_TIMEOUT_S = 10.0
DEFAULT_MAX_CELLS = 50_000


@dataclass(frozen=True)
class ServerConfig:
    bind: str = DEFAULT_BIND
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_cells: int = DEFAULT_MAX_CELLS
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError(f"timeout must be > 0: {self.timeout_s}")
        if self.max_cells <= 0:
            raise ValueError(f"max result cells must be > 0: {self.max_cells}")

    @classmethod
    def from_env(cls, **overrides) -> "ServerConfig":
        """Environment first, explicit keyword overrides second."""
        values: dict = {}
        if bind := os.environ.get(ENV_PREFIX + "BIND"):
            values["bind"] = bind
        if timeout := os.environ.get(ENV_PREFIX + "TIMEOUT"):
            values["timeout_s"] = float(timeout)
        if max_cells := os.environ.get(ENV_PREFIX + "MAX_CELLS"):
            values["max_cells"] = int(max_cells)
        if origins := os.environ.get(ENV_PREFIX + "CORS_ORIGIN"):
            values["cors_origins"] = tuple(o.strip() for o in origins.split(","))
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class _BadRequest(ValueError):
    pass


def _require_float(params, key: str) -> float:
    raw = params.get(key)
    if raw is None:
        raise _BadRequest(f"missing required parameter: {key}")
    try:
        return float(raw)
    except ValueError:
        raise _BadRequest(f"parameter {key} is not a number: {raw!r}") from None


def _require_int(params, key: str) -> int:
    raw = params.get(key)
    if raw is None:
        raise _BadRequest(f"missing required parameter: {key}")
    try:
        return int(raw)
    except ValueError:
        raise _BadRequest(f"parameter {key} is not an integer: {raw!r}") from None


def _optional_int(params, key: str) -> int | None:
    raw = params.get(key)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise _BadRequest(f"parameter {key} is not an integer: {raw!r}") from None


def _parse_aggregate_query(params) -> AggregateQuery:
    bbox = BoundingBox(
        min=GeoPoint(lat=_require_float(params, "minLat"), lon=_require_float(params, "minLon")),
        max=GeoPoint(lat=_require_float(params, "maxLat"), lon=_require_float(params, "maxLon")),
    )
    zoom = _require_int(params, "zoom")
    tmin = _optional_int(params, "tmin")
    tmax = _optional_int(params, "tmax")
    if (tmin is None) != (tmax is None):
        raise _BadRequest("tmin and tmax must be given together")
    time = TimeRange(tmin=tmin, tmax=tmax) if tmin is not None else None
    return AggregateQuery(bbox=bbox, zoom=zoom, time=time)


def create_app(retriever: Retriever, config: ServerConfig | None = None) -> FastAPI:
    """Build the service around a retriever; one worker runs each query so
    requests exceeding the configured timeout answer 504."""
    cfg = config or ServerConfig()
    app = FastAPI(title="zoomgrid", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cfg.cors_origins),
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    executor = ThreadPoolExecutor(max_workers=4, thread_name_prefix="aggregate")

    @app.get("/aggregate")
    def handle_aggregate(request: Request) -> Response:
        try:
            query = _parse_aggregate_query(request.query_params)
        except (_BadRequest, ValidationError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        future = executor.submit(retriever.aggregate, query)
        try:
            clusters = future.result(timeout=cfg.timeout_s)
        except FutureTimeoutError:
            future.cancel()
            return JSONResponse(
                {"error": f"query exceeded {cfg.timeout_s}s timeout"}, status_code=504
            )
        if len(clusters) > cfg.max_cells:
            return JSONResponse(
                {"error": f"result of {len(clusters)} cells exceeds limit {cfg.max_cells}"},
                status_code=413,
            )
        return JSONResponse({
            "zoom": query.zoom,
            "separation": separation(query.zoom),
            "clusters": [
                {"lat": c.pos.lat, "lon": c.pos.lon, "count": c.count} for c in clusters
            ],
            "total": sum(c.count for c in clusters),
        })

    @app.post("/events")
    async def handle_ingest(request: Request) -> Response:
        body = await request.body()
        text = body.decode("utf-8", errors="replace")
        if not text.strip():
            return JSONResponse({"error": "empty body"}, status_code=400)
        # off the event loop so aggregate requests stay responsive between
        # the loader's batches
        report = await asyncio.to_thread(load_lines, text.splitlines(), retriever)
        if report.accepted == 0 and report.rejected == 0 and report.parse_errors > 0:
            return JSONResponse({"error": "body is not NDJSON"}, status_code=400)
        return JSONResponse({
            "accepted": report.accepted,
            "rejected": report.rejected,
            "parse_errors": report.parse_errors,
        })

    @app.get("/stats")
    def handle_stats() -> Response:
        stats = retriever.stats()
        extent = None
        if stats.extent is not None:
            extent = {
                "minLat": stats.extent.min.lat,
                "minLon": stats.extent.min.lon,
                "maxLat": stats.extent.max.lat,
                "maxLon": stats.extent.max.lon,
            }
        time = None
        if stats.time is not None:
            time = {"tmin": stats.time.tmin, "tmax": stats.time.tmax}
        return JSONResponse({"events": stats.events, "extent": extent, "time": time})

    return app


def serve(retriever: Retriever, config: ServerConfig) -> None:
    """Run the service with uvicorn; blocks until interrupted."""
    import uvicorn

    host, _, port = config.bind.rpartition(":")
    app = create_app(retriever, config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
