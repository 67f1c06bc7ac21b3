"""zoomgrid: spatial event aggregation on a zoom-discretized grid.

Ingests GPS event streams, precomputes every point's grid cell at all 18
web-map zoom levels and answers viewport aggregation queries by grouped
counting, plus the road-network route simulator and the latency benchmark
harness that exercise it.
"""

from .geomodel import (
    MAX_ZOOM,
    MIN_ZOOM,
    ZOOM_LEVELS,
    BoundingBox,
    ClusterResult,
    Event,
    GeoPoint,
    GridCell,
    TimeRange,
    ValidationError,
    validate_event,
)
from .grid import (
    MultiResPoint,
    cell_center,
    decimal_snap,
    precompute,
    separation,
    snap,
)
from .store import (
    AggregateQuery,
    IngestReport,
    InMemoryColumnStore,
    Retriever,
    StoreStats,
    result_size_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateQuery",
    "BoundingBox",
    "ClusterResult",
    "Event",
    "GeoPoint",
    "GridCell",
    "IngestReport",
    "InMemoryColumnStore",
    "MAX_ZOOM",
    "MIN_ZOOM",
    "MultiResPoint",
    "Retriever",
    "StoreStats",
    "TimeRange",
    "ValidationError",
    "ZOOM_LEVELS",
    "cell_center",
    "decimal_snap",
    "precompute",
    "result_size_bound",
    "separation",
    "snap",
    "validate_event",
    "__version__",
]
