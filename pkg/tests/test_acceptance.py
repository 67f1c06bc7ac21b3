"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The latency test builds a ~5M-event dataset from scratch (simulate, write
NDJSON, load), so the module takes several minutes end to end on a desktop
core. Everything runs without any frontend built.
"""

from __future__ import annotations

import random
import time
from collections import Counter
from contextlib import contextmanager
from decimal import Decimal
from fractions import Fraction

import pytest
from fastapi.testclient import TestClient

from zoomgrid.bench import BenchPlan, format_report, generate_queries, run
from zoomgrid.geomodel import BoundingBox, Event, GeoPoint, TimeRange
from zoomgrid.grid import SEPARATIONS, separation, snap_index, truncate_decimal
from zoomgrid.ingest import load_file
from zoomgrid.server import ServerConfig, create_app
from zoomgrid.simulator import SimConfig, grid_network, simulate, simulate_events
from zoomgrid.store import AggregateQuery, InMemoryColumnStore, result_size_bound

from .conftest import ACCEPTANCE_VERDICTS, random_events
from .oracles import aggregate_oracle, clusters_to_counter, snap_index_oracle
from .test_simulator import distance_to_segment_deg


def _emit(line: str) -> None:
    ACCEPTANCE_VERDICTS.append(line)
    print(line, flush=True)  # also live under pytest -s


@contextmanager
def criterion(name: str, budget_s: float | None = None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget_s is not None:
            assert elapsed < budget_s, f"{name} exceeded its {budget_s}s budget: {elapsed:.1f}s"
    except BaseException:
        _emit(f"[ACCEPTANCE] {name}: FAIL ({time.perf_counter() - start:.1f}s)")
        raise
    _emit(f"[ACCEPTANCE] {name}: PASS ({elapsed:.1f}s)")


def test_separation_exactness():
    with criterion("separation exactness"):
        value = 90.0
        for z in range(18):
            assert separation(z) == value, f"zoom {z}"
            assert Fraction(separation(z)) == Fraction(90, 2**z), f"zoom {z} not exact"
            value /= 2.0
        assert separation(11) == 0.0439453125
        # the published figure truncates the exact value after 9 decimals
        assert str(separation(11)).startswith("0.043945312")


def test_snap_oracle_equivalence():
    with criterion("snap oracle equivalence (100k pairs)", budget_s=5.0):
        rng = random.Random(8086)
        for k in range(100_000):
            zoom = rng.randrange(18)
            if k % 2:
                value = rng.uniform(-90.0, 90.0)
            else:
                value = rng.uniform(-180.0, 180.0)
            assert snap_index(value, SEPARATIONS[zoom]) == snap_index_oracle(value, zoom), (
                f"mismatch at value={value!r} zoom={zoom}"
            )


def test_aggregation_oracle_equivalence():
    with criterion("aggregation oracle equivalence (200 stores)", budget_s=60.0):
        rng = random.Random(4004)
        for round_index in range(200):
            n = rng.randrange(0, 10_001)
            if round_index % 2:
                # tight span forces heavy cell sharing
                lat0 = rng.uniform(-80, 75)
                lon0 = rng.uniform(-170, 160)
                spans = ((lat0, lat0 + 5.0), (lon0, lon0 + 8.0))
            else:
                spans = ((-85.0, 85.0), (-179.0, 179.0))
            events = random_events(rng, n, lat_span=spans[0], lon_span=spans[1])
            store = InMemoryColumnStore()
            store.ingest_batch(events)
            for _ in range(2):
                lat_a, lat_b = sorted((rng.uniform(-90, 90), rng.uniform(-90, 90)))
                lon_a, lon_b = sorted((rng.uniform(-180, 180), rng.uniform(-180, 180)))
                time_filter = None
                if rng.random() < 0.25:
                    t_a, t_b = sorted((rng.randrange(1, 10_000_000), rng.randrange(1, 10_000_000)))
                    time_filter = TimeRange(tmin=t_a, tmax=t_b)
                query = AggregateQuery(
                    bbox=BoundingBox(min=GeoPoint(lat_a, lon_a), max=GeoPoint(lat_b, lon_b)),
                    zoom=rng.randrange(18),
                    time=time_filter,
                )
                clusters = store.aggregate(query)
                expected = aggregate_oracle(events, query)
                assert clusters_to_counter(clusters, query.zoom) == expected
                assert sum(c.count for c in clusters) == sum(expected.values())


def test_decimal_scheme_level_jump():
    with criterion("decimal-scheme 100x level jump", budget_s=10.0):
        step = Decimal("0.001")
        lat3 = [float(Decimal("43.000") + k * step) for k in range(1000)]
        # negative axis: truncation groups run toward zero, so start at
        # -8.999 to cover exactly one hundred complete ten-value groups
        lon3 = [float(Decimal("-8.999") + k * step) for k in range(1000)]
        lat_image = {v: truncate_decimal(v, 2) for v in lat3}
        lon_image = {v: truncate_decimal(v, 2) for v in lon3}
        # per axis: every 2-decimal value absorbs exactly ten 3-decimal values
        for image_map in (lat_image, lon_image):
            per_axis = Counter(image_map.values())
            assert len(per_axis) == 100
            assert set(per_axis.values()) == {10}
        # per axis pair, exhaustively over the 1x1 degree patch
        pair_counts: Counter = Counter()
        for la in lat3:
            la2 = lat_image[la]
            for lo in lon3:
                pair_counts[(la2, lon_image[lo])] += 1
        assert len(pair_counts) == 100 * 100
        assert set(pair_counts.values()) == {100}


DESK_CFG = SimConfig(drivers=50, seed=1234, duration_s=600)


@pytest.fixture(scope="module")
def desk_dataset(tmp_path_factory, desk_network):
    path = tmp_path_factory.mktemp("desk") / "desk.ndjson"
    count = simulate(desk_network, DESK_CFG, path)
    return path, count


def test_simulator_determinism_and_shape(tmp_path, desk_network, desk_dataset):
    with criterion("simulator determinism and temporal shape", budget_s=30.0):
        first_path, count = desk_dataset
        second_path = tmp_path / "again.ndjson"
        assert simulate(desk_network, DESK_CFG, second_path) == count
        assert first_path.read_bytes() == second_path.read_bytes()

        segment_ends = [
            (desk_network.nodes[s.a], desk_network.nodes[s.b]) for s in desk_network.segments
        ]
        last_ts: dict[str, int] = {}
        active: Counter = Counter()
        total = 0
        for ev in simulate_events(desk_network, DESK_CFG):
            total += 1
            if ev.driver_id in last_ts:
                assert ev.ts - last_ts[ev.driver_id] == 1000, "not strictly 1 Hz"
            last_ts[ev.driver_id] = ev.ts
            active[ev.ts] += 1
            assert min(
                distance_to_segment_deg(ev.pos, a, b) for a, b in segment_ends
            ) <= 1e-9, "event off the network"
        assert total == count
        counts = [active[t] for t in sorted(active)]
        assert counts == sorted(counts, reverse=True), "active drivers increased after start"


def test_result_size_bound_on_bench_queries(desk_dataset):
    with criterion("result-size bound on every bench query"):
        path, count = desk_dataset
        store = InMemoryColumnStore()
        report = load_file(path, store)
        assert report.accepted == count  # determinism chain: sim -> file -> store
        stats = store.stats()
        plan = BenchPlan(extent=stats.extent, queries_per_zoom=10, seed=17)
        bench = run(plan, store)  # run() itself raises on any violation
        queries = generate_queries(plan)
        assert len(queries) == len(bench.rows)
        for query, row in zip(queries, bench.rows):
            assert row.zoom == query.zoom
            assert row.clusters <= result_size_bound(query.bbox, query.zoom)


FIXTURE_LINES = "\n".join([
    '{"driverId":"d1","lat":10.0,"lon":10.0,"timestamp":1000,"speed":1,"bearing":0,"accuracy":5}',
    '{"driverId":"d2","lat":10.5,"lon":10.5,"timestamp":2000,"speed":2,"bearing":90,"accuracy":5}',
    '{"driverId":"d3","lat":20.0,"lon":20.0,"timestamp":3000,"speed":3,"bearing":180,"accuracy":5}',
])


def test_http_contract():
    with criterion("HTTP contract on the 3-event fixture", budget_s=5.0):
        params = {"minLat": 0, "minLon": 0, "maxLat": 30, "maxLon": 30, "zoom": 5}
        with TestClient(create_app(InMemoryColumnStore())) as client:
            body = client.get("/aggregate", params=params)
            assert body.status_code == 200
            assert body.json() == {"zoom": 5, "separation": 2.8125, "clusters": [], "total": 0}
            assert client.post("/events", content="").status_code == 400

            posted = client.post("/events", content=FIXTURE_LINES)
            assert posted.status_code == 200
            assert posted.json() == {"accepted": 3, "rejected": 0, "parse_errors": 0}

            result = client.get("/aggregate", params=params)
            assert result.status_code == 200
            clusters = {(c["lat"], c["lon"]): c["count"] for c in result.json()["clusters"]}
            assert clusters == {(11.25, 11.25): 2, (19.6875, 19.6875): 1}
            assert result.json()["total"] == 3

            stats = client.get("/stats").json()
            assert stats["events"] == 3
            assert stats["extent"] == {"minLat": 10.0, "minLon": 10.0, "maxLat": 20.0, "maxLon": 20.0}

            assert client.get("/aggregate", params={**params, "zoom": 25}).status_code == 400
            assert client.get("/aggregate", params={**params, "minLat": 40}).status_code == 400
            no_max = {k: v for k, v in params.items() if k != "maxLon"}
            assert client.get("/aggregate", params=no_max).status_code == 400

        with TestClient(create_app(InMemoryColumnStore(), ServerConfig(max_cells=1))) as tiny:
            tiny.post("/events", content=FIXTURE_LINES)
            assert tiny.get("/aggregate", params=params).status_code == 413


BIG_RUN = dict(rows=55, cols=55, spacing_m=2700.0, drivers=2100, duration_s=2500)


@pytest.mark.slow
def test_latency_reproduction_scaled(tmp_path_factory):
    """Scaled substitute for the published absolute numbers: shape plus the
    two-second budget at zoom >= 11 on the in-memory reference store."""
    net = grid_network(
        rows=BIG_RUN["rows"], cols=BIG_RUN["cols"],
        origin=GeoPoint(42.3, -8.8), spacing_m=BIG_RUN["spacing_m"],
    )
    cfg = SimConfig(drivers=BIG_RUN["drivers"], seed=20180501, duration_s=BIG_RUN["duration_s"])
    path = tmp_path_factory.mktemp("bigrun") / "events.ndjson"

    with criterion("latency dataset simulated (5M events)"):
        simulated = simulate(net, cfg, path)
        assert simulated >= 5_000_000, f"dataset too small: {simulated}"

    store = InMemoryColumnStore()
    with criterion("latency dataset load under 3 minutes", budget_s=180.0):
        report = load_file(path, store)
        assert report.accepted == simulated
        assert report.rejected == 0 and report.parse_errors == 0

    plan = BenchPlan(extent=store.stats().extent, seed=42)  # defaults: 100/zoom, 10..15, 600x400
    with criterion("latency bench under 5 minutes", budget_s=300.0):
        bench = run(plan, store)
    _emit(format_report(bench))

    with criterion("mean latency non-increasing from zoom 10 to 15"):
        means = [s.mean_s for s in bench.per_zoom]
        assert all(a >= b for a, b in zip(means, means[1:])), f"means not monotone: {means}"

    with criterion("mean latency < 2 s at every zoom >= 11"):
        for stats in bench.per_zoom:
            if stats.zoom >= 11:
                assert stats.mean_s < 2.0, f"zoom {stats.zoom} mean {stats.mean_s:.3f}s"
