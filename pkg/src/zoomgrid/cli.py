"""Command-line entry points: simulate, ingest, serve, bench, make-network."""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import bench as bench_mod
from . import simulator
from .geomodel import BoundingBox, GeoPoint
from .ingest import load_file
from .server import ServerConfig, serve
from .store import InMemoryColumnStore


def _add_simulate(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("simulate", help="generate a driver event dataset")
    p.add_argument("--network", required=True, help="road network JSON file")
    p.add_argument("--drivers", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--start-ts", type=int, default=1_514_764_800_000,
                   help="epoch ms of the simulation start")
    p.add_argument("--out", required=True, help="output NDJSON dataset file")
    p.add_argument("--speed-min", type=float, default=0.8)
    p.add_argument("--speed-max", type=float, default=1.1)
    p.add_argument("--duration", type=int, default=None,
                   help="optional horizon in simulated seconds")


def _add_ingest(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("ingest", help="load an NDJSON dataset into a store snapshot")
    p.add_argument("--in", dest="infile", required=True, help="NDJSON event file")
    p.add_argument("--batch", type=int, default=10_000)
    p.add_argument("--snapshot-out", default=None,
                   help="write the loaded store to this .npz snapshot")


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="run the HTTP aggregation service")
    p.add_argument("--bind", default=None, help="addr:port (default 127.0.0.1:8000)")
    p.add_argument("--timeout", type=float, default=None, help="query timeout seconds")
    p.add_argument("--max-cells", type=int, default=None, help="413 above this many clusters")
    p.add_argument("--load", default=None, help="NDJSON file to ingest at startup")
    p.add_argument("--snapshot", default=None, help=".npz store snapshot to open at startup")


def _add_bench(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("bench", help="run the latency benchmark")
    p.add_argument("--plan", default=None, help="JSON plan file (flags override)")
    p.add_argument("--data", default=None, help="NDJSON dataset to load first")
    p.add_argument("--snapshot", default=None, help=".npz store snapshot to open")
    p.add_argument("--http", default=None, help="bench a running server end-to-end")
    p.add_argument("--out", required=True, help="per-query CSV output")
    p.add_argument("--zooms", default=None, help="comma list, e.g. 10,11,12,13,14,15")
    p.add_argument("--queries", type=int, default=None, help="queries per zoom")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--extent", default=None, help="minLat,minLon,maxLat,maxLon")


def _add_make_network(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("make-network", help="write a synthetic grid road network")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--spacing", type=float, default=500.0, help="meters between nodes")
    p.add_argument("--max-speed", type=float, default=13.9, help="segment limit, m/s")
    p.add_argument("--origin", default="43.0,-8.8", help="lat,lon of the grid corner")
    p.add_argument("--out", required=True)


def _cmd_simulate(args: argparse.Namespace) -> int:
    net = simulator.load_network(args.network)
    cfg = simulator.SimConfig(
        drivers=args.drivers,
        seed=args.seed,
        speed_factor_range=(args.speed_min, args.speed_max),
        start_ts=args.start_ts,
        duration_s=args.duration,
    )
    started = time.perf_counter()
    count = simulator.simulate(net, cfg, args.out)
    print(f"wrote {count} events to {args.out} in {time.perf_counter() - started:.1f}s")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    store = InMemoryColumnStore()
    started = time.perf_counter()
    report = load_file(args.infile, store, batch_size=args.batch)
    elapsed = time.perf_counter() - started
    print(f"accepted={report.accepted} rejected={report.rejected} "
          f"parse_errors={report.parse_errors} in {elapsed:.1f}s")
    if args.snapshot_out:
        store.save_snapshot(args.snapshot_out)
        print(f"snapshot written to {args.snapshot_out}")
    return 0


def _open_store(data: str | None, snapshot: str | None, batch: int = 10_000) -> InMemoryColumnStore:
    if snapshot:
        return InMemoryColumnStore.load_snapshot(snapshot)
    store = InMemoryColumnStore()
    if data:
        report = load_file(data, store, batch_size=batch)
        print(f"loaded {report.accepted} events "
              f"(rejected={report.rejected}, parse_errors={report.parse_errors})",
              file=sys.stderr)
    return store


def _cmd_serve(args: argparse.Namespace) -> int:
    store = _open_store(args.load, args.snapshot)
    store.consolidate()
    config = ServerConfig.from_env(
        bind=args.bind, timeout_s=args.timeout, max_cells=args.max_cells
    )
    serve(store, config)
    return 0


def _parse_extent(text: str) -> BoundingBox:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"extent must be minLat,minLon,maxLat,maxLon: {text!r}")
    return BoundingBox(min=GeoPoint(parts[0], parts[1]), max=GeoPoint(parts[2], parts[3]))


def _bench_plan(args: argparse.Namespace, extent: BoundingBox | None) -> bench_mod.BenchPlan:
    values: dict = {}
    if args.plan:
        with open(args.plan, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
        if "extent" in doc:
            e = doc["extent"]
            values["extent"] = BoundingBox(
                min=GeoPoint(e["minLat"], e["minLon"]), max=GeoPoint(e["maxLat"], e["maxLon"])
            )
        if "zooms" in doc:
            values["zooms"] = tuple(doc["zooms"])
        if "queries_per_zoom" in doc:
            values["queries_per_zoom"] = doc["queries_per_zoom"]
        if "viewport_px" in doc:
            values["viewport_px"] = tuple(doc["viewport_px"])
        if "seed" in doc:
            values["seed"] = doc["seed"]
    if args.extent:
        values["extent"] = _parse_extent(args.extent)
    elif "extent" not in values:
        if extent is None:
            raise SystemExit("no data extent available; pass --extent or load data")
        values["extent"] = extent
    if args.zooms:
        values["zooms"] = tuple(int(z) for z in args.zooms.split(","))
    if args.queries:
        values["queries_per_zoom"] = args.queries
    if args.width or args.height:
        width, height = bench_mod.DEFAULT_VIEWPORT
        values["viewport_px"] = (args.width or width, args.height or height)
    if args.seed is not None:
        values["seed"] = args.seed
    return bench_mod.BenchPlan(**values)


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.http:
        import httpx

        stats = httpx.get(args.http.rstrip("/") + "/stats", timeout=30.0).json()
        extent = None
        if stats.get("extent"):
            e = stats["extent"]
            extent = BoundingBox(
                min=GeoPoint(e["minLat"], e["minLon"]), max=GeoPoint(e["maxLat"], e["maxLon"])
            )
        plan = _bench_plan(args, extent)
        report = bench_mod.run_http(plan, args.http, csv_path=args.out)
    else:
        if not args.data and not args.snapshot:
            raise SystemExit("bench needs --data, --snapshot or --http")
        store = _open_store(args.data, args.snapshot)
        stats = store.stats()
        plan = _bench_plan(args, stats.extent)
        report = bench_mod.run(plan, store, csv_path=args.out)
    print(bench_mod.format_report(report))
    print(f"per-query CSV written to {args.out}")
    return 0


def _cmd_make_network(args: argparse.Namespace) -> int:
    lat, lon = (float(x) for x in args.origin.split(","))
    net = simulator.grid_network(
        rows=args.rows, cols=args.cols, origin=GeoPoint(lat, lon),
        spacing_m=args.spacing, max_speed_ms=args.max_speed,
    )
    simulator.save_network(net, args.out)
    print(f"wrote {len(net.nodes)} nodes / {len(net.segments)} segments to {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ingest": _cmd_ingest,
    "serve": _cmd_serve,
    "bench": _cmd_bench,
    "make-network": _cmd_make_network,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="zoomgrid")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_ingest(sub)
    _add_serve(sub)
    _add_bench(sub)
    _add_make_network(sub)
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
