"""Route simulator: drivers traverse a road network emitting 1 Hz events.

Each driver starts at a random node, plans a shortest route to a random
reachable destination and advances once per second at a random fraction of
each segment's speed limit, drawing a fresh fraction whenever it enters a
new segment. Dataset generation is separate from ingestion: simulate()
writes the NDJSON wire format, ordered by timestamp then driver id, and a
given (network, config, seed) always produces byte-identical output.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .geomodel import Event, GeoPoint
from .ingest import serialize_event

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEGREE = math.pi * EARTH_RADIUS_M / 180.0

# Synthetic GPS fix quality reported with every event.
ACCURACY_M = 5.0


class NetworkError(ValueError):
    """Road network file or structure is invalid."""


class RouteError(ValueError):
    """No route exists between the requested nodes."""


@dataclass(frozen=True, slots=True)
class Segment:
    """One undirected road segment; length derives from its endpoints."""

    a: str
    b: str
    max_speed: float  # meters/second
    length: float     # meters


def segment_length(p: GeoPoint, q: GeoPoint) -> float:
    """Equirectangular length scaled by cos(mean latitude); desk-scale
    networks are small enough that geodesic precision is immaterial."""
    dy = (q.lat - p.lat) * METERS_PER_DEGREE
    dx = (q.lon - p.lon) * METERS_PER_DEGREE * math.cos(math.radians((p.lat + q.lat) / 2.0))
    return math.hypot(dx, dy)


class RoadNetwork:
    """Nodes keyed by string id plus undirected segments between them."""

    def __init__(self, nodes: dict[str, GeoPoint], segments: Iterable[tuple[str, str, float]]):
        self.nodes = dict(nodes)
        self.segments: list[Segment] = []
        self.adjacency: dict[str, list[tuple[str, int]]] = {nid: [] for nid in self.nodes}
        for a, b, max_speed in segments:
            if a not in self.nodes or b not in self.nodes:
                raise NetworkError(f"segment references unknown node: {a!r}-{b!r}")
            if max_speed <= 0:
                raise NetworkError(f"segment {a!r}-{b!r} max_speed must be > 0")
            if a == b:
                raise NetworkError(f"segment {a!r}-{b!r} is a self-loop")
            length = segment_length(self.nodes[a], self.nodes[b])
            if length <= 0.0:
                raise NetworkError(f"segment {a!r}-{b!r} has zero length")
            seg = Segment(a=a, b=b, max_speed=max_speed, length=length)
            index = len(self.segments)
            self.segments.append(seg)
            self.adjacency[a].append((b, index))
            self.adjacency[b].append((a, index))
        if not any(len(neigh) for neigh in self.adjacency.values()):
            raise NetworkError("network has no traversable segment")
        self._components: dict[str, list[str]] | None = None

    def component_of(self, node: str) -> list[str]:
        """Sorted node ids of the connected component containing `node`."""
        if self._components is None:
            self._components = {}
            seen: set[str] = set()
            for start in self.nodes:
                if start in seen:
                    continue
                stack = [start]
                members = []
                seen.add(start)
                while stack:
                    u = stack.pop()
                    members.append(u)
                    for v, _ in self.adjacency[u]:
                        if v not in seen:
                            seen.add(v)
                            stack.append(v)
                members.sort()
                for m in members:
                    self._components[m] = members
        return self._components[node]


def load_network(path: str | Path) -> RoadNetwork:
    """Read the network JSON document {nodes: [...], segments: [...]}."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    try:
        nodes = {str(n["id"]): GeoPoint(lat=float(n["lat"]), lon=float(n["lon"]))
                 for n in doc["nodes"]}
        segments = [(str(s["from"]), str(s["to"]), float(s["max_speed_ms"]))
                    for s in doc["segments"]]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network file {path}: {exc}") from exc
    return RoadNetwork(nodes, segments)


def save_network(net: RoadNetwork, path: str | Path) -> None:
    doc = {
        "nodes": [{"id": nid, "lat": p.lat, "lon": p.lon}
                  for nid, p in sorted(net.nodes.items())],
        "segments": [{"from": s.a, "to": s.b, "max_speed_ms": s.max_speed}
                     for s in net.segments],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")


def grid_network(
    rows: int,
    cols: int,
    origin: GeoPoint = GeoPoint(43.0, -8.8),
    spacing_m: float = 500.0,
    max_speed_ms: float = 13.9,
) -> RoadNetwork:
    """Synthetic rectangular road grid for tests and benchmarks."""
    if rows < 1 or cols < 1:
        raise NetworkError("grid must have at least one node per axis")
    dlat = spacing_m / METERS_PER_DEGREE
    dlon = spacing_m / (METERS_PER_DEGREE * math.cos(math.radians(origin.lat)))
    nodes = {
        f"n{r}-{c}": GeoPoint(lat=origin.lat + r * dlat, lon=origin.lon + c * dlon)
        for r in range(rows)
        for c in range(cols)
    }
    segments = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                segments.append((f"n{r}-{c}", f"n{r}-{c + 1}", max_speed_ms))
            if r + 1 < rows:
                segments.append((f"n{r}-{c}", f"n{r + 1}-{c}", max_speed_ms))
    return RoadNetwork(nodes, segments)


def plan_route(net: RoadNetwork, origin: str, dest: str) -> list[str]:
    """Shortest path by segment length; equal-length alternatives resolve
    to the predecessor with the lowest node id, so routes are deterministic."""
    if origin not in net.nodes or dest not in net.nodes:
        raise RouteError(f"unknown node: {origin!r} or {dest!r}")
    if origin == dest:
        return [origin]
    dist: dict[str, float] = {origin: 0.0}
    pred: dict[str, str] = {}
    heap: list[tuple[float, str]] = [(0.0, origin)]
    done: set[str] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dest:
            break
        for v, seg_index in net.adjacency[u]:
            nd = d + net.segments[seg_index].length
            if v not in dist or nd < dist[v] or (nd == dist[v] and u < pred[v]):
                if v not in done:
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
    if dest not in pred:
        raise RouteError(f"destination {dest!r} unreachable from {origin!r}")
    path = [dest]
    while path[-1] != origin:
        path.append(pred[path[-1]])
    path.reverse()
    return path


@dataclass(frozen=True, slots=True)
class SimConfig:
    drivers: int
    seed: int
    speed_factor_range: tuple[float, float] = (0.8, 1.1)
    start_ts: int = 1_514_764_800_000
    duration_s: int | None = None  # horizon; None lets every route finish

    def __post_init__(self) -> None:
        if self.drivers < 1:
            raise ValueError(f"drivers must be >= 1: {self.drivers}")
        lo, hi = self.speed_factor_range
        if not (0.0 < lo <= hi <= 2.0):
            raise ValueError(f"speed factor range must sit within (0, 2]: {self.speed_factor_range}")


@dataclass(frozen=True, slots=True)
class DriverState:
    """Progress of one driver along its planned route."""

    driver_id: str
    route: tuple[str, ...]
    leg: int          # index of the segment (route[leg] -> route[leg+1])
    pos_m: float      # meters from route[leg] along the current segment
    factor: float     # speed fraction drawn for the current segment
    arrived: bool = False


def _segment_between(net: RoadNetwork, a: str, b: str) -> Segment:
    for v, seg_index in net.adjacency[a]:
        if v == b:
            return net.segments[seg_index]
    raise RouteError(f"route legs {a!r}-{b!r} are not adjacent")


def _leg_geometry(net: RoadNetwork, state: DriverState) -> tuple[GeoPoint, GeoPoint, Segment]:
    a = net.nodes[state.route[state.leg]]
    b = net.nodes[state.route[state.leg + 1]]
    return a, b, _segment_between(net, state.route[state.leg], state.route[state.leg + 1])


def step(
    state: DriverState,
    net: RoadNetwork,
    rng: random.Random,
    ts: int,
    dt: float = 1.0,
    factor_range: tuple[float, float] = (0.8, 1.1),
) -> tuple[DriverState, Event]:
    """Advance one tick and emit the interpolated event.

    The driver covers factor * max_speed * dt meters; leftover meters spill
    across segment boundaries, and a fresh factor is drawn for every
    segment entered. On overshooting the destination the position clamps to
    it and the driver terminates (arrival event included).
    """
    if state.arrived:
        raise RouteError(f"driver {state.driver_id} already arrived")
    _, _, seg = _leg_geometry(net, state)
    advance = state.factor * seg.max_speed * dt
    leg = state.leg
    pos = state.pos_m + advance
    factor = state.factor
    arrived = False
    while pos >= seg.length:
        if leg + 1 >= len(state.route) - 1:
            pos = seg.length
            arrived = True
            break
        pos -= seg.length
        leg += 1
        seg = _segment_between(net, state.route[leg], state.route[leg + 1])
        factor = rng.uniform(*factor_range)
    new_state = DriverState(
        driver_id=state.driver_id, route=state.route, leg=leg,
        pos_m=pos, factor=factor, arrived=arrived,
    )
    a = net.nodes[state.route[leg]]
    b = net.nodes[state.route[leg + 1]]
    t = pos / seg.length if seg.length > 0 else 1.0
    lat = a.lat + (b.lat - a.lat) * t
    lon = a.lon + (b.lon - a.lon) * t
    event = Event(
        driver_id=state.driver_id,
        pos=GeoPoint(lat=lat, lon=lon),
        ts=ts,
        speed=factor * seg.max_speed,
        bearing=_bearing(a, b),
        accuracy=ACCURACY_M,
    )
    return new_state, event


def _bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Compass bearing of the segment direction, degrees in [0, 360)."""
    dy = (b.lat - a.lat)
    dx = (b.lon - a.lon) * math.cos(math.radians((a.lat + b.lat) / 2.0))
    return (math.degrees(math.atan2(dx, dy)) + 360.0) % 360.0


def driver_seed(master_seed: int, index: int) -> int:
    """Stable per-driver seed independent of scheduling or hash salting."""
    digest = hashlib.blake2b(f"{master_seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _init_driver(
    net: RoadNetwork,
    cfg: SimConfig,
    index: int,
    node_ids: list[str],
) -> tuple[DriverState | None, random.Random]:
    """Draw a start node, a reachable destination and the first segment's
    speed factor. Degenerate routes (origin == destination) yield no state."""
    rng = random.Random(driver_seed(cfg.seed, index))
    origin = rng.choice(node_ids)
    dest = rng.choice(net.component_of(origin))
    route = plan_route(net, origin, dest)
    if len(route) < 2:
        return None, rng
    state = DriverState(
        driver_id=f"d{index:05d}", route=tuple(route), leg=0, pos_m=0.0,
        factor=rng.uniform(*cfg.speed_factor_range), arrived=False,
    )
    return state, rng


def driver_events(net: RoadNetwork, cfg: SimConfig, index: int) -> Iterator[Event]:
    """One driver's 1 Hz stream, terminating on arrival or at the horizon.

    Single-threaded reference path: replaying a driver in isolation yields
    exactly its slice of the full simulation (per-driver RNG streams are
    independent), which is what the replay oracle in the tests leans on.
    """
    state, rng = _init_driver(net, cfg, index, sorted(net.nodes))
    if state is None:
        return
    tick = 0
    while not state.arrived:
        tick += 1
        if cfg.duration_s is not None and tick > cfg.duration_s:
            return
        state, event = step(
            state, net, rng, ts=cfg.start_ts + tick * 1000, dt=1.0,
            factor_range=cfg.speed_factor_range,
        )
        yield event


def simulate_events(net: RoadNetwork, cfg: SimConfig) -> Iterator[Event]:
    """All drivers' events in (timestamp, driver id) order.

    Every driver ticks on the same 1 Hz grid, so advancing tick by tick in
    driver-index order gives the output order directly; drivers start
    simultaneously and finish permanently. Memory stays proportional to the
    driver count, not the event count.
    """
    node_ids = sorted(net.nodes)
    drivers: list[list] = []
    for index in range(cfg.drivers):
        state, rng = _init_driver(net, cfg, index, node_ids)
        if state is not None:
            drivers.append([state, rng])
    tick = 0
    while drivers:
        tick += 1
        if cfg.duration_s is not None and tick > cfg.duration_s:
            return
        ts = cfg.start_ts + tick * 1000
        remaining: list[list] = []
        for item in drivers:
            state, rng = item
            state, event = step(
                state, net, rng, ts=ts, dt=1.0, factor_range=cfg.speed_factor_range
            )
            item[0] = state
            yield event
            if not state.arrived:
                remaining.append(item)
        drivers = remaining


def simulate(net: RoadNetwork, cfg: SimConfig, out: str | Path | IO[str]) -> int:
    """Run the simulation and write the NDJSON dataset; returns event count."""
    if hasattr(out, "write"):
        return _write_stream(net, cfg, out)  # type: ignore[arg-type]
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        return _write_stream(net, cfg, handle)


def _write_stream(net: RoadNetwork, cfg: SimConfig, handle: IO[str]) -> int:
    count = 0
    for event in simulate_events(net, cfg):
        handle.write(serialize_event(event))
        handle.write("\n")
        count += 1
    return count
