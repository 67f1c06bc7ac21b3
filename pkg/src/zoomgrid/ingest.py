"""Parse and load newline-delimited JSON event streams.

One event per line; required keys driverId, lat, lon, timestamp, speed,
bearing, accuracy; optional alt and payload. Unknown top-level keys are
folded into the payload document. Telemetry streams contain garbage, so a
bad line never aborts a load: non-JSON lines count as parse errors, JSON
lines failing the schema or the domain invariants count as rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .geomodel import Event, GeoPoint, ValidationError, validate_event
from .store import Retriever

DEFAULT_BATCH_SIZE = 10_000

REQUIRED_KEYS = ("driverId", "lat", "lon", "timestamp", "speed", "bearing", "accuracy")
_KNOWN_KEYS = frozenset(REQUIRED_KEYS) | {"alt", "payload"}


class ParseError(ValueError):
    """Line is not a JSON object."""


class WireFormatError(ValueError):
    """JSON object is missing a required key or has a wrongly-typed value."""


@dataclass(frozen=True, slots=True)
class LoadReport:
    accepted: int
    rejected: int
    parse_errors: int


def _number(obj: dict, key: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WireFormatError(f"key {key!r} is not a number: {value!r}")
    return float(value)


def parse_line(text: str) -> Event:
    """Decode and validate one NDJSON event line.

    Raises ParseError for malformed JSON, WireFormatError for schema
    violations (missing key, wrong type) and ValidationError for domain
    invariant violations.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"line is not a JSON object: {text[:60]!r}")
    for key in REQUIRED_KEYS:
        if key not in obj:
            raise WireFormatError(f"missing required key: {key}")
    driver_id = obj["driverId"]
    if not isinstance(driver_id, str):
        raise WireFormatError(f"key 'driverId' is not a string: {driver_id!r}")
    ts = obj["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise WireFormatError(f"key 'timestamp' is not an integer: {ts!r}")

    payload = obj.get("payload")
    if payload is not None and not isinstance(payload, dict):
        raise WireFormatError(f"key 'payload' is not an object: {payload!r}")
    extras = {k: v for k, v in obj.items() if k not in _KNOWN_KEYS}
    if extras:
        payload = {**(payload or {}), **extras}

    alt = obj.get("alt")
    event = Event(
        driver_id=driver_id,
        pos=GeoPoint(lat=_number(obj, "lat"), lon=_number(obj, "lon")),
        ts=ts,
        speed=_number(obj, "speed"),
        bearing=_number(obj, "bearing"),
        accuracy=_number(obj, "accuracy"),
        alt=None if alt is None else _number(obj, "alt"),
        payload=payload,
    )
    return validate_event(event)


def serialize_event(event: Event) -> str:
    """One NDJSON line for the event; parse_line(serialize_event(e)) == e."""
    obj: dict = {
        "driverId": event.driver_id,
        "lat": event.pos.lat,
        "lon": event.pos.lon,
        "timestamp": event.ts,
        "speed": event.speed,
        "bearing": event.bearing,
        "accuracy": event.accuracy,
    }
    if event.alt is not None:
        obj["alt"] = event.alt
    if event.payload:
        obj["payload"] = event.payload
    return json.dumps(obj, separators=(",", ":"))


def load_lines(
    lines: Iterable[str],
    retriever: Retriever,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> LoadReport:
    """Parse lines and forward events to the retriever in batches.

    Blank lines are skipped without being counted. Every counted line ends
    up in exactly one of accepted / rejected / parse_errors.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1: {batch_size}")
    accepted = 0
    rejected = 0
    parse_errors = 0
    batch: list[Event] = []

    def flush() -> None:
        nonlocal accepted, rejected
        if batch:
            report = retriever.ingest_batch(batch)
            accepted += report.accepted
            rejected += report.rejected
            batch.clear()

    for line in lines:
        if not line.strip():
            continue
        try:
            batch.append(parse_line(line))
        except ParseError:
            parse_errors += 1
        except (WireFormatError, ValidationError):
            rejected += 1
        if len(batch) >= batch_size:
            flush()
    flush()
    return LoadReport(accepted=accepted, rejected=rejected, parse_errors=parse_errors)


def load_file(
    path: str | Path,
    retriever: Retriever,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> LoadReport:
    """Load a newline-delimited JSON event file."""
    with open(path, "r", encoding="utf-8") as handle:
        return load_lines(handle, retriever, batch_size=batch_size)
