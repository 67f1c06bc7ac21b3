from __future__ import annotations

import random

import pytest

from zoomgrid.geomodel import Event, GeoPoint
from zoomgrid.simulator import grid_network

# one "<criterion>: PASS/FAIL (…s)" line per acceptance criterion, surfaced
# in the terminal summary because fd-level capture swallows plain prints
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def three_events() -> list[Event]:
    """Two events sharing zoom-5 cell (4, 4) plus one in cell (7, 7)."""
    return [
        Event(driver_id="d1", pos=GeoPoint(10.0, 10.0), ts=1_000, speed=1.0, bearing=0.0, accuracy=5.0),
        Event(driver_id="d2", pos=GeoPoint(10.5, 10.5), ts=2_000, speed=2.0, bearing=90.0, accuracy=5.0),
        Event(driver_id="d3", pos=GeoPoint(20.0, 20.0), ts=3_000, speed=3.0, bearing=180.0, accuracy=5.0),
    ]


@pytest.fixture(scope="session")
def desk_network():
    """Small road grid used by simulator and end-to-end tests."""
    return grid_network(rows=10, cols=10, origin=GeoPoint(43.0, -8.8), spacing_m=500.0)


def random_events(rng: random.Random, n: int, lat_span=(-85.0, 85.0), lon_span=(-179.0, 179.0)) -> list[Event]:
    """Uniformly scattered valid events for randomized store tests."""
    events = []
    for k in range(n):
        events.append(Event(
            driver_id=f"d{rng.randrange(50):03d}",
            pos=GeoPoint(rng.uniform(*lat_span), rng.uniform(*lon_span)),
            ts=rng.randrange(1, 10_000_000),
            speed=rng.uniform(0, 40),
            bearing=rng.uniform(0, 360),
            accuracy=rng.uniform(0, 20),
        ))
    return events
