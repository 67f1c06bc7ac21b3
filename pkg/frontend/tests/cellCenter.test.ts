/**
 * Cluster positions are cell centers: re-snapping them client-side at the
 * request zoom must map every marker to itself.
 */

import { describe, expect, it } from "vitest";

function separation(zoom: number): number {
  return 90 / 2 ** zoom;
}

function snapToCenter(value: number, zoom: number): number {
  const sep = separation(zoom);
  return Math.floor(value / sep + 0.5) * sep;
}

const FIXTURE = [
  { lat: 11.25, lon: 11.25, count: 2 },
  { lat: 19.6875, lon: 19.6875, count: 1 },
];

describe("cell-center fixed point", () => {
  it("fixture clusters re-snap to themselves at the request zoom", () => {
    for (const cluster of FIXTURE) {
      expect(snapToCenter(cluster.lat, 5)).toBe(cluster.lat);
      expect(snapToCenter(cluster.lon, 5)).toBe(cluster.lon);
    }
  });

  it("holds across zoom levels for generated centers", () => {
    for (let zoom = 0; zoom <= 17; zoom++) {
      const sep = separation(zoom);
      for (const index of [-3, -1, 0, 2, 7]) {
        const center = index * sep;
        expect(snapToCenter(center, zoom)).toBe(center);
      }
    }
  });
});
