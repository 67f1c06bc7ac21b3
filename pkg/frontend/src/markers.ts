/** Marker sizing: area tracks count, so radius scales with its square root. */

import type { Cluster } from "./api";

export const MIN_RADIUS_PX = 8;
export const MAX_RADIUS_PX = 40;

/** Unclamped square-root scale; counts 1 and 100 give radii 1:10. */
export function sqrtRadius(count: number, base = MIN_RADIUS_PX): number {
  return base * Math.sqrt(Math.max(count, 0));
}

/** Display radius, clamped to keep extreme counts legible. */
export function markerRadius(count: number): number {
  return Math.min(MAX_RADIUS_PX, Math.max(MIN_RADIUS_PX, sqrtRadius(count)));
}

export interface MarkerSpec {
  lat: number;
  lon: number;
  count: number;
  radius: number;
  label: string;
}

/** Labels carry the exact count: the labels of a rendering sum to the
 * response total, which the tests lean on. */
export function toMarkerSpecs(clusters: Cluster[]): MarkerSpec[] {
  return clusters.map((c) => ({
    lat: c.lat,
    lon: c.lon,
    count: c.count,
    radius: markerRadius(c.count),
    label: String(c.count),
  }));
}
