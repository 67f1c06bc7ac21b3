/**
 * Time-range selection state. Bounds come from /stats; the selection is a
 * sub-interval pushed into subsequent aggregate queries.
 */

import type { TimeRange } from "./api";

export class TimeControl {
  private bounds: TimeRange | null = null;
  private selection: TimeRange | null = null;

  setBounds(bounds: TimeRange | null): void {
    this.bounds = bounds;
    this.selection = null;
  }

  getBounds(): TimeRange | null {
    return this.bounds;
  }

  /** Clamp the requested interval into the data bounds. */
  select(tmin: number, tmax: number): TimeRange | null {
    if (!this.bounds) return null;
    const lo = Math.max(this.bounds.tmin, Math.min(tmin, tmax));
    const hi = Math.min(this.bounds.tmax, Math.max(tmin, tmax));
    this.selection = { tmin: lo, tmax: hi };
    return this.selection;
  }

  clear(): void {
    this.selection = null;
  }

  /** The filter to attach to queries; null means unfiltered. Selecting the
   * full bounds is equivalent to no filter (closed bounds both sides). */
  current(): TimeRange | null {
    if (!this.selection || !this.bounds) return null;
    if (this.selection.tmin <= this.bounds.tmin && this.selection.tmax >= this.bounds.tmax) {
      return null;
    }
    return this.selection;
  }
}
