/**
 * The viewer's data layer: refetch aggregated clusters when the view
 * settles, render atomically, drop stale responses.
 *
 * Map-library agnostic: it sees the map through the MapView interface and
 * pushes MarkerSpec batches to a renderer callback, so the whole pipeline
 * runs headless in tests. The Leaflet binding lives in leafletLayer.ts.
 */

import { AggregateApi, Bounds, TimeRange } from "./api";
import { MarkerSpec, toMarkerSpecs } from "./markers";

export const DEFAULT_DEBOUNCE_MS = 250;
export const MIN_QUERY_ZOOM = 0;
export const MAX_QUERY_ZOOM = 17;

export interface ViewState {
  bounds: Bounds;
  zoom: number;
}

/** What the data layer needs from a slippy map. */
export interface MapView {
  getView(): ViewState;
  /** Register a callback fired every time a pan/zoom gesture ends. */
  onMoveEnd(listener: () => void): void;
}

export interface RenderTarget {
  /** Replace all markers atomically. */
  render(markers: MarkerSpec[], total: number): void;
  /** Non-blocking error surface; previous markers stay up. */
  showError?(message: string): void;
}

export function clampZoom(zoom: number): number {
  return Math.min(MAX_QUERY_ZOOM, Math.max(MIN_QUERY_ZOOM, Math.round(zoom)));
}

type Scheduler = (fn: () => void, ms: number) => ReturnType<typeof setTimeout>;

export interface DataLayerOptions {
  debounceMs?: number;
  /** Injectable for deterministic tests. */
  schedule?: Scheduler;
  cancel?: (handle: ReturnType<typeof setTimeout>) => void;
}

export class ClusterDataLayer {
  private readonly api: AggregateApi;
  private readonly target: RenderTarget;
  private readonly debounceMs: number;
  private readonly schedule: Scheduler;
  private readonly cancel: (handle: ReturnType<typeof setTimeout>) => void;

  private map: MapView | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private requestSeq = 0;
  private renderedSeq = 0;
  private timeRange: TimeRange | null = null;
  private inFlight = 0;

  constructor(api: AggregateApi, target: RenderTarget, options: DataLayerOptions = {}) {
    this.api = api;
    this.target = target;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle));
  }

  attach(map: MapView): void {
    this.map = map;
    map.onMoveEnd(() => this.viewChanged());
    void this.refresh(); // initial load for the starting view
  }

  /** Debounced entry point for settled pan/zoom gestures. */
  viewChanged(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
    }
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.refresh();
    }, this.debounceMs);
  }

  /** Update the time filter; takes effect with an immediate refetch. */
  setTimeRange(range: TimeRange | null): void {
    this.timeRange = range;
    void this.refresh();
  }

  get requestsInFlight(): number {
    return this.inFlight;
  }

  /** Issue exactly one aggregate request for the current view. */
  async refresh(): Promise<void> {
    if (!this.map) return;
    const view = this.map.getView();
    const seq = ++this.requestSeq;
    this.inFlight += 1;
    try {
      const response = await this.api.aggregate(view.bounds, clampZoom(view.zoom), this.timeRange);
      if (seq < this.requestSeq || seq <= this.renderedSeq) {
        return; // superseded while in flight; never render stale data
      }
      this.renderedSeq = seq;
      this.target.render(toMarkerSpecs(response.clusters), response.total);
    } catch (error) {
      if (seq === this.requestSeq) {
        this.target.showError?.(error instanceof Error ? error.message : String(error));
      }
    } finally {
      this.inFlight -= 1;
    }
  }
}
