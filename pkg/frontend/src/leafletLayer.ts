/**
 * Leaflet bindings: adapts an L.Map to the MapView interface and renders
 * MarkerSpec batches as a bulk circle-marker layer.
 *
 * Markers carry no per-marker event handlers; at ten thousand clusters a
 * viewport refresh has to stay within the render budget.
 */

import L from "leaflet";

import type { MapView, RenderTarget, ViewState } from "./dataLayer";
import type { MarkerSpec } from "./markers";

export class LeafletMapView implements MapView {
  constructor(private readonly map: L.Map) {}

  getView(): ViewState {
    const b = this.map.getBounds();
    return {
      bounds: {
        minLat: b.getSouth(),
        minLon: b.getWest(),
        maxLat: b.getNorth(),
        maxLon: b.getEast(),
      },
      zoom: this.map.getZoom(),
    };
  }

  onMoveEnd(listener: () => void): void {
    this.map.on("moveend", listener);
  }
}

export class LeafletClusterRenderer implements RenderTarget {
  private readonly layer: L.LayerGroup;
  private readonly banner: HTMLElement | null;
  private readonly totalBox: HTMLElement | null;

  constructor(map: L.Map, banner?: HTMLElement | null, totalBox?: HTMLElement | null) {
    this.layer = L.layerGroup([], { pane: "markerPane" }).addTo(map);
    this.banner = banner ?? null;
    this.totalBox = totalBox ?? null;
  }

  render(markers: MarkerSpec[], total: number): void {
    if (this.banner) this.banner.hidden = true;
    const replacement: L.Layer[] = [];
    for (const m of markers) {
      replacement.push(
        L.circleMarker([m.lat, m.lon], {
          radius: m.radius,
          stroke: true,
          weight: 1,
          color: "#1d4ed8",
          fillColor: "#3b82f6",
          fillOpacity: 0.55,
          interactive: false,
        })
      );
      replacement.push(
        L.marker([m.lat, m.lon], {
          interactive: false,
          keyboard: false,
          icon: L.divIcon({
            className: "cluster-label",
            html: m.label,
            iconSize: [m.radius * 2, 14],
            iconAnchor: [m.radius, 7],
          }),
        })
      );
    }
    this.layer.clearLayers();
    for (const layer of replacement) this.layer.addLayer(layer);
    if (this.totalBox) {
      this.totalBox.textContent = `${markers.length} clusters / ${total} events`;
    }
  }

  showError(message: string): void {
    if (this.banner) {
      this.banner.textContent = `query failed: ${message}`;
      this.banner.hidden = false;
    }
  }
}
