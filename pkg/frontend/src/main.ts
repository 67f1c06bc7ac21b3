/**
 * Viewer bootstrap: map, cluster data layer and the time-range controls.
 *
 * The backend base URL defaults to the serving origin and can be pointed
 * elsewhere with ?backend=http://host:port for development.
 */

import L from "leaflet";
import "leaflet/dist/leaflet.css";

import { AggregateApi } from "./api";
import { ClusterDataLayer, MAX_QUERY_ZOOM } from "./dataLayer";
import { LeafletClusterRenderer, LeafletMapView } from "./leafletLayer";
import { TimeControl } from "./timeControl";

const params = new URLSearchParams(window.location.search);
const backend = params.get("backend") ?? window.location.origin;
const api = new AggregateApi(backend);

const map = L.map("map", {
  center: [43.0, -8.0],
  zoom: 9,
  maxZoom: MAX_QUERY_ZOOM,
  worldCopyJump: false,
  preferCanvas: true, // thousands of circle markers per refresh
});
L.tileLayer("https://tile.openstreetmap.org/{z}/{x}/{y}.png", {
  attribution: '&copy; <a href="https://www.openstreetmap.org/copyright">OpenStreetMap</a>',
  maxZoom: MAX_QUERY_ZOOM,
}).addTo(map);

const banner = document.getElementById("error-banner");
const totalBox = document.getElementById("totals");
const renderer = new LeafletClusterRenderer(map, banner, totalBox);
const dataLayer = new ClusterDataLayer(api, renderer);
const timeControl = new TimeControl();

const tminInput = document.getElementById("tmin") as HTMLInputElement | null;
const tmaxInput = document.getElementById("tmax") as HTMLInputElement | null;
const applyButton = document.getElementById("apply-time");
const clearButton = document.getElementById("clear-time");

function pushTimeSelection(): void {
  if (!tminInput || !tmaxInput) return;
  const tmin = Number(tminInput.value);
  const tmax = Number(tmaxInput.value);
  if (Number.isFinite(tmin) && Number.isFinite(tmax)) {
    timeControl.select(tmin, tmax);
    dataLayer.setTimeRange(timeControl.current());
  }
}

applyButton?.addEventListener("click", pushTimeSelection);
clearButton?.addEventListener("click", () => {
  timeControl.clear();
  dataLayer.setTimeRange(null);
  syncInputs(timeControl.getBounds());
});

function syncInputs(bounds: { tmin: number; tmax: number } | null): void {
  if (!tminInput || !tmaxInput || !bounds) return;
  tminInput.min = tmaxInput.min = String(bounds.tmin);
  tminInput.max = tmaxInput.max = String(bounds.tmax);
  tminInput.value = String(bounds.tmin);
  tmaxInput.value = String(bounds.tmax);
}

async function start(): Promise<void> {
  try {
    const stats = await api.stats();
    timeControl.setBounds(stats.time);
    syncInputs(stats.time);
    if (stats.extent) {
      map.fitBounds(
        L.latLngBounds(
          [stats.extent.minLat, stats.extent.minLon],
          [stats.extent.maxLat, stats.extent.maxLon]
        )
      );
    }
  } catch (error) {
    banner?.removeAttribute("hidden");
    if (banner) banner.textContent = `backend unreachable at ${backend}`;
  }
  dataLayer.attach(new LeafletMapView(map));
}

void start();
