/**
 * Typed client for the aggregation service.
 *
 * All coordinates are plain degrees; the backend filters on snapped cell
 * centers, so every returned cluster renders inside the requested bounds.
 */

export interface Bounds {
  minLat: number;
  minLon: number;
  maxLat: number;
  maxLon: number;
}

export interface TimeRange {
  tmin: number;
  tmax: number;
}

export interface Cluster {
  lat: number;
  lon: number;
  count: number;
}

export interface AggregateResponse {
  zoom: number;
  separation: number;
  clusters: Cluster[];
  total: number;
}

export interface StatsResponse {
  events: number;
  extent: Bounds | null;
  time: TimeRange | null;
}

export type Fetcher = typeof fetch;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class AggregateApi {
  private readonly baseUrl: string;
  private readonly fetcher: Fetcher;

  constructor(baseUrl: string, fetcher: Fetcher = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetcher = fetcher;
  }

  async aggregate(bounds: Bounds, zoom: number, time?: TimeRange | null): Promise<AggregateResponse> {
    const params = new URLSearchParams({
      minLat: String(bounds.minLat),
      minLon: String(bounds.minLon),
      maxLat: String(bounds.maxLat),
      maxLon: String(bounds.maxLon),
      zoom: String(zoom),
    });
    if (time) {
      params.set("tmin", String(time.tmin));
      params.set("tmax", String(time.tmax));
    }
    const body = await this.getJson(`/aggregate?${params}`);
    if (!Array.isArray(body.clusters) || typeof body.total !== "number") {
      throw new ApiError(200, "malformed aggregate response");
    }
    return body as AggregateResponse;
  }

  async stats(): Promise<StatsResponse> {
    return (await this.getJson("/stats")) as StatsResponse;
  }

  private async getJson(path: string): Promise<any> {
    const response = await this.fetcher(`${this.baseUrl}${path}`);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        detail = (await response.json()).error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }
}
