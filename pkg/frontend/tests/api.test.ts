import { describe, expect, it } from "vitest";

import { AggregateApi, ApiError } from "../src/api";

function stubFetch(status: number, body: unknown) {
  const calls: string[] = [];
  const fetcher = (async (input: any) => {
    calls.push(String(input));
    return {
      ok: status >= 200 && status < 300,
      status,
      statusText: `status ${status}`,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
  return { calls, fetcher };
}

const BOUNDS = { minLat: 1, minLon: 2, maxLat: 3, maxLon: 4 };

describe("aggregate client", () => {
  it("builds the query string the backend expects", async () => {
    const { calls, fetcher } = stubFetch(200, { zoom: 5, separation: 2.8125, clusters: [], total: 0 });
    const api = new AggregateApi("http://backend:9000/", fetcher);
    await api.aggregate(BOUNDS, 5);
    expect(calls[0]).toBe(
      "http://backend:9000/aggregate?minLat=1&minLon=2&maxLat=3&maxLon=4&zoom=5"
    );
  });

  it("attaches the time range only when present", async () => {
    const { calls, fetcher } = stubFetch(200, { zoom: 5, separation: 2.8125, clusters: [], total: 0 });
    const api = new AggregateApi("http://b", fetcher);
    await api.aggregate(BOUNDS, 5, { tmin: 7, tmax: 9 });
    expect(calls[0]).toContain("tmin=7");
    expect(calls[0]).toContain("tmax=9");
  });

  it("raises ApiError with the backend's message on 4xx", async () => {
    const { fetcher } = stubFetch(400, { error: "zoom out of range" });
    const api = new AggregateApi("http://b", fetcher);
    await expect(api.aggregate(BOUNDS, 5)).rejects.toThrowError(ApiError);
    await expect(api.aggregate(BOUNDS, 5)).rejects.toThrow("zoom out of range");
  });

  it("rejects malformed success bodies", async () => {
    const { fetcher } = stubFetch(200, { nope: true });
    const api = new AggregateApi("http://b", fetcher);
    await expect(api.aggregate(BOUNDS, 5)).rejects.toThrow("malformed");
  });

  it("parses stats", async () => {
    const { fetcher } = stubFetch(200, { events: 3, extent: null, time: null });
    const api = new AggregateApi("http://b", fetcher);
    expect(await api.stats()).toEqual({ events: 3, extent: null, time: null });
  });
});
