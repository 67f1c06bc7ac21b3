/**
 * Minimal fixture backend for headless viewer tests: serves canned
 * /aggregate and /stats responses, records every request, and can delay
 * individual responses to force out-of-order completion.
 */

import { createServer, type Server } from "node:http";
import type { AddressInfo } from "node:net";

export interface RecordedRequest {
  path: string;
  params: URLSearchParams;
}

export interface FixtureOptions {
  /** Return a delay in ms for a request (0 = immediate). */
  delayFor?: (params: URLSearchParams) => number;
}

const FIXTURE_CLUSTERS = [
  { lat: 11.25, lon: 11.25, count: 2 },
  { lat: 19.6875, lon: 19.6875, count: 1 },
];

export class FixtureServer {
  readonly requests: RecordedRequest[] = [];
  private server: Server | null = null;
  private options: FixtureOptions;

  constructor(options: FixtureOptions = {}) {
    this.options = options;
  }

  setOptions(options: FixtureOptions): void {
    this.options = options;
  }

  get aggregateRequests(): RecordedRequest[] {
    return this.requests.filter((r) => r.path === "/aggregate");
  }

  async start(): Promise<string> {
    this.server = createServer((req, res) => {
      const url = new URL(req.url ?? "/", "http://localhost");
      this.requests.push({ path: url.pathname, params: url.searchParams });

      const respond = (body: unknown) => {
        res.writeHead(200, { "content-type": "application/json" });
        res.end(JSON.stringify(body));
      };

      if (url.pathname === "/stats") {
        respond({
          events: 3,
          extent: { minLat: 10, minLon: 10, maxLat: 20, maxLon: 20 },
          time: { tmin: 1000, tmax: 3000 },
        });
        return;
      }
      if (url.pathname === "/aggregate") {
        const zoom = Number(url.searchParams.get("zoom"));
        const body = {
          zoom,
          separation: 90 / 2 ** zoom,
          clusters: FIXTURE_CLUSTERS,
          total: 3,
        };
        const delay = this.options.delayFor?.(url.searchParams) ?? 0;
        if (delay > 0) {
          setTimeout(() => respond(body), delay);
        } else {
          respond(body);
        }
        return;
      }
      res.writeHead(404).end();
    });
    await new Promise<void>((resolve) => this.server!.listen(0, "127.0.0.1", resolve));
    const address = this.server!.address() as AddressInfo;
    return `http://127.0.0.1:${address.port}`;
  }

  async stop(): Promise<void> {
    if (!this.server) return;
    await new Promise<void>((resolve, reject) =>
      this.server!.close((err) => (err ? reject(err) : resolve()))
    );
    this.server = null;
  }
}
