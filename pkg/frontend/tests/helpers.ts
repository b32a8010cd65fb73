// Shared fetch stub: routes requests to canned responses and records
// every call so tests can assert on exact requests.

import { vi } from "vitest";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
  contentType: string | null;
}

export interface FetchStub {
  calls: RecordedCall[];
  respond(matcher: string | RegExp, status: number, body: unknown): void;
  respondRaw(matcher: string | RegExp, status: number, text: string): void;
  restore(): void;
}

interface Route {
  matcher: string | RegExp;
  status: number;
  body: unknown;
  raw: boolean;
}

function headerValue(headers: HeadersInit | undefined, name: string): string | null {
  if (!headers) return null;
  if (headers instanceof Headers) return headers.get(name);
  if (Array.isArray(headers)) {
    const hit = headers.find(([key]) => key.toLowerCase() === name);
    return hit ? hit[1] : null;
  }
  for (const [key, value] of Object.entries(headers)) {
    if (key.toLowerCase() === name) return value;
  }
  return null;
}

export function stubFetch(): FetchStub {
  const routes: Route[] = [];
  const calls: RecordedCall[] = [];
  const original = globalThis.fetch;

  globalThis.fetch = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    let body: unknown = init?.body ?? null;
    if (typeof body === "string") {
      try {
        body = JSON.parse(body);
      } catch {
        // leave as string
      }
    }
    calls.push({ url, method, body, contentType: headerValue(init?.headers, "content-type") });
    const route = routes.find((r) =>
      typeof r.matcher === "string" ? url.includes(r.matcher) : r.matcher.test(url));
    if (!route) {
      return new Response(JSON.stringify({ detail: `no stub for ${url}` }), { status: 500 });
    }
    if (route.raw) {
      return new Response(route.body as string, {
        status: route.status,
        headers: { "content-type": "text/plain" },
      });
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;

  return {
    calls,
    respond(matcher, status, body) {
      routes.push({ matcher, status, body, raw: false });
    },
    respondRaw(matcher, status, text) {
      routes.push({ matcher, status, body: text, raw: true });
    },
    restore() {
      globalThis.fetch = original;
    },
  };
}

export function flushAsync(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export const SAMPLE_RESULTS = {
  job_id: "abc123",
  level: 2,
  threshold: 0.75,
  total: 4,
  items: [
    { crop_id: "c1", distance: 0.2, prior: "keyword", final: "keyword",
      changed: false, image_url: "/images/c1" },
    { crop_id: "c2", distance: 0.9, prior: "keyword", final: "non-keyword",
      changed: true, image_url: "/images/c2" },
    { crop_id: "c3", distance: 0.5, prior: "non-keyword", final: "keyword",
      changed: true, image_url: "/images/c3" },
    { crop_id: "c4", distance: 1.4, prior: "non-keyword", final: "non-keyword",
      changed: false, image_url: "/images/c4" },
  ],
};

export const SAMPLE_DENSITY = {
  class: "circle",
  level: 3,
  bin_edges: [0.0, 0.5, 1.0, 1.5, 2.0],
  keyword_counts: [5, 3, 0, 0],
  other_counts: [0, 1, 4, 2],
  sample_count: 15,
  markers: { fp0: 0.4, fn0: 1.1, threshold: 0.75 },
};
