import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { Api, JobView } from "../src/api.js";
import { JobPoller, POLL_INTERVAL_MS } from "../src/poller.js";

function job(state: string): JobView {
  return {
    id: "abc123",
    keyword: "circle",
    count: 8,
    level: 2,
    state,
    progress: { downloaded: 0, detected: 0, scored: 0 },
    error: null,
    created_at: "2024-01-01T00:00:00Z",
  };
}

function apiReturning(states: string[]): { api: Api; calls: () => number } {
  let i = 0;
  const getJob = vi.fn(async () => job(states[Math.min(i++, states.length - 1)]));
  return { api: { getJob } as unknown as Api, calls: () => getJob.mock.calls.length };
}

describe("job polling", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("ticks once per second until the job reaches a terminal state", async () => {
    const { api, calls } = apiReturning(["crawling", "scoring", "done"]);
    const seen: string[] = [];
    const poller = new JobPoller(api, "abc123", (j) => seen.push(j.state));
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(calls()).toBe(1);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    expect(calls()).toBe(2);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    expect(calls()).toBe(3);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 5);
    expect(calls()).toBe(3);
    expect(seen).toEqual(["crawling", "scoring", "done"]);
  });

  it("coalesces ticks while a request is still in flight", async () => {
    let resolveFirst: ((j: JobView) => void) | null = null;
    let callCount = 0;
    const api = {
      getJob: async () => {
        callCount += 1;
        if (callCount === 1) {
          return new Promise<JobView>((resolve) => { resolveFirst = resolve; });
        }
        return job("done");
      },
    } as unknown as Api;
    const poller = new JobPoller(api, "abc123", () => {});
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 3);
    expect(callCount).toBe(1);
    resolveFirst!(job("scoring"));
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    expect(callCount).toBe(2);
    poller.stop();
  });

  it("stops and reports when a poll fails", async () => {
    const api = {
      getJob: async () => { throw new Error("job 'abc123' not found"); },
    } as unknown as Api;
    const errors: string[] = [];
    const poller = new JobPoller(api, "abc123", () => {}, (e) => errors.push((e as Error).message));
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(errors).toHaveLength(1);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 3);
    expect(errors).toHaveLength(1);
  });
});
