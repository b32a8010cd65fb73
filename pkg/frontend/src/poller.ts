// Job state polling: a 1 second cadence, coalesced so a slow response
// never stacks concurrent requests, stopped at terminal states.

import { Api, JobView } from "./api.js";

export const POLL_INTERVAL_MS = 1000;
export const TERMINAL_STATES = ["done", "failed"];

export class JobPoller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private api: Api,
    private jobId: string,
    private onUpdate: (job: JobView) => void,
    private onError: (exc: unknown) => void = () => {},
    private intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const job = await this.api.getJob(this.jobId);
      if (TERMINAL_STATES.includes(job.state)) {
        this.stop();
      }
      this.onUpdate(job);
    } catch (exc) {
      this.stop();
      this.onError(exc);
    } finally {
      this.inFlight = false;
    }
  }
}
