// Typed client for the curation service. Every UI field is sourced
// from one of these payloads; nothing is computed client-side.

export interface JobView {
  id: string;
  keyword: string;
  count: number;
  level: number;
  state: string;
  progress: Record<string, number>;
  error: string | null;
  created_at: string;
}

export interface ResultItem {
  crop_id: string;
  distance: number;
  prior: string;
  final: string;
  changed: boolean;
  image_url: string;
}

export interface ResultsPage {
  job_id: string;
  level: number;
  threshold: number;
  total: number;
  items: ResultItem[];
}

export interface ClassRow {
  class: string;
  anchor: boolean;
  profile: boolean;
  profile_stale: boolean;
}

export interface ClassList {
  classes: ClassRow[];
  default_level: number;
}

export interface DensityMarkers {
  fp0: number;
  fn0: number;
  threshold: number;
}

export interface DensityPayload {
  class: string;
  level: number;
  bin_edges: number[];
  keyword_counts: number[];
  other_counts: number[];
  sample_count: number;
  markers: DensityMarkers;
}

export interface ThresholdProfile {
  class: string;
  fp0: number;
  fn0: number;
  ladder: Record<string, number>;
  degenerate: boolean;
  sample_count: number;
}

export interface CompareReport {
  metric: string;
  classes: string[];
  methods: string[];
  values: Record<string, Record<string, number | null>>;
  means: Record<string, number | null>;
}

export interface AnchorReceipt {
  class: string;
  sha: string;
  changed: boolean;
  profile_stale: boolean;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && body.detail) {
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, detail);
}

export interface ResultsQuery {
  level?: number;
  limit?: number;
  offset?: number;
}

export interface Api {
  submitJob(keyword: string, count: number, level: number): Promise<{ job_id: string }>;
  getJob(jobId: string): Promise<JobView>;
  getResults(jobId: string, query?: ResultsQuery): Promise<ResultsPage>;
  listClasses(): Promise<ClassList>;
  putAnchor(className: string, bytes: ArrayBuffer | Uint8Array): Promise<AnchorReceipt>;
  calibrate(className: string): Promise<ThresholdProfile>;
  density(className: string, bins?: number, level?: number): Promise<DensityPayload>;
  compareReport(): Promise<CompareReport>;
}

export function createApi(base = ""): Api {
  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(base + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return response.json() as Promise<T>;
  }

  return {
    submitJob(keyword, count, level) {
      return request("/jobs", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ keyword, count, level }),
      });
    },
    getJob(jobId) {
      return request(`/jobs/${jobId}`);
    },
    getResults(jobId, query = {}) {
      const params = new URLSearchParams();
      if (query.level !== undefined) params.set("level", String(query.level));
      if (query.limit !== undefined) params.set("limit", String(query.limit));
      if (query.offset !== undefined) params.set("offset", String(query.offset));
      const suffix = params.size ? `?${params.toString()}` : "";
      return request(`/jobs/${jobId}/results${suffix}`);
    },
    listClasses() {
      return request("/classes");
    },
    putAnchor(className, bytes) {
      return request(`/anchors/${encodeURIComponent(className)}`, {
        method: "PUT",
        headers: { "content-type": "application/octet-stream" },
        body: bytes as BodyInit,
      });
    },
    calibrate(className) {
      return request(`/calibrate/${encodeURIComponent(className)}`, { method: "POST" });
    },
    density(className, bins = 20, level?) {
      const params = new URLSearchParams({ bins: String(bins) });
      if (level !== undefined) params.set("level", String(level));
      return request(`/classes/${encodeURIComponent(className)}/density?${params.toString()}`);
    },
    compareReport() {
      return request("/reports/compare");
    },
  };
}
