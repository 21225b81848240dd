/**
 * Typed client for the chartsift HTTP service.
 *
 * The validation round must never see which model produced a ranking, so
 * `rank` exposes a `blind` flag that the service honors by omitting the
 * model identity (and probability) from the response body.
 */

export interface HierarchyNode {
  id: string;
  name: string;
  description: string;
  parent: string | null;
  children: string[];
  codes: string[];
  depth: number;
}

export interface CustomCategory {
  id: string;
  name: string;
  description: string;
}

export interface HierarchyResponse {
  nodes: HierarchyNode[];
  custom: CustomCategory[];
  top_level: string[];
}

export interface Report {
  id: string;
  kind: string;
  timestamp: number;
  text: string;
}

export interface RankedSentence {
  sentence: string;
  fingerprint: string;
  report_id: string;
  report_timestamp: number;
  sentence_index: number;
  score: number;
  percentile: number;
}

export interface RankResponse {
  sentences: RankedSentence[];
  model?: string;
  probability?: number;
}

export type ModelChoice =
  | "tfidf"
  | "contextual"
  | "indicator"
  | "description"
  | "hierarchy";

export type AnnotationRound = "reference" | "validation";

export interface RankRequest {
  patient_id: string;
  time_point: number;
  query: { category_id?: string; text?: string };
  model: ModelChoice;
  top_k: number;
  blind?: boolean;
}

export interface AnnotationRecord {
  id?: string;
  annotator: string;
  patient_id: string;
  time_point: number;
  query: string;
  fingerprint: string;
  report_id?: string | null;
  relevant: boolean;
  round: AnnotationRound;
  query_description?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class Client {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body?.detail === "string" ? body.detail : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  getHierarchy(): Promise<HierarchyResponse> {
    return this.request("/hierarchy");
  }

  addCustomCategory(name: string, description: string): Promise<CustomCategory> {
    return this.request("/hierarchy/custom", {
      method: "POST",
      body: JSON.stringify({ name, description }),
    });
  }

  async getReports(
    patientId: string,
    opts: { before?: number; after?: number } = {},
  ): Promise<Report[]> {
    const params = new URLSearchParams();
    if (opts.before !== undefined) params.set("before", String(opts.before));
    if (opts.after !== undefined) params.set("after", String(opts.after));
    const suffix = params.toString() ? `?${params}` : "";
    const body = await this.request<{ reports: Report[] }>(
      `/patients/${encodeURIComponent(patientId)}/reports${suffix}`,
    );
    return body.reports;
  }

  rank(req: RankRequest): Promise<RankResponse> {
    return this.request("/rank", { method: "POST", body: JSON.stringify(req) });
  }

  postAnnotation(record: AnnotationRecord): Promise<{ id: string }> {
    return this.request("/annotations", {
      method: "POST",
      body: JSON.stringify(record),
    });
  }

  async getAnnotations(round?: AnnotationRound): Promise<AnnotationRecord[]> {
    const suffix = round ? `?round=${round}` : "";
    const body = await this.request<{ annotations: AnnotationRecord[] }>(
      `/annotations${suffix}`,
    );
    return body.annotations;
  }
}
