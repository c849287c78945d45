// Thin typed client over the monitoring service's HTTP/JSON API.
// Mutations carry the analyst token header; errors surface the service's
// {code, message} payload so the UI can show them verbatim.

import type {
  CaseDetail,
  CaseRecord,
  CasesPage,
  ClusterView,
  PointsPage,
  RunDetail,
  RunSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface PointsQuery {
  granularity: string;
  screened?: boolean;
  page?: number;
  pageSize?: number;
  sample?: number;
  sampleSeed?: number;
}

export interface CasesQuery {
  alert?: string;
  disposition?: string;
  page?: number;
  pageSize?: number;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    public token: string = "",
    private fetcher: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetcher(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "unreachable", `service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON body; fall through with the status line only
    }
    if (!response.ok) {
      const payload = body as { code?: string; message?: string } | null;
      throw new ApiError(
        response.status,
        payload?.code ?? `http_${response.status}`,
        payload?.message ?? response.statusText,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        "X-Analyst-Token": this.token,
      },
      body: JSON.stringify(payload),
    });
  }

  listRuns(): Promise<{ runs: RunSummary[] }> {
    return this.request("/runs");
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.request(`/runs/${encodeURIComponent(runId)}`);
  }

  getPoints(runId: string, query: PointsQuery): Promise<PointsPage> {
    const params = new URLSearchParams({ granularity: query.granularity });
    if (query.screened !== undefined) params.set("screened", String(query.screened));
    if (query.page !== undefined) params.set("page", String(query.page));
    if (query.pageSize !== undefined) params.set("page_size", String(query.pageSize));
    if (query.sample !== undefined) params.set("sample", String(query.sample));
    if (query.sampleSeed !== undefined) params.set("sample_seed", String(query.sampleSeed));
    return this.request(`/runs/${encodeURIComponent(runId)}/points?${params}`);
  }

  getClusters(runId: string, granularity: string): Promise<ClusterView> {
    const params = new URLSearchParams({ granularity });
    return this.request(`/runs/${encodeURIComponent(runId)}/clusters?${params}`);
  }

  labelCluster(
    runId: string,
    cluster: number,
    granularity: string,
    label: "suspicious" | "normal",
  ): Promise<{ granularity: string; cluster: number; label: string }> {
    return this.post(`/runs/${encodeURIComponent(runId)}/clusters/${cluster}/label`, {
      label,
      granularity,
    });
  }

  train(runId: string, createdAt = ""): Promise<{ models: Record<string, string> }> {
    return this.post(`/runs/${encodeURIComponent(runId)}/train`, { created_at: createdAt });
  }

  getCases(runId: string, query: CasesQuery = {}): Promise<CasesPage> {
    const params = new URLSearchParams();
    if (query.alert) params.set("alert", query.alert);
    if (query.disposition) params.set("disposition", query.disposition);
    if (query.page !== undefined) params.set("page", String(query.page));
    if (query.pageSize !== undefined) params.set("page_size", String(query.pageSize));
    const suffix = params.size ? `?${params}` : "";
    return this.request(`/runs/${encodeURIComponent(runId)}/cases${suffix}`);
  }

  getCase(runId: string, caseId: string): Promise<CaseDetail> {
    return this.request(
      `/runs/${encodeURIComponent(runId)}/cases/${encodeURIComponent(caseId)}`,
    );
  }

  setDisposition(
    runId: string,
    caseId: string,
    disposition: string,
    note: string,
  ): Promise<CaseRecord> {
    return this.post(
      `/runs/${encodeURIComponent(runId)}/cases/${encodeURIComponent(caseId)}/disposition`,
      { disposition, note },
    );
  }

  investigate(
    runId: string,
    customerId: string,
    date: string,
    fundId?: string,
  ): Promise<CaseRecord> {
    return this.post(`/runs/${encodeURIComponent(runId)}/investigate`, {
      customer_id: customerId,
      fund_id: fundId || null,
      date,
    });
  }
}
