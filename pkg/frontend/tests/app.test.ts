// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { ApiError } from "../src/api.js";
import { createApp } from "../src/app.js";
import type { CaseDetail, CaseRecord, ClusterView, PointsPage } from "../src/types.js";

function makeCase(id: string, degree: number, overrides: Partial<CaseRecord> = {}): CaseRecord {
  return {
    case_id: id,
    run_id: "r1",
    customer_id: `C-${id}`,
    fund_id: "F01",
    as_of_date: "2000-05-31",
    degrees: { Day: degree },
    alert_level: degree >= 0.8 ? "Alert" : degree >= 0.5 ? "Review" : "None",
    rationale: [`Day degree ${degree}`],
    disposition: "Open",
    note: "",
    disposed_at: null,
    max_degree: degree,
    ...overrides,
  };
}

class StubApi {
  labels: Record<string, string> = {};
  cases: CaseRecord[] = [makeCase("aaa", 0.99), makeCase("bbb", 0.6)];
  trainCalls = 0;
  labelCalls: Array<[number, string, string]> = [];
  dispositions: Array<[string, string, string]> = [];
  pointsTotal = 3;
  investigateError: ApiError | null = null;

  async listRuns() {
    return { runs: [{ run_id: "r1", created_at: "", granularities: ["Day", "Week"] }] };
  }

  async getClusters(_run: string, granularity: string): Promise<ClusterView> {
    return {
      granularity,
      centroids: [
        [0.2, 0.2],
        [0.9, 0.95],
        [0.5, 0.5],
      ],
      per_cluster_sizes: [5, 3, 4],
      inertia: 0.1,
      suspicion_ranking: [1, 2, 0],
      suspicious: Object.entries(this.labels).find(([, v]) => v === "suspicious")
        ? Number(Object.entries(this.labels).find(([, v]) => v === "suspicious")![0])
        : 1,
      labels: { ...this.labels },
    };
  }

  async getPoints(): Promise<PointsPage> {
    return {
      total: this.pointsTotal,
      page: 1,
      page_size: 4000,
      sampled: this.pointsTotal,
      points: this.pointsTotal
        ? [
            { point_id: "p1", customer_id: "C1", fund_id: "F01", period_index: 1, period_label: "2000-01-01", delta1: 0.9, delta2: 0.9, flag: false, screened: true, cluster: 1 },
          ]
        : [],
    };
  }

  async labelCluster(_run: string, cluster: number, granularity: string, label: "suspicious" | "normal") {
    this.labelCalls.push([cluster, granularity, label]);
    this.labels[String(cluster)] = label;
    return { granularity, cluster, label };
  }

  async train() {
    this.trainCalls += 1;
    return { models: { Day: "fp-day-00000000", Week: "fp-week-0000000" } };
  }

  async getCases() {
    return { total: this.cases.length, page: 1, page_size: 50, cases: this.cases };
  }

  async getCase(_run: string, caseId: string): Promise<CaseDetail> {
    const found = this.cases.find((c) => c.case_id === caseId);
    if (!found) throw new ApiError(404, "not_found", "no such case");
    return {
      ...found,
      timeline: [
        { date: "2000-05-30", direction: "SUB", amount: 1000, sub_fund_id: "F01-S1", shares_value: 1100 },
        { date: "2000-05-31", direction: "RED", amount: 950, sub_fund_id: "F01-S1", shares_value: 150 },
      ],
    };
  }

  async setDisposition(_run: string, caseId: string, disposition: string, note: string) {
    this.dispositions.push([caseId, disposition, note]);
    this.cases = this.cases.map((c) =>
      c.case_id === caseId
        ? { ...c, disposition: disposition as CaseRecord["disposition"], note, disposed_at: "now" }
        : c,
    );
    return this.cases.find((c) => c.case_id === caseId)!;
  }

  async investigate(): Promise<CaseRecord> {
    if (this.investigateError) throw this.investigateError;
    return makeCase("fresh", 0.91);
  }
}

function testid(root: HTMLElement, id: string): HTMLElement {
  const node = root.querySelector(`[data-testid="${id}"]`);
  if (!node) throw new Error(`missing [data-testid=${id}]`);
  return node as HTMLElement;
}

describe("console app", () => {
  let root: HTMLElement;
  let stub: StubApi;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
    stub = new StubApi();
  });

  async function boot() {
    const app = createApp(root, stub as unknown as ApiClient, { pollMs: 3600_000 });
    await app.start();
    app.stop();
    return app;
  }

  it("renders runs, granularity tabs and the ranked cluster legend", async () => {
    await boot();
    const select = testid(root, "run-select") as HTMLSelectElement;
    expect(select.value).toBe("r1");
    expect(testid(root, "gran-Day").classList.contains("active")).toBe(true);
    const legend = testid(root, "cluster-legend");
    const order = Array.from(legend.querySelectorAll("li")).map((li) =>
      li.getAttribute("data-testid"),
    );
    expect(order).toEqual(["cluster-item-1", "cluster-item-2", "cluster-item-0"]);
    expect(legend.querySelector('[data-testid="suspicious-badge-1"]')).not.toBeNull();
  });

  it("labeling a cluster posts to the API and shows the badge after refresh", async () => {
    const app = await boot();
    (testid(root, "label-2-suspicious") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(stub.labelCalls).toEqual([[2, "Day", "suspicious"]]);
    expect(testid(root, "label-badge-2").textContent).toBe("suspicious");
    expect(testid(root, "suspicious-badge-2")).toBeTruthy();
    expect(app.state.error).toBeNull();
  });

  it("train button posts and reports fingerprints", async () => {
    await boot();
    (testid(root, "train-btn") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(stub.trainCalls).toBe(1);
    expect(testid(root, "train-result").textContent).toContain("Day=fp-day-0");
  });

  it("renders the queue in API order and opens a case detail", async () => {
    await boot();
    const rows = Array.from(testid(root, "case-queue").querySelectorAll("li"));
    expect(rows.map((r) => r.getAttribute("data-testid"))).toEqual(["case-aaa", "case-bbb"]);
    (rows[0] as HTMLElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(testid(root, "detail-alert").textContent).toBe("Alert");
    expect(testid(root, "degree-Day").textContent).toBe("0.9900");
    expect(testid(root, "detail-timeline").querySelectorAll("tr").length).toBe(3);
  });

  it("submits a disposition and re-renders the updated case", async () => {
    await boot();
    (testid(root, "case-queue").querySelector("li") as HTMLElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    const note = testid(root, "disposition-note") as HTMLTextAreaElement;
    const select = testid(root, "disposition-select") as HTMLSelectElement;
    select.value = "Exchange";
    note.value = "sub-fund switch";
    (testid(root, "disposition-submit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(stub.dispositions).toEqual([["aaa", "Exchange", "sub-fund switch"]]);
    expect(testid(root, "detail-disposition").textContent).toBe("Exchange");
    expect(testid(root, "detail-note").textContent).toContain("sub-fund switch");
  });

  it("what-if renders degrees on success", async () => {
    await boot();
    (testid(root, "whatif-customer") as HTMLInputElement).value = "C9";
    (testid(root, "whatif-date") as HTMLInputElement).value = "2000-05-31";
    (testid(root, "whatif-submit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(testid(root, "whatif-alert").textContent).toBe("Alert");
    expect(testid(root, "whatif-degree-Day").textContent).toBe("0.9100");
  });

  it("what-if shows an inline not-found instead of the global banner", async () => {
    stub.investigateError = new ApiError(404, "not_found", "unknown customer: NOPE");
    const app = await boot();
    (testid(root, "whatif-submit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(testid(root, "whatif-notfound").textContent).toContain("unknown customer");
    expect(app.state.error).toBeNull();
  });

  it("shows the reload prompt on 409 conflicts", async () => {
    const app = await boot();
    stub.setDisposition = async () => {
      throw new ApiError(409, "busy", "writer held");
    };
    (testid(root, "case-queue").querySelector("li") as HTMLElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    (testid(root, "disposition-submit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(app.state.error).toContain("reload and retry");
    const banner = testid(root, "error-banner");
    expect(banner.style.display).toBe("block");
  });

  it("empty screened set disables labeling", async () => {
    stub.pointsTotal = 0;
    await boot();
    expect(testid(root, "cluster-empty").textContent).toContain("empty");
    expect(root.querySelector('[data-testid^="label-"]')).toBeNull();
  });
});
