// Console wiring: cluster explorer, case queue, case detail, what-if panel.
// Every number on screen comes straight from an API field; ordering comes
// from the API's own rankings. Mutations happen only on explicit clicks.

import { ApiClient, ApiError } from "./api.js";
import { alertClass, clusterColor, formatAmount, formatDegree, formatRatio, suspicionRank } from "./format.js";
import { drawScatter } from "./scatter.js";
import { initialState, reduce, type Action, type ViewState } from "./state.js";
import type { CaseDetail, CaseRecord, ClusterView, PointsPage, RunSummary } from "./types.js";

export interface AppOptions {
  pollMs?: number;
  sampleSize?: number;
  sampleSeed?: number;
}

type Attrs = Record<string, string>;

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export class App {
  state: ViewState = initialState;
  private doc: Document;
  private timer: ReturnType<typeof setInterval> | null = null;

  private banner!: HTMLElement;
  private runSelect!: HTMLSelectElement;
  private granTabs!: HTMLElement;
  private clusterPanel!: HTMLElement;
  private queuePanel!: HTMLElement;
  private detailPanel!: HTMLElement;
  private whatIfResult!: HTMLElement;

  private runs: RunSummary[] = [];
  private granularities: string[] = [];

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private options: AppOptions = {},
  ) {
    this.doc = root.ownerDocument;
    this.buildSkeleton();
  }

  dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    this.renderBanner();
  }

  async start(): Promise<void> {
    await this.refreshRuns();
    this.timer = setInterval(() => {
      if (this.state.runId) void this.refreshQueue();
    }, this.options.pollMs ?? 2000);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  // -- error handling --------------------------------------------------------

  private async guard(work: () => Promise<void>): Promise<void> {
    try {
      await work();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.dispatch({
          kind: "error",
          message: `another operation is in progress (409); reload and retry: ${err.message}`,
        });
      } else if (err instanceof ApiError) {
        this.dispatch({ kind: "error", message: `${err.code}: ${err.message}` });
      } else {
        this.dispatch({ kind: "error", message: String(err) });
      }
    }
  }

  private renderBanner(): void {
    this.banner.textContent = this.state.error ?? "";
    this.banner.style.display = this.state.error ? "block" : "none";
  }

  // -- skeleton ---------------------------------------------------------------

  private buildSkeleton(): void {
    const d = this.doc;
    this.root.textContent = "";

    this.banner = el(d, "div", { class: "error-banner", "data-testid": "error-banner" });
    this.banner.style.display = "none";
    this.banner.addEventListener("click", () => this.dispatch({ kind: "clear-error" }));

    this.runSelect = el(d, "select", { "data-testid": "run-select" });
    this.runSelect.addEventListener("change", () => {
      this.dispatch({ kind: "select-run", runId: this.runSelect.value });
      void this.refreshAll();
    });

    this.granTabs = el(d, "nav", { class: "gran-tabs", "data-testid": "gran-tabs" });

    const header = el(
      d,
      "header",
      {},
      el(d, "h1", {}, "fundwatch console"),
      el(d, "label", {}, "run ", this.runSelect),
      this.granTabs,
    );

    this.clusterPanel = el(d, "section", { class: "panel", "data-testid": "cluster-panel" });
    this.queuePanel = el(d, "section", { class: "panel", "data-testid": "queue-panel" });
    this.detailPanel = el(d, "section", { class: "panel", "data-testid": "detail-panel" });

    const whatIf = this.buildWhatIf();
    const main = el(d, "main", {}, this.clusterPanel, this.queuePanel, el(d, "div", {}, this.detailPanel, whatIf));
    this.root.append(this.banner, header, main);
  }

  private buildWhatIf(): HTMLElement {
    const d = this.doc;
    const customer = el(d, "input", { placeholder: "customer id", "data-testid": "whatif-customer" });
    const fund = el(d, "input", { placeholder: "fund id (optional)", "data-testid": "whatif-fund" });
    const date = el(d, "input", { placeholder: "YYYY-MM-DD", "data-testid": "whatif-date" });
    const submit = el(d, "button", { "data-testid": "whatif-submit" }, "investigate");
    this.whatIfResult = el(d, "div", { "data-testid": "whatif-result" });
    submit.addEventListener("click", () => {
      void this.runWhatIf(customer.value.trim(), fund.value.trim(), date.value.trim());
    });
    return el(
      d,
      "section",
      { class: "panel", "data-testid": "whatif-panel" },
      el(d, "h2", {}, "what-if investigation"),
      customer,
      fund,
      date,
      submit,
      this.whatIfResult,
    );
  }

  // -- data refresh ------------------------------------------------------------

  async refreshAll(): Promise<void> {
    await Promise.all([this.refreshClusters(), this.refreshQueue()]);
    if (this.state.selectedCase) await this.refreshDetail();
  }

  async refreshRuns(): Promise<void> {
    await this.guard(async () => {
      const body = await this.api.listRuns();
      this.runs = body.runs;
      this.runSelect.textContent = "";
      for (const run of this.runs) {
        this.runSelect.append(el(this.doc, "option", { value: run.run_id }, run.run_id));
      }
      if (this.runs.length && !this.state.runId) {
        this.dispatch({ kind: "select-run", runId: this.runs[0].run_id });
      }
      if (this.state.runId) {
        this.runSelect.value = this.state.runId;
        const run = this.runs.find((r) => r.run_id === this.state.runId);
        this.granularities = run ? run.granularities : [];
        if (!this.granularities.includes(this.state.granularity) && this.granularities.length) {
          this.dispatch({ kind: "select-granularity", granularity: this.granularities[0] });
        }
        this.renderGranTabs();
        await this.refreshAll();
      }
    });
  }

  private renderGranTabs(): void {
    this.granTabs.textContent = "";
    for (const gran of this.granularities) {
      const button = el(
        this.doc,
        "button",
        { "data-testid": `gran-${gran}`, class: gran === this.state.granularity ? "tab active" : "tab" },
        gran,
      );
      button.addEventListener("click", () => {
        this.dispatch({ kind: "select-granularity", granularity: gran });
        this.renderGranTabs();
        void this.refreshClusters();
      });
      this.granTabs.append(button);
    }
  }

  async refreshClusters(): Promise<void> {
    const runId = this.state.runId;
    if (!runId) return;
    await this.guard(async () => {
      const [clusters, points] = await Promise.all([
        this.api.getClusters(runId, this.state.granularity),
        this.api.getPoints(runId, {
          granularity: this.state.granularity,
          screened: true,
          pageSize: this.options.sampleSize ?? 4000,
          sample: this.options.sampleSize ?? 4000,
          sampleSeed: this.options.sampleSeed ?? 0,
        }),
      ]);
      this.renderClusterPanel(clusters, points);
    });
  }

  private renderClusterPanel(clusters: ClusterView, points: PointsPage): void {
    const d = this.doc;
    this.clusterPanel.textContent = "";
    this.clusterPanel.append(el(d, "h2", {}, `clusters (${clusters.granularity})`));

    if (points.total === 0) {
      this.clusterPanel.append(
        el(d, "p", { "data-testid": "cluster-empty" }, "screened set is empty; nothing to label"),
      );
      return;
    }

    const canvas = el(d, "canvas", { "data-testid": "scatter", width: "460", height: "420" });
    drawScatter(
      canvas,
      points.points.map((p) => ({ x: p.delta1, y: p.delta2, cluster: p.cluster })),
      clusters.centroids,
    );
    this.clusterPanel.append(canvas);
    this.clusterPanel.append(
      el(d, "p", { class: "muted" },
        `${points.total} screened points, showing ${points.points.length} (seeded sample)`),
    );

    const legend = el(d, "ol", { class: "legend", "data-testid": "cluster-legend" });
    for (const index of clusters.suspicion_ranking) {
      const [cx, cy] = clusters.centroids[index];
      const swatch = el(d, "span", { class: "swatch" });
      swatch.style.background = clusterColor(index);
      const item = el(
        d,
        "li",
        { "data-testid": `cluster-item-${index}` },
        swatch,
        ` cluster ${index} `,
        el(d, "span", { class: "muted" },
          `rank ${suspicionRank(clusters.suspicion_ranking, index)}, ` +
          `${clusters.per_cluster_sizes[index]} pts, centre (${formatRatio(cx)}, ${formatRatio(cy)}) `),
      );
      if (index === clusters.suspicious) {
        item.append(el(d, "span", { class: "badge badge-alert", "data-testid": `suspicious-badge-${index}` }, "suspicious"));
      }
      const label = clusters.labels[String(index)];
      if (label) {
        item.append(el(d, "span", { class: "badge badge-label", "data-testid": `label-badge-${index}` }, label));
      }
      for (const verdict of ["suspicious", "normal"] as const) {
        const button = el(d, "button", { "data-testid": `label-${index}-${verdict}` }, `mark ${verdict}`);
        button.addEventListener("click", () => {
          void this.guard(async () => {
            await this.api.labelCluster(this.state.runId!, index, clusters.granularity, verdict);
            await this.refreshClusters();
          });
        });
        item.append(button);
      }
      legend.append(item);
    }
    this.clusterPanel.append(legend);

    const train = el(d, "button", { "data-testid": "train-btn" }, "train on current labels");
    const trainOut = el(d, "span", { class: "muted", "data-testid": "train-result" });
    train.addEventListener("click", () => {
      void this.guard(async () => {
        trainOut.textContent = " training...";
        const result = await this.api.train(this.state.runId!);
        trainOut.textContent =
          " trained: " +
          Object.entries(result.models)
            .map(([gran, fp]) => `${gran}=${fp.slice(0, 8)}`)
            .join(" ");
        await this.refreshQueue();
      });
    });
    this.clusterPanel.append(el(d, "div", {}, train, trainOut));
  }

  async refreshQueue(): Promise<void> {
    const runId = this.state.runId;
    if (!runId) return;
    await this.guard(async () => {
      const page = await this.api.getCases(runId, {
        alert: this.state.queueAlert || undefined,
        disposition: this.state.queueDisposition || undefined,
        pageSize: 50,
      });
      this.renderQueue(page.cases, page.total);
    });
  }

  private renderQueue(cases: CaseRecord[], total: number): void {
    const d = this.doc;
    this.queuePanel.textContent = "";
    this.queuePanel.append(el(d, "h2", {}, `case queue (${total})`));

    const alertFilter = el(d, "select", { "data-testid": "filter-alert" });
    for (const value of ["", "Alert", "Review", "None"]) {
      alertFilter.append(el(d, "option", { value }, value || "all alerts"));
    }
    alertFilter.value = this.state.queueAlert;
    alertFilter.addEventListener("change", () => {
      this.dispatch({ kind: "set-queue-filter", alert: alertFilter.value });
      void this.refreshQueue();
    });
    const dispFilter = el(d, "select", { "data-testid": "filter-disposition" });
    for (const value of ["", "Open", "Suspicious", "Cleared", "Exchange"]) {
      dispFilter.append(el(d, "option", { value }, value || "all dispositions"));
    }
    dispFilter.value = this.state.queueDisposition;
    dispFilter.addEventListener("change", () => {
      this.dispatch({ kind: "set-queue-filter", disposition: dispFilter.value });
      void this.refreshQueue();
    });
    this.queuePanel.append(el(d, "div", {}, alertFilter, " ", dispFilter));

    const list = el(d, "ul", { class: "queue", "data-testid": "case-queue" });
    // API order is the ranking (max degree descending); render as received
    for (const record of cases) {
      const item = el(
        d,
        "li",
        { "data-testid": `case-${record.case_id}`, class: this.state.selectedCase === record.case_id ? "selected" : "" },
        el(d, "span", { class: alertClass(record.alert_level) }, record.alert_level),
        ` ${record.customer_id} / ${record.fund_id} @ ${record.as_of_date} `,
        el(d, "strong", {}, formatDegree(record.max_degree)),
        ` ${record.disposition}`,
      );
      item.addEventListener("click", () => {
        this.dispatch({ kind: "select-case", caseId: record.case_id });
        void this.refreshDetail();
      });
      list.append(item);
    }
    this.queuePanel.append(list);
  }

  async refreshDetail(): Promise<void> {
    const { runId, selectedCase } = this.state;
    if (!runId || !selectedCase) return;
    await this.guard(async () => {
      const detail = await this.api.getCase(runId, selectedCase);
      this.renderDetail(detail);
      await this.refreshQueue();
    });
  }

  private renderDetail(detail: CaseDetail): void {
    const d = this.doc;
    this.detailPanel.textContent = "";
    this.detailPanel.append(
      el(d, "h2", {}, `case ${detail.case_id}`),
      el(d, "p", {},
        `${detail.customer_id} / ${detail.fund_id} @ ${detail.as_of_date} `,
        el(d, "span", { class: alertClass(detail.alert_level), "data-testid": "detail-alert" }, detail.alert_level),
        ` disposition: `,
        el(d, "span", { "data-testid": "detail-disposition" }, detail.disposition),
      ),
    );

    const degrees = el(d, "table", { class: "degrees", "data-testid": "detail-degrees" });
    for (const [gran, degree] of Object.entries(detail.degrees)) {
      degrees.append(
        el(d, "tr", {},
          el(d, "td", {}, gran),
          el(d, "td", { "data-testid": `degree-${gran}` }, formatDegree(degree))),
      );
    }
    this.detailPanel.append(degrees);

    const rationale = el(d, "ul", { "data-testid": "detail-rationale" });
    for (const line of detail.rationale) rationale.append(el(d, "li", {}, line));
    this.detailPanel.append(rationale);

    if (detail.note) {
      this.detailPanel.append(el(d, "p", { "data-testid": "detail-note" }, `note: ${detail.note}`));
    }

    const timeline = el(d, "table", { class: "timeline", "data-testid": "detail-timeline" });
    timeline.append(
      el(d, "tr", {}, el(d, "th", {}, "date"), el(d, "th", {}, "direction"),
        el(d, "th", {}, "amount"), el(d, "th", {}, "sub-fund"), el(d, "th", {}, "shares")),
    );
    for (const entry of detail.timeline) {
      timeline.append(
        el(d, "tr", {},
          el(d, "td", {}, entry.date),
          el(d, "td", {}, entry.direction),
          el(d, "td", {}, formatAmount(entry.amount)),
          el(d, "td", {}, entry.sub_fund_id ?? ""),
          el(d, "td", {}, entry.shares_value === null ? "" : formatAmount(entry.shares_value))),
      );
    }
    this.detailPanel.append(timeline);

    const select = el(d, "select", { "data-testid": "disposition-select" });
    for (const value of ["Suspicious", "Cleared", "Exchange", "Open"]) {
      select.append(el(d, "option", { value }, value));
    }
    const note = el(d, "textarea", { "data-testid": "disposition-note", placeholder: "analyst note" });
    const submit = el(d, "button", { "data-testid": "disposition-submit" }, "record disposition");
    submit.addEventListener("click", () => {
      void this.guard(async () => {
        await this.api.setDisposition(this.state.runId!, detail.case_id, select.value, note.value);
        await this.refreshDetail();
      });
    });
    this.detailPanel.append(el(d, "div", {}, select, note, submit));
  }

  private async runWhatIf(customer: string, fund: string, date: string): Promise<void> {
    const runId = this.state.runId;
    if (!runId) return;
    this.whatIfResult.textContent = "";
    try {
      const record = await this.api.investigate(runId, customer, date, fund || undefined);
      const d = this.doc;
      const degrees = el(d, "table", { "data-testid": "whatif-degrees" });
      for (const [gran, degree] of Object.entries(record.degrees)) {
        degrees.append(
          el(d, "tr", {},
            el(d, "td", {}, gran),
            el(d, "td", { "data-testid": `whatif-degree-${gran}` }, formatDegree(degree))),
        );
      }
      this.whatIfResult.append(
        el(d, "p", {},
          el(d, "span", { class: alertClass(record.alert_level), "data-testid": "whatif-alert" }, record.alert_level),
          ` ${record.rationale.join("; ")}`),
        degrees,
      );
      await this.refreshQueue();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.whatIfResult.append(
          el(this.doc, "p", { class: "inline-error", "data-testid": "whatif-notfound" }, err.message),
        );
      } else if (err instanceof ApiError) {
        this.dispatch({ kind: "error", message: `${err.code}: ${err.message}` });
      } else {
        this.dispatch({ kind: "error", message: String(err) });
      }
    }
  }
}

export function createApp(root: HTMLElement, api: ApiClient, options: AppOptions = {}): App {
  return new App(root, api, options);
}
