// Shapes of the monitoring service's JSON responses. The console renders
// these values verbatim; it never derives ratios, degrees or alert levels.

export interface RunSummary {
  run_id: string;
  created_at: string;
  granularities: string[];
}

export interface RunDetail {
  run_id: string;
  config: Record<string, unknown>;
  models: Record<string, string>;
  cluster_labels: Record<string, string>;
}

export interface PointRow {
  point_id: string;
  customer_id: string;
  fund_id: string;
  period_index: number;
  period_label: string;
  delta1: number;
  delta2: number;
  flag: boolean;
  screened: boolean;
  cluster: number | null;
}

export interface PointsPage {
  total: number;
  page: number;
  page_size: number;
  sampled: number;
  points: PointRow[];
}

export interface ClusterView {
  granularity: string;
  centroids: [number, number][];
  per_cluster_sizes: number[];
  inertia: number;
  suspicion_ranking: number[];
  suspicious: number;
  labels: Record<string, string>;
}

export interface CaseRecord {
  case_id: string;
  run_id: string;
  customer_id: string;
  fund_id: string;
  as_of_date: string;
  degrees: Record<string, number>;
  alert_level: "None" | "Review" | "Alert";
  rationale: string[];
  disposition: "Open" | "Suspicious" | "Cleared" | "Exchange";
  note: string;
  disposed_at: string | null;
  max_degree: number;
}

export interface TimelineEntry {
  date: string;
  direction: string;
  amount: number;
  sub_fund_id: string | null;
  shares_value: number | null;
}

export interface CaseDetail extends CaseRecord {
  timeline: TimelineEntry[];
}

export interface CasesPage {
  total: number;
  page: number;
  page_size: number;
  cases: CaseRecord[];
}
