// Presentation helpers only: these format values the API returned, they
// never derive new quantities from them.

const CLUSTER_PALETTE = [
  "#d62728",
  "#1f77b4",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#e377c2",
];

export function formatDegree(value: number): string {
  return value.toFixed(4);
}

export function formatRatio(value: number): string {
  return value.toFixed(2);
}

export function formatAmount(value: number): string {
  return value.toLocaleString("en-US", { minimumFractionDigits: 2, maximumFractionDigits: 2 });
}

export function alertClass(level: string): string {
  switch (level) {
    case "Alert":
      return "badge badge-alert";
    case "Review":
      return "badge badge-review";
    default:
      return "badge badge-none";
  }
}

export function clusterColor(index: number | null): string {
  if (index === null || index < 0) return "#999999";
  return CLUSTER_PALETTE[index % CLUSTER_PALETTE.length];
}

/** 1-based position of a cluster in the service's suspicion ranking. */
export function suspicionRank(ranking: number[], cluster: number): number {
  const at = ranking.indexOf(cluster);
  return at < 0 ? ranking.length + 1 : at + 1;
}
