// Console round trip against the real service: label a cluster, retrain,
// work the top queue case, record an Exchange disposition, then verify every
// state change survives a reload and landed in knowledge.ndjson, and that
// the degrees the console displays equal the CLI's investigate output.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { formatDegree } from "../src/format.js";

const PY = process.env.PYTHON ?? "python3";
const PORT = 8761 + Math.floor(Math.random() * 100);
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = "itest-token";

let workdir: string;
let runsDir: string;
let server: ChildProcess | null = null;
let truth: Record<string, { kind: string; dates: string[] }>;

function cli(args: string[]): string {
  return execFileSync(PY, ["-m", "fundwatch.cli", ...args], {
    encoding: "utf-8",
    stdio: ["ignore", "pipe", "pipe"],
  });
}

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/runs`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up in 30s");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "fundwatch-itest-"));
  const dataDir = join(workdir, "data");
  runsDir = join(workdir, "runs");
  cli([
    "gen",
    "--customers", "300",
    "--inject", "rapid:5",
    "--inject", "exchange:3",
    "--seed", "21",
    "-o", dataDir,
  ]);
  cli([
    "run-batch",
    "--in", join(dataDir, "transactions.csv"),
    "--out", runsDir,
    "--run-id", "itest",
    "--cycles", "600",
    "--created-at", "2001-01-01T00:00:00Z",
  ]);
  truth = JSON.parse(readFileSync(join(dataDir, "ground_truth.json"), "utf-8"));

  server = spawn(PY, [
    "-m", "fundwatch.cli",
    "serve",
    "--runs", runsDir,
    "--port", String(PORT),
    "--token", TOKEN,
  ], { stdio: "ignore" });
  await waitForService();
});

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("console round trip against the live service", () => {
  it("label, train, triage, dispose; all durable and CLI-consistent", async () => {
    const api = new ApiClient(BASE, TOKEN);

    const runs = await api.listRuns();
    expect(runs.runs.map((r) => r.run_id)).toEqual(["itest"]);

    // label the second-ranked Week cluster suspicious
    const clusters = await api.getClusters("itest", "Week");
    const target = clusters.suspicion_ranking[1];
    await api.labelCluster("itest", target, "Week", "suspicious");
    const relabeled = await api.getClusters("itest", "Week");
    expect(relabeled.labels[String(target)]).toBe("suspicious");
    expect(relabeled.suspicious).toBe(target);

    // retrain with the label in force
    const trained = await api.train("itest", "2001-02-02T00:00:00Z");
    expect(Object.keys(trained.models).sort()).toEqual(["Day", "Month", "Week"]);

    // investigate an injected customer; console-visible degrees must equal the CLI's
    const customer = Object.keys(truth).sort()[0];
    const date = truth[customer].dates[truth[customer].dates.length - 1];
    const record = await api.investigate("itest", customer, date);
    const cliCase = JSON.parse(
      cli(["investigate", "--runs", runsDir, "--run", "itest", "--customer", customer, "--date", date]),
    );
    expect(record.degrees).toEqual(cliCase.degrees);
    for (const gran of Object.keys(record.degrees)) {
      expect(formatDegree(record.degrees[gran])).toBe(formatDegree(cliCase.degrees[gran]));
    }

    // the queue is ranked; open the top case
    const queue = await api.getCases("itest");
    expect(queue.total).toBeGreaterThan(0);
    const degreesInOrder = queue.cases.map((c) => c.max_degree);
    expect([...degreesInOrder].sort((a, b) => b - a)).toEqual(degreesInOrder);
    const top = queue.cases[0];
    const detail = await api.getCase("itest", top.case_id);
    expect(detail.timeline.length).toBeGreaterThan(0);

    // record an Exchange disposition with a long analyst note
    const note = "confirmed benign sub-fund exchange ".repeat(15).slice(0, 500);
    const updated = await api.setDisposition("itest", top.case_id, "Exchange", note);
    expect(updated.disposition).toBe("Exchange");
    expect(updated.note).toBe(note);

    // reload: a fresh client sees every state change
    const fresh = new ApiClient(BASE, TOKEN);
    const caseAgain = await fresh.getCase("itest", top.case_id);
    expect(caseAgain.disposition).toBe("Exchange");
    expect(caseAgain.note).toBe(note);
    const clustersAgain = await fresh.getClusters("itest", "Week");
    expect(clustersAgain.labels[String(target)]).toBe("suspicious");
    const exchangeOnly = await fresh.getCases("itest", { disposition: "Exchange" });
    expect(exchangeOnly.cases.map((c) => c.case_id)).toContain(top.case_id);

    // every mutation is in the knowledge log
    const knowledge = readFileSync(join(runsDir, "itest", "knowledge.ndjson"), "utf-8")
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line));
    const kinds = knowledge.map((k) => k.kind);
    expect(kinds).toContain("cluster_label");
    expect(kinds).toContain("disposition");
    expect(kinds.filter((k) => k === "trained").length).toBeGreaterThanOrEqual(6); // batch + retrain
    const labelEvent = knowledge.find((k) => k.kind === "cluster_label");
    expect(labelEvent.payload).toEqual({ granularity: "Week", cluster: target, label: "suspicious" });
    const dispositionEvent = knowledge.find((k) => k.kind === "disposition");
    expect(dispositionEvent.payload.case_id).toBe(top.case_id);

    // the Exchange-disposed pair is excluded from positives on the next train
    const retrained = await api.train("itest", "2001-03-03T00:00:00Z");
    expect(Object.keys(retrained.models).length).toBe(3);
    const knowledgeAfter = readFileSync(join(runsDir, "itest", "knowledge.ndjson"), "utf-8")
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line));
    const lastTrained = knowledgeAfter.filter((k) => k.kind === "trained").slice(-3);
    for (const event of lastTrained) {
      expect(event.payload.excluded_pairs).toContain(`${top.customer_id}|${top.fund_id}`);
    }
  });
});
