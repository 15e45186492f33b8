import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** Fixed header of the benchmark CSV, in emission order. */
export const REQUIRED_COLUMNS = [
  "app",
  "mode",
  "executor",
  "collective",
  "ranks",
  "workers",
  "global_size",
  "per_rank_size",
  "run",
  "metric",
  "value",
  "unit",
  "mean",
  "median",
  "min",
  "max",
  "ci95",
  "count",
  "p2p_msgs",
  "coll_msg_ops",
  "coll_rounds",
] as const;

export interface BenchRow {
  app: string;
  mode: string;
  executor: string;
  collective: string;
  ranks: number;
  workers: number;
  globalSize: number;
  perRankSize: number;
  runs: number;
  metric: string;
  value: number;
  unit: string;
  mean: number;
  median: number;
  min: number;
  max: number;
  ci95: number;
  count: number;
  p2pMsgs: number;
  collMsgOps: number;
  collRounds: number;
}

export class SchemaError extends Error {}

/** Parse a benchmark CSV, validating the fixed schema. */
export function parseBenchCsv(path: string): BenchRow[] {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`cannot parse ${path}: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!fields.includes(column)) {
      throw new SchemaError(`missing column '${column}' in ${path}`);
    }
  }
  return parsed.data.map((raw) => ({
    app: raw.app,
    mode: raw.mode,
    executor: raw.executor,
    collective: raw.collective,
    ranks: Number(raw.ranks),
    workers: Number(raw.workers),
    globalSize: Number(raw.global_size),
    perRankSize: Number(raw.per_rank_size),
    runs: Number(raw.run),
    metric: raw.metric,
    value: Number(raw.value),
    unit: raw.unit,
    mean: Number(raw.mean),
    median: Number(raw.median),
    min: Number(raw.min),
    max: Number(raw.max),
    ci95: Number(raw.ci95),
    count: Number(raw.count),
    p2pMsgs: Number(raw.p2p_msgs),
    collMsgOps: Number(raw.coll_msg_ops),
    collRounds: Number(raw.coll_rounds),
  }));
}
