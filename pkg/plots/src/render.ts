import { writeFileSync } from "node:fs";
import { BenchRow, parseBenchCsv, SchemaError } from "./csv.js";
import { ChartSpec, ErrorBar, IdealLine, renderChart, Series } from "./svg.js";

export type FigureKind = "size_sweep" | "strong" | "weak";

export const FIGURE_KINDS: FigureKind[] = ["size_sweep", "strong", "weak"];

export interface PlotSpec {
  input: string;
  kind: FigureKind;
  output: string;
}

function seriesKey(row: BenchRow): string {
  return `${row.executor}+${row.collective}`;
}

function xOf(row: BenchRow, kind: FigureKind): number {
  return kind === "size_sweep" ? row.globalSize : row.ranks;
}

/**
 * Error bars follow each application's reporting convention: the Poisson
 * rows carry the 95% CI of the mean, the hydro rows min/max over runs.
 */
function barOf(row: BenchRow, kind: FigureKind): ErrorBar {
  const x = xOf(row, kind);
  if (row.app === "poisson") {
    return { x, lo: row.value - row.ci95, hi: row.value + row.ci95 };
  }
  return { x, lo: row.min, hi: row.max };
}

function idealFor(kind: FigureKind, label: string, points: { x: number; y: number }[]): IdealLine {
  const anchor = points[0];
  const ideal = points.map((p) => {
    if (kind === "strong") {
      return { x: p.x, y: (anchor.y * anchor.x) / p.x }; // 1/P from P=1
    }
    if (kind === "weak") {
      return { x: p.x, y: anchor.y }; // flat
    }
    return { x: p.x, y: (anchor.y * p.x) / anchor.x }; // linear in size
  });
  return { label: `ideal ${label}`, points: ideal };
}

const TITLES: Record<FigureKind, string> = {
  size_sweep: "Problem-size scaling of one iteration",
  strong: "Strong scaling of one iteration",
  weak: "Weak scaling of one iteration",
};

export function buildChart(rows: BenchRow[], kind: FigureKind): ChartSpec {
  const data = rows.filter(
    (r) => r.mode === kind && r.metric === "iteration_time",
  );
  if (data.length === 0) {
    throw new SchemaError(`no '${kind}' data rows present in the CSV`);
  }
  const groups = new Map<string, BenchRow[]>();
  for (const row of data) {
    const key = seriesKey(row);
    const bucket = groups.get(key) ?? [];
    bucket.push(row);
    groups.set(key, bucket);
  }
  const series: Series[] = [];
  const ideals: IdealLine[] = [];
  for (const [label, bucket] of [...groups.entries()].sort()) {
    bucket.sort((a, b) => xOf(a, kind) - xOf(b, kind));
    const points = bucket.map((row) => ({ x: xOf(row, kind), y: row.value }));
    series.push({
      label,
      points,
      bars: bucket.map((row) => barOf(row, kind)),
    });
    ideals.push(idealFor(kind, label, points));
  }
  return {
    title: TITLES[kind],
    xLabel: kind === "size_sweep" ? "problem size (cells)" : "simulated ranks",
    yLabel: "iteration runtime (s)",
    series,
    ideals,
  };
}

/** Render one figure; the input CSV is only ever read. */
export function render(spec: PlotSpec): void {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new Error(`unknown figure kind '${spec.kind}'`);
  }
  const rows = parseBenchCsv(spec.input);
  const chart = buildChart(rows, spec.kind);
  writeFileSync(spec.output, renderChart(chart), "utf-8");
}
