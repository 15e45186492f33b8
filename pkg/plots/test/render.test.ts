import { mkdtempSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { REQUIRED_COLUMNS } from "../src/csv.js";
import { buildChart, render } from "../src/render.js";
import { parseBenchCsv } from "../src/csv.js";

const HEADER = REQUIRED_COLUMNS.join(",");

interface RowOverrides {
  [key: string]: string | number;
}

function row(overrides: RowOverrides): string {
  const defaults: RowOverrides = {
    app: "poisson",
    mode: "weak",
    executor: "sequential",
    collective: "tree",
    ranks: 1,
    workers: 1,
    global_size: 65536,
    per_rank_size: 65536,
    run: 3,
    metric: "iteration_time",
    value: 0.1,
    unit: "s",
    mean: 0.1,
    median: 0.1,
    min: 0.09,
    max: 0.11,
    ci95: 0.005,
    count: 15,
    p2p_msgs: 0,
    coll_msg_ops: 0,
    coll_rounds: 0,
  };
  const merged = { ...defaults, ...overrides };
  return REQUIRED_COLUMNS.map((c) => String(merged[c])).join(",");
}

function writeCsv(lines: string[]): string {
  const dir = mkdtempSync(join(tmpdir(), "plots-"));
  const path = join(dir, "bench.csv");
  writeFileSync(path, [HEADER, ...lines].join("\n") + "\n", "utf-8");
  return path;
}

function weakCsv(): string {
  return writeCsv([
    row({ ranks: 1, global_size: 65536, value: 0.1, mean: 0.1 }),
    row({ ranks: 2, global_size: 131072, value: 0.11, mean: 0.11 }),
    row({ ranks: 4, global_size: 262144, value: 0.12, mean: 0.12 }),
  ]);
}

function strongCsv(executors: string[] = ["sequential"]): string {
  const lines: string[] = [];
  for (const executor of executors) {
    for (const [ranks, value] of [[1, 0.8], [2, 0.45], [4, 0.26]] as const) {
      lines.push(row({
        mode: "strong", executor, ranks,
        global_size: 65536, per_rank_size: 65536 / ranks, value, mean: value,
      }));
    }
  }
  return writeCsv(lines);
}

function sweepCsv(): string {
  return writeCsv([
    row({ mode: "size_sweep", global_size: 4096, value: 0.01, mean: 0.01 }),
    row({ mode: "size_sweep", global_size: 8192, value: 0.021, mean: 0.021 }),
    row({ mode: "size_sweep", global_size: 16384, value: 0.044, mean: 0.044 }),
  ]);
}

describe("render smoke", () => {
  it.each([
    ["weak", weakCsv],
    ["strong", strongCsv],
    ["size_sweep", sweepCsv],
  ] as const)("produces a nonzero %s image", (kind, make) => {
    const input = typeof make === "function" ? make() : make;
    const output = input.replace("bench.csv", `${kind}.svg`);
    render({ input, kind, output });
    expect(statSync(output).size).toBeGreaterThan(0);
    expect(readFileSync(output, "utf-8")).toContain("<svg");
  });

  it("leaves the input CSV byte-identical", () => {
    const input = weakCsv();
    const before = readFileSync(input);
    render({ input, kind: "weak", output: input.replace(".csv", ".svg") });
    expect(readFileSync(input).equals(before)).toBe(true);
  });

  it("is deterministic for fixed input", () => {
    const input = strongCsv();
    const a = input.replace(".csv", "-a.svg");
    const b = input.replace(".csv", "-b.svg");
    render({ input, kind: "strong", output: a });
    render({ input, kind: "strong", output: b });
    expect(readFileSync(a, "utf-8")).toBe(readFileSync(b, "utf-8"));
  });
});

describe("ideal lines", () => {
  it("anchors the strong-scaling ideal at the single-rank point", () => {
    const input = strongCsv();
    const output = input.replace(".csv", ".svg");
    render({ input, kind: "strong", output });
    const svg = readFileSync(output, "utf-8");
    const ideal = svg.match(/<polyline class="ideal" points="([^"]+)"/);
    expect(ideal).not.toBeNull();
    const firstIdealPoint = ideal![1].split(" ")[0];
    const circle = svg.match(/<circle class="pt"[^>]*cx="([^"]+)" cy="([^"]+)"/);
    expect(circle).not.toBeNull();
    expect(firstIdealPoint).toBe(`${circle![1]},${circle![2]}`);
  });

  it("computes the 1/P reference from the anchor", () => {
    const rows = parseBenchCsv(strongCsv());
    const chart = buildChart(rows, "strong");
    const ideal = chart.ideals[0].points;
    expect(ideal[0].y).toBeCloseTo(0.8, 12);
    expect(ideal[1].y).toBeCloseTo(0.4, 12);
    expect(ideal[2].y).toBeCloseTo(0.2, 12);
  });

  it("uses a flat ideal for weak scaling", () => {
    const rows = parseBenchCsv(weakCsv());
    const chart = buildChart(rows, "weak");
    for (const point of chart.ideals[0].points) {
      expect(point.y).toBe(0.1);
    }
  });
});

describe("series grouping", () => {
  it("labels one legend entry per executor", () => {
    const input = strongCsv(["sequential", "async"]);
    const output = input.replace(".csv", ".svg");
    render({ input, kind: "strong", output });
    const svg = readFileSync(output, "utf-8");
    const legends = [...svg.matchAll(/<text class="legend"[^>]*>([^<]+)</g)].map(
      (m) => m[1],
    );
    expect(legends).toEqual(["async+tree", "sequential+tree"]);
  });
});

describe("errors", () => {
  it("names a missing column", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const path = join(dir, "broken.csv");
    const columns = REQUIRED_COLUMNS.filter((c) => c !== "ci95");
    writeFileSync(path, columns.join(",") + "\n", "utf-8");
    expect(() =>
      render({ input: path, kind: "weak", output: join(dir, "x.svg") }),
    ).toThrow(/missing column 'ci95'/);
  });

  it("rejects a kind absent from the CSV", () => {
    expect(() =>
      render({
        input: weakCsv(),
        kind: "strong",
        output: join(tmpdir(), "never.svg"),
      }),
    ).toThrow(/no 'strong' data rows/);
  });
});
