/**
 * Deterministic SVG chart builder for scaling figures: log2 x axis (ranks or
 * problem size), log10 y axis (seconds), solid data series with error bars,
 * dashed ideal-scaling references, and a text legend.  No DOM, no randomness:
 * the same inputs always produce byte-identical output.
 */

export interface Point {
  x: number;
  y: number;
}

export interface ErrorBar {
  x: number;
  lo: number;
  hi: number;
}

export interface Series {
  label: string;
  points: Point[];
  bars: ErrorBar[];
}

export interface IdealLine {
  label: string;
  points: Point[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  ideals: IdealLine[];
}

const WIDTH = 760;
const HEIGHT = 500;
const MARGIN = { left: 80, right: 30, top: 50, bottom: 60 };
const PALETTE = ["#1b6ca8", "#c0392b", "#1e8449", "#7d3c98", "#b7950b", "#2c3e50"];

const log2 = (v: number) => Math.log2(v);
const log10 = (v: number) => Math.log10(v);

function fmt(value: number): string {
  return value.toFixed(2);
}

function niceTickLabel(value: number): string {
  if (value >= 1024 && Number.isInteger(log2(value))) {
    return `2^${log2(value)}`;
  }
  if (Number.isInteger(value)) {
    return String(value);
  }
  return value.toExponential(0);
}

export function renderChart(spec: ChartSpec): string {
  const xs = new Set<number>();
  const ys: number[] = [];
  for (const s of spec.series) {
    for (const p of s.points) {
      xs.add(p.x);
      ys.push(p.y);
    }
    for (const b of s.bars) {
      if (b.lo > 0) ys.push(b.lo);
      if (b.hi > 0) ys.push(b.hi);
    }
  }
  for (const ideal of spec.ideals) {
    for (const p of ideal.points) {
      xs.add(p.x);
      ys.push(p.y);
    }
  }
  if (xs.size === 0 || ys.length === 0) {
    throw new Error("nothing to plot");
  }
  const xTicks = [...xs].sort((a, b) => a - b);
  const xLo = log2(xTicks[0]);
  const xHi = log2(xTicks[xTicks.length - 1]);
  const xSpan = xHi - xLo || 1;
  const yLo = log10(Math.min(...ys));
  const yHi = log10(Math.max(...ys));
  const ySpan = yHi - yLo || 1;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

  const px = (x: number) => MARGIN.left + ((log2(x) - xLo) / xSpan) * plotW;
  const py = (y: number) =>
    MARGIN.top + plotH - ((log10(y) - yLo) / ySpan) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${spec.title}</text>`,
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="black"/>`,
  );
  parts.push(
    `<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`,
  );
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="13">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `font-size="13" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">` +
      `${spec.yLabel}</text>`,
  );

  for (const tick of xTicks) {
    const x = px(tick);
    parts.push(
      `<line x1="${fmt(x)}" y1="${y0}" x2="${fmt(x)}" y2="${y0 + 5}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${y0 + 20}" text-anchor="middle" font-size="11">` +
        `${niceTickLabel(tick)}</text>`,
    );
  }
  const decadeLo = Math.floor(yLo);
  const decadeHi = Math.ceil(yHi);
  for (let d = decadeLo; d <= decadeHi; d += 1) {
    const value = 10 ** d;
    if (log10(value) < yLo - 1e-9 || log10(value) > yHi + 1e-9) continue;
    const y = py(value);
    parts.push(
      `<line x1="${x0 - 5}" y1="${fmt(y)}" x2="${x0}" y2="${fmt(y)}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${x0 - 9}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">` +
        `1e${d}</text>`,
    );
  }

  for (const ideal of spec.ideals) {
    const pts = ideal.points
      .map((p) => `${fmt(px(p.x))},${fmt(py(p.y))}`)
      .join(" ");
    parts.push(
      `<polyline class="ideal" points="${pts}" fill="none" stroke="#555" ` +
        `stroke-dasharray="6 4"/>`,
    );
  }

  spec.series.forEach((series, index) => {
    const color = PALETTE[index % PALETTE.length];
    for (const bar of series.bars) {
      if (!(bar.lo > 0) || !(bar.hi > 0) || bar.hi <= bar.lo) continue;
      const x = fmt(px(bar.x));
      parts.push(
        `<line x1="${x}" y1="${fmt(py(bar.lo))}" x2="${x}" y2="${fmt(py(bar.hi))}" ` +
          `stroke="${color}"/>`,
      );
    }
    const pts = series.points
      .map((p) => `${fmt(px(p.x))},${fmt(py(p.y))}`)
      .join(" ");
    parts.push(
      `<polyline class="series" points="${pts}" fill="none" stroke="${color}" ` +
        `stroke-width="1.5"/>`,
    );
    for (const p of series.points) {
      parts.push(
        `<circle class="pt" data-series="${series.label}" cx="${fmt(px(p.x))}" ` +
          `cy="${fmt(py(p.y))}" r="3.5" fill="${color}"/>`,
      );
    }
    const ly = MARGIN.top + 16 + index * 18;
    const lx = x0 + plotW - 170;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(
      `<text class="legend" x="${lx + 28}" y="${ly}" font-size="12">` +
        `${series.label}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
