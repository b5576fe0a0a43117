/**
 * Minimal deterministic SVG charts: line plots and grouped bar charts.
 *
 * No timestamps, no randomness, fixed styling and fixed number formatting,
 * so rendering the same data twice yields byte-identical output.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 62, right: 16, top: 34, bottom: 46 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b"];
const DASHES = ["", "6 3", "2 2", "8 3 2 3", "4 4", "1 3"];

function fmt(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-3) {
    return value.toExponential(2).replace("e+", "e");
  }
  // up to 6 significant digits, trailing zeros trimmed
  return parseFloat(value.toPrecision(6)).toString();
}

function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step0 = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9);
       e <= Math.floor(Math.log10(hi) + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length > 0 ? ticks : [lo];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

interface Scale {
  (value: number): number;
}

function makeScale(lo: number, hi: number, outLo: number, outHi: number,
                   log: boolean): Scale {
  const a = log ? Math.log10(lo) : lo;
  const b = log ? Math.log10(hi) : hi;
  const span = b - a || 1;
  return (value: number) => {
    const v = log ? Math.log10(value) : value;
    return outLo + ((v - a) / span) * (outHi - outLo);
  };
}

function chartShell(opts: ChartOptions, body: string[], legend: string[],
                    xTicks: number[], yTicks: number[], sx: Scale,
                    sy: Scale): string {
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `font-family="Helvetica,Arial,sans-serif" font-size="12">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(`<text x="${WIDTH / 2}" y="20" text-anchor="middle" ` +
    `font-size="14">${esc(opts.title)}</text>`);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of yTicks) {
    const y = sy(t).toFixed(2);
    parts.push(`<line x1="${x0}" y1="${y}" x2="${x1}" y2="${y}" ` +
      `stroke="#dddddd"/>`);
    parts.push(`<text x="${x0 - 6}" y="${y}" text-anchor="end" ` +
      `dominant-baseline="middle">${fmt(t)}</text>`);
  }
  for (const t of xTicks) {
    const x = sx(t).toFixed(2);
    parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 4}" ` +
      `stroke="#000000"/>`);
    parts.push(`<text x="${x}" y="${y0 + 18}" text-anchor="middle">` +
      `${fmt(t)}</text>`);
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" ` +
    `stroke="#000000"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" ` +
    `stroke="#000000"/>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" ` +
    `text-anchor="middle">${esc(opts.xLabel)}</text>`);
  parts.push(`<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(opts.yLabel)}</text>`);
  parts.push(...body);
  parts.push(...legend);
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function legendBox(labels: string[], colors: string[],
                   dashes?: string[]): string[] {
  const parts: string[] = [];
  const x = WIDTH - MARGIN.right - 150;
  let y = MARGIN.top + 8;
  for (let i = 0; i < labels.length; i++) {
    if (dashes) {
      parts.push(`<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" ` +
        `stroke="${colors[i]}" stroke-width="2"` +
        (dashes[i] ? ` stroke-dasharray="${dashes[i]}"` : "") + `/>`);
    } else {
      parts.push(`<rect x="${x}" y="${y - 6}" width="12" height="12" ` +
        `fill="${colors[i]}"/>`);
    }
    parts.push(`<text x="${x + 28}" y="${y}" ` +
      `dominant-baseline="middle">${esc(labels[i])}</text>`);
    y += 18;
  }
  return parts;
}

export function renderLineChart(series: Series[],
                                opts: ChartOptions): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (!opts.logY) {
    const pad = (yHi - yLo || Math.abs(yLo) || 1) * 0.06;
    yLo -= pad;
    yHi += pad;
  }
  const sx = makeScale(xLo, xHi, MARGIN.left, WIDTH - MARGIN.right, false);
  const sy = makeScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top,
    opts.logY ?? false);
  const body: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dash = DASHES[i % DASHES.length];
    const coords = s.points
      .map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`)
      .join(" ");
    body.push(`<polyline points="${coords}" fill="none" ` +
      `stroke="${color}" stroke-width="2"` +
      (dash ? ` stroke-dasharray="${dash}"` : "") + `/>`);
    for (const p of s.points) {
      body.push(`<circle cx="${sx(p.x).toFixed(2)}" ` +
        `cy="${sy(p.y).toFixed(2)}" r="3" fill="${color}"/>`);
    }
  });
  const xTicks = niceTicks(xLo, xHi);
  const yTicks = opts.logY ? logTicks(yLo, yHi) : niceTicks(yLo, yHi);
  const legend = legendBox(series.map((s) => s.label),
    series.map((_, i) => PALETTE[i % PALETTE.length]),
    series.map((_, i) => DASHES[i % DASHES.length]));
  return chartShell(opts, body, legend, xTicks, yTicks, sx, sy);
}

export interface BarGroup {
  label: string;
  /** value per category, aligned with the categories array */
  values: number[];
}

export function renderBarChart(categories: number[], groups: BarGroup[],
                               opts: ChartOptions): string {
  const yHi = Math.max(...groups.flatMap((g) => g.values), 0) * 1.08 || 1;
  const sy = makeScale(0, yHi, HEIGHT - MARGIN.bottom, MARGIN.top, false);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const slot = (x1 - x0) / categories.length;
  const bar = (slot * 0.8) / groups.length;
  const body: string[] = [];
  groups.forEach((g, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    g.values.forEach((v, ci) => {
      const x = x0 + ci * slot + slot * 0.1 + gi * bar;
      const y = sy(v);
      const h = HEIGHT - MARGIN.bottom - y;
      body.push(`<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" ` +
        `width="${bar.toFixed(2)}" height="${h.toFixed(2)}" ` +
        `fill="${color}"/>`);
    });
  });
  const xTickParts: string[] = [];
  categories.forEach((c, ci) => {
    const x = (x0 + ci * slot + slot / 2).toFixed(2);
    xTickParts.push(`<text x="${x}" y="${HEIGHT - MARGIN.bottom + 18}" ` +
      `text-anchor="middle">${fmt(c)}</text>`);
  });
  const legend = legendBox(groups.map((g) => g.label),
    groups.map((_, i) => PALETTE[i % PALETTE.length]));
  const yTicks = niceTicks(0, yHi);
  const sx = makeScale(0, 1, x0, x1, false);
  return chartShell(opts, [...body, ...xTickParts], legend, [], yTicks, sx,
    sy);
}
