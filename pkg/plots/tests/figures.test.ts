import { readFileSync } from "fs";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

import { describe, expect, it } from "vitest";

import { buildFigure, PlotSpec } from "../src/figures";
import { CsvTable, parseCsv } from "../src/csv";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function load(name: string): CsvTable {
  return parseCsv(readFileSync(join(FIXTURES, name), "utf8"));
}

const steps = load("sweep_steps.csv");
const pnr = load("sweep_pnr.csv");
const phase = load("sweep_phase.csv");

function spec(kind: PlotSpec["kind"], extra: Partial<PlotSpec> = {}): PlotSpec {
  return { input: "in.csv", kind, out: "out.svg", ...extra };
}

// Aggregation done the long way, independent of src/aggregate.ts, so the
// tests catch a drift in either direction.
function meanOf(rows: Record<string, string>[], column: string): number {
  let sum = 0;
  let count = 0;
  for (const r of rows) {
    const v = r[column] === "-inf" ? -Infinity : Number(r[column]);
    if (Number.isFinite(v)) {
      sum += v;
      count += 1;
    }
  }
  return sum / count;
}

function expectSeriesMatchesMeans(table: CsvTable, kind: PlotSpec["kind"],
                                  xColumn: string, valueColumn: string) {
  const { series } = buildFigure(spec(kind), table);
  expect(series!.length).toBeGreaterThan(0);
  for (const s of series!) {
    expect(s.points.length).toBeGreaterThan(0);
    for (const p of s.points) {
      const rows = table.rows.filter(
        (r) => r.estimator === s.label && Number(r[xColumn]) === p.x,
      );
      expect(rows.length).toBeGreaterThan(0);
      expect(Math.abs(p.y - meanOf(rows, valueColumn)))
        .toBeLessThanOrEqual(1e-12);
    }
  }
}

describe("line figures plot the group means", () => {
  it("nmse_vs_steps means match independent aggregation", () => {
    expectSeriesMatchesMeans(steps, "nmse_vs_steps", "steps_per_stage",
      "nmse_db");
  });

  it("nmse_vs_pnr means match independent aggregation", () => {
    expectSeriesMatchesMeans(pnr, "nmse_vs_pnr", "pnr_db", "nmse_db");
  });

  it("nmse_vs_impairment picks the phase axis and matches means", () => {
    expectSeriesMatchesMeans(phase, "nmse_vs_impairment", "phase_level_deg",
      "nmse_db");
    const { series } = buildFigure(spec("nmse_vs_impairment"), phase);
    const xs = series![0].points.map((p) => p.x);
    expect(xs).toEqual([0, 45]);
  });

  it("flops_vs_rank means match and stay positive on the log axis", () => {
    expectSeriesMatchesMeans(steps, "flops_vs_rank", "r_hat", "flops");
    const { series } = buildFigure(spec("flops_vs_rank"), steps);
    for (const s of series!) {
      for (const p of s.points) {
        expect(p.y).toBeGreaterThan(0);
      }
    }
  });

  it("drops the perfect series whose NMSE is all -inf", () => {
    const { series } = buildFigure(spec("nmse_vs_steps"), steps);
    expect(series!.map((s) => s.label)).toEqual(["gcg", "omp", "imc"]);
  });

  it("mc_vs_imc keeps only the completion estimators", () => {
    const { series } = buildFigure(spec("mc_vs_imc"), steps);
    expect(series!.map((s) => s.label)).toEqual(["gcg", "imc"]);
  });
});

describe("se_vs_snr", () => {
  it("reads the SNR grid from the column names", () => {
    const { series } = buildFigure(spec("se_vs_snr"), steps);
    for (const s of series!) {
      expect(s.points.map((p) => p.x)).toEqual([-10, 0, 10]);
    }
    expect(series!.map((s) => s.label))
      .toEqual(["gcg", "omp", "imc", "perfect"]);
  });

  it("means match independent aggregation over all sweep points", () => {
    const { series } = buildFigure(spec("se_vs_snr"), steps);
    for (const s of series!) {
      const rows = steps.rows.filter((r) => r.estimator === s.label);
      for (const p of s.points) {
        const mean = meanOf(rows, `se_at_snr_${p.x}`);
        expect(Math.abs(p.y - mean)).toBeLessThanOrEqual(1e-12);
      }
    }
  });
});

describe("rank_hist", () => {
  it("normalizes every histogram and counts r_sub once per trial", () => {
    const { bars } = buildFigure(spec("rank_hist"), steps);
    expect(bars!.groups.map((g) => g.label))
      .toEqual(["r_sub", "r_hat_gcg", "r_hat_omp", "r_hat_imc"]);
    for (const g of bars!.groups) {
      const total = g.values.reduce((a, b) => a + b, 0);
      expect(Math.abs(total - 1)).toBeLessThanOrEqual(1e-12);
    }
    // 3 sweep values x 3 trials, all sharing one channel rank per trial
    const sub = bars!.groups[0];
    const trials = new Set(
      steps.rows.map((r) => `${r.steps_per_stage} ${r.trial}`),
    ).size;
    expect(trials).toBe(9);
    for (const v of sub.values) {
      expect(Math.round(v * trials)).toBeCloseTo(v * trials, 9);
    }
  });
});

describe("re-rendering", () => {
  const kinds: [PlotSpec["kind"], CsvTable][] = [
    ["nmse_vs_steps", steps],
    ["nmse_vs_pnr", pnr],
    ["nmse_vs_impairment", phase],
    ["rank_hist", steps],
    ["flops_vs_rank", steps],
    ["se_vs_snr", steps],
    ["mc_vs_imc", steps],
  ];

  it.each(kinds)("%s renders byte-identical SVG", (kind, table) => {
    const first = buildFigure(spec(kind), table).svg;
    const second = buildFigure(spec(kind), table).svg;
    expect(second).toBe(first);
    expect(first.startsWith("<svg ")).toBe(true);
    expect(first.trimEnd().endsWith("</svg>")).toBe(true);
  });
});

describe("spec errors", () => {
  it("names the missing columns", () => {
    const table = {
      header: steps.header.filter((c) => c !== "nmse_db" && c !== "flops"),
      rows: steps.rows,
    };
    expect(() => buildFigure(spec("nmse_vs_steps"), table))
      .toThrow("CSV is missing columns: nmse_db");
    expect(() => buildFigure(spec("flops_vs_rank"), table))
      .toThrow("CSV is missing columns: flops");
  });

  it("names the se_at_snr columns when none are present", () => {
    const table = {
      header: steps.header.filter((c) => !c.startsWith("se_at_snr_")),
      rows: steps.rows,
    };
    expect(() => buildFigure(spec("se_vs_snr"), table))
      .toThrow("CSV is missing columns: se_at_snr_*");
  });

  it("names the empty group when an estimator is absent", () => {
    const table = {
      header: steps.header,
      rows: steps.rows.filter((r) => r.estimator !== "imc"),
    };
    expect(() => buildFigure(spec("mc_vs_imc"), table))
      .toThrow("empty group: estimator=imc");
  });

  it("rejects a header-only table", () => {
    expect(() => buildFigure(spec("nmse_vs_steps"),
      { header: steps.header, rows: [] })).toThrow("CSV has no data rows");
  });
});
