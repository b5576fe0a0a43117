#!/usr/bin/env node
/**
 * Render figures from mcchan sweep CSVs.
 *
 * Usage:
 *   node dist/cli.js --spec figure.json
 *
 * The spec file holds one plot spec or an array of them:
 *   {"input": "results.csv", "kind": "nmse_vs_steps", "out": "fig2.svg"}
 *
 * Kinds: nmse_vs_steps, nmse_vs_pnr, nmse_vs_impairment, rank_hist,
 * flops_vs_rank, se_vs_snr, mc_vs_imc. Optional fields: groupBy (default
 * "estimator"), title, xLabel, yLabel. Exit code 2 on spec/CSV errors.
 */

import { readFileSync, writeFileSync } from "fs";
import { parseCsv, SpecError } from "./csv";
import { buildFigure, FIGURE_KINDS, PlotSpec } from "./figures";

function asSpecs(doc: unknown): PlotSpec[] {
  const list = Array.isArray(doc) ? doc : [doc];
  return list.map((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      throw new SpecError(`spec ${i} is not an object`);
    }
    const spec = entry as Record<string, unknown>;
    for (const field of ["input", "kind", "out"]) {
      if (typeof spec[field] !== "string") {
        throw new SpecError(`spec ${i} is missing string field "${field}"`);
      }
    }
    if (!FIGURE_KINDS.includes(spec.kind as never)) {
      throw new SpecError(
        `spec ${i} has unknown kind "${spec.kind}"; expected one of ` +
        FIGURE_KINDS.join(", "),
      );
    }
    return spec as unknown as PlotSpec;
  });
}

export function main(argv: string[]): number {
  const flag = argv.indexOf("--spec");
  if (flag < 0 || flag + 1 >= argv.length) {
    console.error("usage: cli --spec <figure.json>");
    return 2;
  }
  try {
    const doc = JSON.parse(readFileSync(argv[flag + 1], "utf8"));
    for (const spec of asSpecs(doc)) {
      const table = parseCsv(readFileSync(spec.input, "utf8"));
      const result = buildFigure(spec, table);
      writeFileSync(spec.out, result.svg);
      console.log(`${spec.kind}: ${spec.input} -> ${spec.out}`);
    }
  } catch (err) {
    if (err instanceof SpecError || err instanceof SyntaxError ||
        (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
