/**
 * Reader for the sweep CSV emitted by the mcchan harness.
 *
 * The harness writes floats with Python's repr, so numeric cells round-trip
 * exactly through parseFloat. Perfect reconstructions serialize nmse_db as
 * "-inf"; booleans arrive as "True"/"False".
 */

export interface CsvTable {
  header: string[];
  rows: Record<string, string>[];
}

export class SpecError extends Error {}

export function parseCsv(text: string): CsvTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SpecError("CSV is empty");
  }
  const header = lines[0].split(",");
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new SpecError(
        `CSV row ${i} has ${cells.length} cells, header has ${header.length}`,
      );
    }
    const row: Record<string, string> = {};
    for (let j = 0; j < header.length; j++) {
      row[header[j]] = cells[j];
    }
    rows.push(row);
  }
  return { header, rows };
}

/** Numeric cell accessor accepting the harness tokens -inf/inf/nan. */
export function num(cell: string): number {
  if (cell === "-inf") return -Infinity;
  if (cell === "inf") return Infinity;
  if (cell === "nan") return NaN;
  const value = parseFloat(cell);
  if (Number.isNaN(value) && cell.trim() !== "nan") {
    throw new SpecError(`cell is not numeric: "${cell}"`);
  }
  return value;
}

/** Raise a SpecError listing every requested column missing from the header. */
export function requireColumns(table: CsvTable, names: string[]): void {
  const missing = names.filter((name) => !table.header.includes(name));
  if (missing.length > 0) {
    throw new SpecError(`CSV is missing columns: ${missing.join(", ")}`);
  }
}
