/**
 * Grouped means over parsed CSV rows.
 *
 * Group keys keep their first-seen order so a rendered figure lays series
 * and x positions out deterministically for a given input file.
 */

import { num, SpecError } from "./csv";

export interface GroupMean {
  key: string[];
  mean: number;
  count: number;
}

/**
 * Mean of `valueColumn` per distinct combination of `keys`.
 *
 * Non-finite values (the -inf token of perfect reconstructions, NaN from
 * failed trials) are skipped; a group with no finite values keeps count 0
 * and a NaN mean so callers can decide whether that is an error.
 */
export function groupMeans(
  rows: Record<string, string>[],
  keys: string[],
  valueColumn: string,
): GroupMean[] {
  const order: string[] = [];
  const sums = new Map<string, { sum: number; count: number; key: string[] }>();
  for (const row of rows) {
    const key = keys.map((k) => row[k]);
    const tag = key.join("\u0000");
    let slot = sums.get(tag);
    if (!slot) {
      slot = { sum: 0, count: 0, key };
      sums.set(tag, slot);
      order.push(tag);
    }
    const value = num(row[valueColumn]);
    if (Number.isFinite(value)) {
      slot.sum += value;
      slot.count += 1;
    }
  }
  return order.map((tag) => {
    const slot = sums.get(tag)!;
    return {
      key: slot.key,
      mean: slot.count > 0 ? slot.sum / slot.count : NaN,
      count: slot.count,
    };
  });
}

/** Distinct values of a column in first-seen order. */
export function distinct(
  rows: Record<string, string>[],
  column: string,
): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const row of rows) {
    const value = row[column];
    if (!seen.has(value)) {
      seen.add(value);
      out.push(value);
    }
  }
  return out;
}

/** Normalized frequency of integer values in a column (sums to 1). */
export function histogram(
  rows: Record<string, string>[],
  column: string,
): Map<number, number> {
  if (rows.length === 0) {
    throw new SpecError(`no rows to histogram for column ${column}`);
  }
  const counts = new Map<number, number>();
  for (const row of rows) {
    const value = num(row[column]);
    counts.set(value, (counts.get(value) ?? 0) + 1);
  }
  const out = new Map<number, number>();
  for (const value of [...counts.keys()].sort((a, b) => a - b)) {
    out.set(value, counts.get(value)! / rows.length);
  }
  return out;
}
