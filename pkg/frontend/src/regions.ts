/** Reader for `ellipsoid-union v1` region files.
 *
 * Layout: a tag line, four `key = value` lines (d, log_threshold,
 * total_volume, count), then one `e` record per ellipsoid holding d
 * center coordinates, the d*d axis matrix in row-major order with axis
 * vectors in columns, d semi-axes, and the ellipsoid volume.
 */

import { ParseError } from "./errors";

export const FORMAT_TAG = "# ellipsoid-union v1";

export interface EllipsoidData {
  center: number[];
  /** axes[j] is the j-th unit axis vector. */
  axes: number[][];
  semiAxes: number[];
  volume: number;
}

export interface UnionData {
  d: number;
  logThreshold: number;
  totalVolume: number;
  ellipsoids: EllipsoidData[];
}

interface Numbered {
  text: string;
  line: number;
}

function keyed(entry: Numbered, key: string): string {
  const prefix = `${key} = `;
  if (!entry.text.startsWith(prefix)) {
    throw new ParseError(`expected "${key} = ...", got ${JSON.stringify(entry.text)}`, entry.line);
  }
  return entry.text.slice(prefix.length);
}

function finiteNumber(text: string, what: string, line: number): number {
  const value = Number(text);
  if (!Number.isFinite(value)) {
    throw new ParseError(`${what} ${JSON.stringify(text)} is not a finite number`, line);
  }
  return value;
}

export function parseUnion(text: string): UnionData {
  const entries: Numbered[] = [];
  const source = text.split(/\r?\n/);
  for (let i = 0; i < source.length; i++) {
    const line = source[i].trim();
    if (line !== "") {
      entries.push({ text: line, line: i + 1 });
    }
  }
  if (entries.length === 0 || entries[0].text !== FORMAT_TAG) {
    throw new ParseError(`expected tag ${JSON.stringify(FORMAT_TAG)}`, entries[0]?.line ?? 1);
  }
  if (entries.length < 5) {
    throw new ParseError("truncated header", entries[entries.length - 1].line);
  }
  const d = finiteNumber(keyed(entries[1], "d"), "dimension", entries[1].line);
  if (!Number.isInteger(d) || d < 1) {
    throw new ParseError(`dimension must be a positive integer, got ${d}`, entries[1].line);
  }
  // the single-ball export has no density threshold and stores nan here
  const logThreshold = Number(keyed(entries[2], "log_threshold"));
  const totalVolume = finiteNumber(
    keyed(entries[3], "total_volume"),
    "total volume",
    entries[3].line,
  );
  const count = finiteNumber(keyed(entries[4], "count"), "count", entries[4].line);
  const records = entries.slice(5);
  if (records.length !== count) {
    throw new ParseError(
      `count says ${count} ellipsoids, file holds ${records.length}`,
      entries[4].line,
    );
  }

  const perRecord = d + d * d + d + 1;
  const ellipsoids: EllipsoidData[] = [];
  for (const record of records) {
    if (!record.text.startsWith("e ")) {
      throw new ParseError(`expected an "e" record, got ${JSON.stringify(record.text)}`, record.line);
    }
    const cells = record.text.slice(2).trim().split(/\s+/);
    if (cells.length !== perRecord) {
      throw new ParseError(
        `expected ${perRecord} numbers in an ellipsoid record, got ${cells.length}`,
        record.line,
      );
    }
    const values = cells.map((c) => finiteNumber(c, "ellipsoid entry", record.line));
    const center = values.slice(0, d);
    const flat = values.slice(d, d + d * d);
    const semiAxes = values.slice(d + d * d, d + d * d + d);
    const volume = values[perRecord - 1];
    const axes: number[][] = [];
    for (let j = 0; j < d; j++) {
      const axis: number[] = [];
      for (let i = 0; i < d; i++) {
        axis.push(flat[i * d + j]);
      }
      axes.push(axis);
    }
    if (semiAxes.some((s) => s <= 0)) {
      throw new ParseError("semi-axes must be positive", record.line);
    }
    ellipsoids.push({ center, axes, semiAxes, volume });
  }
  return { d, logThreshold, totalVolume, ellipsoids };
}
