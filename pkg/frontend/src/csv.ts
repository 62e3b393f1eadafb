/** Reader for the harness CSV dialect.
 *
 * The files are plain comma-separated text with one header row, values
 * that never contain commas or quotes, and `#`-prefixed comment lines
 * that may appear anywhere.  Failed-replication rows encode missing
 * numbers as empty cells.
 */

import { ParseError } from "./errors";

export interface Table {
  header: string[];
  /** Raw string cells, one array per data row. */
  rows: string[][];
  /** 1-based source line of each data row, for error reporting. */
  lines: number[];
}

export function parseTable(text: string): Table {
  const header: string[] = [];
  const rows: string[][] = [];
  const lines: number[] = [];
  const source = text.split(/\r?\n/);
  for (let i = 0; i < source.length; i++) {
    const line = source[i].trim();
    if (line === "" || line.startsWith("#")) {
      continue;
    }
    const cells = line.split(",");
    if (header.length === 0) {
      header.push(...cells.map((c) => c.trim()));
      continue;
    }
    if (cells.length !== header.length) {
      throw new ParseError(
        `expected ${header.length} cells, got ${cells.length}`,
        i + 1,
      );
    }
    rows.push(cells);
    lines.push(i + 1);
  }
  if (header.length === 0) {
    throw new ParseError("no header row found", 1);
  }
  if (rows.length === 0) {
    throw new ParseError("no data rows found", source.length);
  }
  return { header, rows, lines };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new ParseError(`missing column ${JSON.stringify(name)}`, 1);
  }
  return idx;
}

/** Numeric cell of row `r`; an empty cell parses to NaN by design. */
export function numberAt(table: Table, r: number, col: number): number {
  const cell = table.rows[r][col].trim();
  if (cell === "") {
    return NaN;
  }
  const value = Number(cell);
  if (Number.isNaN(value) && cell.toLowerCase() !== "nan") {
    throw new ParseError(
      `cell ${JSON.stringify(cell)} in column ${JSON.stringify(table.header[col])} is not a number`,
      table.lines[r],
    );
  }
  return value;
}
