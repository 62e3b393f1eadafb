/** The four figure kinds rendered from harness output files.
 *
 * Everything funnels through `render(spec)`: it reads the input files,
 * dispatches on the figure kind, and writes one SVG.  Input files are
 * never modified.  Output is a pure function of input bytes, so repeated
 * runs produce identical files.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { Table, columnIndex, numberAt, parseTable } from "./csv";
import { ConfigError, UnsupportedDimensionError } from "./errors";
import { ellipseOutline, unionContains } from "./geometry";
import { UnionData, parseUnion } from "./regions";
import {
  LinearScale,
  formatTick,
  makeScale,
  num,
  scaleValue,
  svgDocument,
  tag,
  textLabel,
  ticks,
} from "./svg";

export const FIGURE_KINDS = [
  "boxplot",
  "alpha-sweep",
  "variance-curve",
  "coverage-scatter",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  /** Path of the CSV with results, variance rows, or flagged draws. */
  input: string;
  /** Path of the ellipsoid-union file; needed by coverage-scatter. */
  regions?: string;
  /** Level of the dashed horizontal reference line; the exact log
   * evidence on evidence plots.  NaN suppresses the line. */
  ref: number;
  /** Output SVG path. */
  output: string;
}

export interface RenderResult {
  svg: string;
  meta: Record<string, unknown>;
}

/** One place for every color and geometry convention the figures use. */
export const STYLE = {
  width: 640,
  height: 420,
  margin: { top: 24, right: 24, bottom: 48, left: 66 },
  palette: ["#4c78a8", "#f58518", "#54a24b", "#b279a2", "#72b7b2", "#9d755d"],
  axis: "#333333",
  grid: "#dddddd",
  reference: "#d62728",
  insidePoint: "#4c78a8",
  outsidePoint: "#b5b5b5",
  outline: "#e45756",
  boxSlotFraction: 0.6,
  pointRadius: 2,
} as const;

interface Area {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

function plotArea(): Area {
  return {
    left: STYLE.margin.left,
    right: STYLE.width - STYLE.margin.right,
    top: STYLE.margin.top,
    bottom: STYLE.height - STYLE.margin.bottom,
  };
}

/** Quantile with linear interpolation between order statistics. */
export function quantile(sorted: number[], q: number): number {
  const n = sorted.length;
  if (n === 0) {
    throw new Error("quantile of an empty list");
  }
  const h = (n - 1) * q;
  const lo = Math.floor(h);
  const hi = Math.min(lo + 1, n - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

export interface BoxStats {
  lo: number;
  q1: number;
  median: number;
  q3: number;
  hi: number;
  n: number;
}

export function boxStats(values: number[]): BoxStats {
  const sorted = [...values].sort((a, b) => a - b);
  return {
    lo: sorted[0],
    q1: quantile(sorted, 0.25),
    median: quantile(sorted, 0.5),
    q3: quantile(sorted, 0.75),
    hi: sorted[sorted.length - 1],
    n: sorted.length,
  };
}

/** Group finite values of `valueCol` by the text in `keyCol`, keeping
 * first-appearance order; rows from failed replications carry empty
 * cells and are skipped. */
function groupValues(table: Table, keyCol: string, valueCol: string): Map<string, number[]> {
  const key = columnIndex(table, keyCol);
  const value = columnIndex(table, valueCol);
  const groups = new Map<string, number[]>();
  for (let r = 0; r < table.rows.length; r++) {
    const v = numberAt(table, r, value);
    if (!Number.isFinite(v)) {
      continue;
    }
    const k = table.rows[r][key].trim();
    const bucket = groups.get(k);
    if (bucket) {
      bucket.push(v);
    } else {
      groups.set(k, [v]);
    }
  }
  if (groups.size === 0) {
    throw new ConfigError(`no usable rows: every ${valueCol} cell is empty or non-finite`);
  }
  return groups;
}

function yDomain(values: number[], ref: number): [number, number] {
  const all = Number.isFinite(ref) ? [...values, ref] : values;
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const pad = (hi - lo) * 0.08 + (hi === lo ? 0.5 : 0);
  return [lo - pad, hi + pad];
}

function yAxisElements(scale: LinearScale, area: Area, label: string): string[] {
  const parts: string[] = [];
  for (const t of ticks(scale.domainLo, scale.domainHi)) {
    const y = scaleValue(scale, t);
    parts.push(tag("line", { x1: area.left, y1: y, x2: area.right, y2: y, stroke: STYLE.grid }));
    parts.push(tag("line", { x1: area.left - 5, y1: y, x2: area.left, y2: y, stroke: STYLE.axis }));
    parts.push(textLabel(area.left - 8, y + 4, formatTick(t), "end"));
  }
  parts.push(
    tag("line", {
      x1: area.left, y1: area.top, x2: area.left, y2: area.bottom, stroke: STYLE.axis,
    }),
    tag("line", {
      x1: area.left, y1: area.bottom, x2: area.right, y2: area.bottom, stroke: STYLE.axis,
    }),
    textLabel(16, (area.top + area.bottom) / 2, label, "middle", {
      transform: `rotate(-90 16 ${num((area.top + area.bottom) / 2)})`,
    }),
  );
  return parts;
}

function referenceLine(scale: LinearScale, area: Area, ref: number): { parts: string[]; y: number | null } {
  if (!Number.isFinite(ref)) {
    return { parts: [], y: null };
  }
  const y = scaleValue(scale, ref);
  return {
    y,
    parts: [
      tag("line", {
        class: "reference",
        x1: area.left,
        y1: y,
        x2: area.right,
        y2: y,
        stroke: STYLE.reference,
        "stroke-width": 1.5,
        "stroke-dasharray": "6 4",
      }),
      textLabel(area.right, y - 5, "exact", "end", { fill: STYLE.reference }),
    ],
  };
}

function drawBox(
  xCenter: number,
  width: number,
  stats: BoxStats,
  scale: LinearScale,
  color: string,
): string[] {
  const y = (v: number) => scaleValue(scale, v);
  const left = xCenter - width / 2;
  const right = xCenter + width / 2;
  return [
    tag("line", { x1: xCenter, y1: y(stats.lo), x2: xCenter, y2: y(stats.q1), stroke: color }),
    tag("line", { x1: xCenter, y1: y(stats.q3), x2: xCenter, y2: y(stats.hi), stroke: color }),
    tag("line", { x1: left, y1: y(stats.lo), x2: right, y2: y(stats.lo), stroke: color }),
    tag("line", { x1: left, y1: y(stats.hi), x2: right, y2: y(stats.hi), stroke: color }),
    tag("rect", {
      class: "box",
      x: left,
      y: y(stats.q3),
      width,
      height: Math.max(y(stats.q1) - y(stats.q3), 0.1),
      fill: color,
      "fill-opacity": 0.35,
      stroke: color,
    }),
    tag("line", {
      x1: left, y1: y(stats.median), x2: right, y2: y(stats.median),
      stroke: color, "stroke-width": 2,
    }),
  ];
}

function legend(names: string[], area: Area): string[] {
  const parts: string[] = [];
  names.forEach((name, i) => {
    const x = area.right - 130;
    const y = area.top + 8 + 16 * i;
    parts.push(
      tag("rect", {
        x, y: y - 9, width: 10, height: 10,
        fill: STYLE.palette[i % STYLE.palette.length],
        "fill-opacity": 0.6,
      }),
      textLabel(x + 14, y, name, "start"),
    );
  });
  return parts;
}

export function renderBoxplot(table: Table, ref: number): RenderResult {
  const groups = groupValues(table, "method", "log_z_hat");
  const area = plotArea();
  const all = [...groups.values()].flat();
  const [lo, hi] = yDomain(all, ref);
  const scale = makeScale(lo, hi, area.bottom, area.top);
  const names = [...groups.keys()];
  const slot = (area.right - area.left) / names.length;

  const parts = yAxisElements(scale, area, "log evidence estimate");
  const reference = referenceLine(scale, area, ref);
  parts.push(...reference.parts);
  const stats: Record<string, BoxStats> = {};
  names.forEach((name, i) => {
    const s = boxStats(groups.get(name)!);
    stats[name] = s;
    const x = area.left + slot * (i + 0.5);
    parts.push(...drawBox(x, slot * STYLE.boxSlotFraction, s, scale, STYLE.palette[i % STYLE.palette.length]));
    parts.push(textLabel(x, area.bottom + 18, name, "middle"));
  });
  parts.push(textLabel((area.left + area.right) / 2, STYLE.height - 10, "method", "middle"));
  return {
    svg: svgDocument(STYLE.width, STYLE.height, parts),
    meta: { kind: "boxplot", stats, scale, refY: reference.y },
  };
}

export function renderAlphaSweep(table: Table, ref: number): RenderResult {
  const alphaCol = columnIndex(table, "alpha");
  const methodCol = columnIndex(table, "method");
  const valueCol = columnIndex(table, "log_z_hat");
  const alphas: number[] = [];
  const methods: string[] = [];
  const cells = new Map<string, number[]>();
  for (let r = 0; r < table.rows.length; r++) {
    const v = numberAt(table, r, valueCol);
    if (!Number.isFinite(v)) {
      continue;
    }
    const a = numberAt(table, r, alphaCol);
    const m = table.rows[r][methodCol].trim();
    if (!alphas.includes(a)) {
      alphas.push(a);
    }
    if (!methods.includes(m)) {
      methods.push(m);
    }
    const key = `${a}|${m}`;
    const bucket = cells.get(key);
    if (bucket) {
      bucket.push(v);
    } else {
      cells.set(key, [v]);
    }
  }
  if (cells.size === 0) {
    throw new ConfigError("no usable rows: every log_z_hat cell is empty or non-finite");
  }
  alphas.sort((a, b) => a - b);

  const area = plotArea();
  const all = [...cells.values()].flat();
  const [lo, hi] = yDomain(all, ref);
  const scale = makeScale(lo, hi, area.bottom, area.top);
  const slot = (area.right - area.left) / alphas.length;
  const boxWidth = (slot * STYLE.boxSlotFraction) / methods.length;

  const parts = yAxisElements(scale, area, "log evidence estimate");
  const reference = referenceLine(scale, area, ref);
  parts.push(...reference.parts);
  alphas.forEach((a, i) => {
    const slotCenter = area.left + slot * (i + 0.5);
    methods.forEach((m, j) => {
      const values = cells.get(`${a}|${m}`);
      if (!values) {
        return;
      }
      const x = slotCenter + boxWidth * (j - (methods.length - 1) / 2);
      parts.push(...drawBox(x, boxWidth * 0.9, boxStats(values), scale, STYLE.palette[j % STYLE.palette.length]));
    });
    parts.push(textLabel(slotCenter, area.bottom + 18, formatTick(a), "middle"));
  });
  if (methods.length > 1) {
    parts.push(...legend(methods, area));
  }
  parts.push(textLabel((area.left + area.right) / 2, STYLE.height - 10, "HPD level", "middle"));
  return {
    svg: svgDocument(STYLE.width, STYLE.height, parts),
    meta: { kind: "alpha-sweep", alphas, methods, scale, refY: reference.y },
  };
}

export function renderVarianceCurve(table: Table, ref: number): RenderResult {
  const supportCol = columnIndex(table, "support");
  const alphaCol = columnIndex(table, "alpha");
  const valueCol = columnIndex(table, "log_proxy");
  const series = new Map<string, Array<[number, number]>>();
  for (let r = 0; r < table.rows.length; r++) {
    const y = numberAt(table, r, valueCol);
    if (!Number.isFinite(y)) {
      continue;
    }
    const name = table.rows[r][supportCol].trim();
    const point: [number, number] = [numberAt(table, r, alphaCol), y];
    const bucket = series.get(name);
    if (bucket) {
      bucket.push(point);
    } else {
      series.set(name, [point]);
    }
  }
  if (series.size === 0) {
    throw new ConfigError("no usable rows: every log_proxy cell is empty or non-finite");
  }
  for (const points of series.values()) {
    points.sort((a, b) => a[0] - b[0]);
  }

  const area = plotArea();
  const xs = [...series.values()].flat().map((p) => p[0]);
  const ys = [...series.values()].flat().map((p) => p[1]);
  const [lo, hi] = yDomain(ys, ref);
  const xPad = (Math.max(...xs) - Math.min(...xs)) * 0.05 + 1e-12;
  const xScale = makeScale(Math.min(...xs) - xPad, Math.max(...xs) + xPad, area.left, area.right);
  const yScale = makeScale(lo, hi, area.bottom, area.top);

  const parts = yAxisElements(yScale, area, "log variance proxy");
  for (const t of ticks(xScale.domainLo, xScale.domainHi)) {
    const x = scaleValue(xScale, t);
    parts.push(tag("line", { x1: x, y1: area.bottom, x2: x, y2: area.bottom + 5, stroke: STYLE.axis }));
    parts.push(textLabel(x, area.bottom + 18, formatTick(t), "middle"));
  }
  const reference = referenceLine(yScale, area, ref);
  parts.push(...reference.parts);
  let index = 0;
  for (const points of series.values()) {
    const color = STYLE.palette[index % STYLE.palette.length];
    const pixels = points.map(
      (p) => `${num(scaleValue(xScale, p[0]))},${num(scaleValue(yScale, p[1]))}`,
    );
    parts.push(
      tag("polyline", {
        class: "curve", points: pixels.join(" "), fill: "none", stroke: color, "stroke-width": 2,
      }),
    );
    for (const p of points) {
      parts.push(
        tag("circle", {
          cx: scaleValue(xScale, p[0]), cy: scaleValue(yScale, p[1]), r: 3, fill: color,
        }),
      );
    }
    index += 1;
  }
  if (series.size > 1) {
    parts.push(...legend([...series.keys()], area));
  }
  parts.push(textLabel((area.left + area.right) / 2, STYLE.height - 10, "HPD level", "middle"));
  return {
    svg: svgDocument(STYLE.width, STYLE.height, parts),
    meta: { kind: "variance-curve", supports: [...series.keys()], xScale, yScale, refY: reference.y },
  };
}

export function renderCoverageScatter(table: Table, union: UnionData): RenderResult {
  const thetaCols: number[] = [];
  for (let d = 1; ; d++) {
    const idx = table.header.indexOf(`theta_${d}`);
    if (idx < 0) {
      break;
    }
    thetaCols.push(idx);
  }
  if (thetaCols.length !== 2) {
    throw new UnsupportedDimensionError(thetaCols.length);
  }
  if (union.d !== 2) {
    throw new UnsupportedDimensionError(union.d);
  }
  const halfCol = columnIndex(table, "half");
  const points: Array<[number, number]> = [];
  for (let r = 0; r < table.rows.length; r++) {
    if (table.rows[r][halfCol].trim() === "eval") {
      points.push([numberAt(table, r, thetaCols[0]), numberAt(table, r, thetaCols[1])]);
    }
  }
  if (points.length === 0) {
    throw new ConfigError("no rows with half = eval");
  }
  const outlines = union.ellipsoids.map((e) => ellipseOutline(e));

  const area = plotArea();
  const everything = [...points, ...outlines.flat()];
  const xLo = Math.min(...everything.map((p) => p[0]));
  const xHi = Math.max(...everything.map((p) => p[0]));
  const yLo = Math.min(...everything.map((p) => p[1]));
  const yHi = Math.max(...everything.map((p) => p[1]));
  // one common scale factor keeps circles circular
  const unitsPerPixel = Math.max(
    (xHi - xLo) / (area.right - area.left),
    (yHi - yLo) / (area.bottom - area.top),
  ) * 1.05 || 1.0;
  const xMid = (xLo + xHi) / 2;
  const yMid = (yLo + yHi) / 2;
  const halfW = ((area.right - area.left) / 2) * unitsPerPixel;
  const halfH = ((area.bottom - area.top) / 2) * unitsPerPixel;
  const xScale = makeScale(xMid - halfW, xMid + halfW, area.left, area.right);
  const yScale = makeScale(yMid - halfH, yMid + halfH, area.bottom, area.top);

  const parts = yAxisElements(yScale, area, "theta_2");
  for (const t of ticks(xScale.domainLo, xScale.domainHi)) {
    const x = scaleValue(xScale, t);
    parts.push(tag("line", { x1: x, y1: area.bottom, x2: x, y2: area.bottom + 5, stroke: STYLE.axis }));
    parts.push(textLabel(x, area.bottom + 18, formatTick(t), "middle"));
  }
  let nInside = 0;
  for (const p of points) {
    const inside = unionContains(union.ellipsoids, p);
    nInside += inside ? 1 : 0;
    parts.push(
      tag("circle", {
        cx: scaleValue(xScale, p[0]),
        cy: scaleValue(yScale, p[1]),
        r: STYLE.pointRadius,
        fill: inside ? STYLE.insidePoint : STYLE.outsidePoint,
        "fill-opacity": 0.7,
      }),
    );
  }
  for (const outline of outlines) {
    const pixels = outline.map(
      (p) => `${num(scaleValue(xScale, p[0]))},${num(scaleValue(yScale, p[1]))}`,
    );
    parts.push(
      tag("polyline", {
        class: "outline",
        points: pixels.join(" "),
        fill: "none",
        stroke: STYLE.outline,
        "stroke-width": 1.5,
      }),
    );
  }
  parts.push(textLabel((area.left + area.right) / 2, STYLE.height - 10, "theta_1", "middle"));
  return {
    svg: svgDocument(STYLE.width, STYLE.height, parts),
    meta: {
      kind: "coverage-scatter",
      nPoints: points.length,
      nInside,
      nEllipsoids: union.ellipsoids.length,
      xScale,
      yScale,
    },
  };
}

export function render(spec: FigureSpec): RenderResult {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new ConfigError(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
  const table = parseTable(readFileSync(spec.input, "utf8"));
  let result: RenderResult;
  if (spec.kind === "coverage-scatter") {
    if (!spec.regions) {
      throw new ConfigError("coverage-scatter needs --regions");
    }
    result = renderCoverageScatter(table, parseUnion(readFileSync(spec.regions, "utf8")));
  } else if (spec.kind === "boxplot") {
    result = renderBoxplot(table, spec.ref);
  } else if (spec.kind === "alpha-sweep") {
    result = renderAlphaSweep(table, spec.ref);
  } else {
    result = renderVarianceCurve(table, spec.ref);
  }
  writeFileSync(spec.output, result.svg);
  return result;
}
