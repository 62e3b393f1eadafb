/** Minimal SVG assembly: linear scales, tick selection, and element text. */

export interface LinearScale {
  domainLo: number;
  domainHi: number;
  rangeLo: number;
  rangeHi: number;
}

export function makeScale(
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): LinearScale {
  if (!(Number.isFinite(domainLo) && Number.isFinite(domainHi))) {
    throw new Error(`scale domain must be finite, got [${domainLo}, ${domainHi}]`);
  }
  if (domainHi <= domainLo) {
    // a flat domain still needs a usable scale; widen it symmetrically
    const pad = Math.abs(domainLo) * 0.05 + 0.5;
    return { domainLo: domainLo - pad, domainHi: domainHi + pad, rangeLo, rangeHi };
  }
  return { domainLo, domainHi, rangeLo, rangeHi };
}

export function scaleValue(s: LinearScale, x: number): number {
  const t = (x - s.domainLo) / (s.domainHi - s.domainLo);
  return s.rangeLo + t * (s.rangeHi - s.rangeLo);
}

/** Round tick positions at a 1/2/5 step covering [lo, hi]. */
export function ticks(lo: number, hi: number, target = 6): number[] {
  if (hi <= lo) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(1, target);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * power;
    if (step >= rawStep) {
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function formatTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e5 || magnitude < 1e-3) {
    return value.toExponential(1);
  }
  return String(Number(value.toPrecision(6)));
}

export function num(value: number): string {
  return String(Number(value.toPrecision(8)));
}

export function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  body?: string,
): string {
  const parts = Object.entries(attrs).map(
    ([key, value]) =>
      `${key}="${typeof value === "number" ? num(value) : escapeText(value)}"`,
  );
  const open = `<${name} ${parts.join(" ")}`;
  return body === undefined ? `${open}/>` : `${open}>${body}</${name}>`;
}

export function textLabel(
  x: number,
  y: number,
  body: string,
  anchor: "start" | "middle" | "end",
  extra: Record<string, string | number> = {},
): string {
  return tag(
    "text",
    { x, y, "text-anchor": anchor, "font-size": 12, "font-family": "sans-serif", ...extra },
    escapeText(body),
  );
}

export function svgDocument(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    tag("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }),
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
