import { describe, expect, it } from "vitest";

import {
  formatTick,
  makeScale,
  num,
  scaleValue,
  svgDocument,
  tag,
  textLabel,
  ticks,
} from "../src/svg";

describe("makeScale and scaleValue", () => {
  it("maps domain endpoints onto range endpoints", () => {
    const s = makeScale(0, 10, 100, 500);
    expect(scaleValue(s, 0)).toBe(100);
    expect(scaleValue(s, 10)).toBe(500);
    expect(scaleValue(s, 5)).toBe(300);
  });

  it("supports inverted ranges, as used for the y axis", () => {
    const s = makeScale(0, 1, 400, 40);
    expect(scaleValue(s, 0)).toBe(400);
    expect(scaleValue(s, 1)).toBe(40);
  });

  it("widens a flat domain instead of dividing by zero", () => {
    const s = makeScale(3, 3, 0, 100);
    expect(s.domainLo).toBeLessThan(3);
    expect(s.domainHi).toBeGreaterThan(3);
    expect(Number.isFinite(scaleValue(s, 3))).toBe(true);
  });

  it("rejects non-finite domains", () => {
    expect(() => makeScale(Number.NaN, 1, 0, 1)).toThrow(/finite/);
  });
});

describe("ticks", () => {
  it("uses 1/2/5 steps inside the domain", () => {
    const t = ticks(0, 10);
    expect(t[0]).toBe(0);
    expect(t[t.length - 1]).toBe(10);
    expect(t).toContain(2);
    for (const v of t) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(10 + 1e-9);
    }
  });

  it("snaps the zero tick to exactly zero", () => {
    expect(ticks(-1, 1)).toContain(0);
  });

  it("degenerates gracefully", () => {
    expect(ticks(2, 2)).toEqual([2]);
  });
});

describe("formatters", () => {
  it("num strips float noise", () => {
    expect(num(0.1 + 0.2)).toBe("0.3");
    expect(num(2)).toBe("2");
  });

  it("formatTick switches to exponents outside a readable window", () => {
    expect(formatTick(0)).toBe("0");
    expect(formatTick(0.5)).toBe("0.5");
    expect(formatTick(2e-5)).toBe("2.0e-5");
    expect(formatTick(3.2e6)).toBe("3.2e+6");
  });
});

describe("element assembly", () => {
  it("builds self-closing tags with escaped attributes", () => {
    expect(tag("line", { x1: 1, y1: 2.25, x2: 3, y2: 4, stroke: "#333" })).toBe(
      '<line x1="1" y1="2.25" x2="3" y2="4" stroke="#333"/>',
    );
    expect(tag("g", { "data-k": 'a"b' }, "inner")).toBe('<g data-k="a&quot;b">inner</g>');
  });

  it("escapes text bodies", () => {
    expect(textLabel(0, 0, "a<b", "start")).toContain("a&lt;b");
  });

  it("wraps a document with a white background", () => {
    const doc = svgDocument(10, 20, [tag("circle", { cx: 1, cy: 1, r: 1, fill: "red" })]);
    expect(doc.startsWith('<svg xmlns="http://www.w3.org/2000/svg"')).toBe(true);
    expect(doc).toContain('viewBox="0 0 10 20"');
    expect(doc).toContain('fill="#ffffff"');
    expect(doc.trimEnd().endsWith("</svg>")).toBe(true);
  });
});
