import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { ParseError } from "../src/errors";
import { FORMAT_TAG, parseUnion } from "../src/regions";

const FIXTURES = join(__dirname, "..", "fixtures");

function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf8");
}

// small hand-rolled union: identity axes, semi-axes 2 and 1
const TINY = [
  FORMAT_TAG,
  "d = 2",
  "log_threshold = -1.5",
  "total_volume = 6.2831853071795862",
  "count = 1",
  "e 0 0 1 0 0 1 2 1 6.2831853071795862",
  "",
].join("\n");

describe("parseUnion", () => {
  it("reads an adaptive covering written by the estimation CLI", () => {
    const union = parseUnion(fixture("ex2.ecmle.regions"));
    expect(union.d).toBe(2);
    expect(union.ellipsoids.length).toBeGreaterThanOrEqual(2);
    expect(Number.isFinite(union.logThreshold)).toBe(true);
    const volumeSum = union.ellipsoids.reduce((acc, e) => acc + e.volume, 0);
    expect(union.totalVolume).toBeCloseTo(volumeSum, 10);
    for (const e of union.ellipsoids) {
      expect(e.center.length).toBe(2);
      expect(e.axes.length).toBe(2);
      expect(e.semiAxes.every((s) => s > 0)).toBe(true);
      // axis vectors come back orthonormal
      for (let a = 0; a < 2; a++) {
        const norm = Math.hypot(...e.axes[a]);
        expect(norm).toBeCloseTo(1.0, 10);
      }
      const dot = e.axes[0][0] * e.axes[1][0] + e.axes[0][1] * e.axes[1][1];
      expect(Math.abs(dot)).toBeLessThan(1e-10);
      // planar volume is pi times the product of the semi-axes
      expect(e.volume).toBeCloseTo(Math.PI * e.semiAxes[0] * e.semiAxes[1], 8);
    }
  });

  it("accepts the single-ball comparison export with a nan threshold", () => {
    const union = parseUnion(fixture("ex2.thames.regions"));
    expect(union.ellipsoids.length).toBe(1);
    expect(Number.isNaN(union.logThreshold)).toBe(true);
    expect(union.totalVolume).toBeCloseTo(union.ellipsoids[0].volume, 10);
  });

  it("decodes the row-major axis matrix into column vectors", () => {
    const rotated = TINY.replace("e 0 0 1 0 0 1 2 1", "e 0 0 0 -1 1 0 2 1");
    const union = parseUnion(rotated);
    // columns of [[0, -1], [1, 0]] are (0, 1) and (-1, 0)
    expect(union.ellipsoids[0].axes[0]).toEqual([0, 1]);
    expect(union.ellipsoids[0].axes[1]).toEqual([-1, 0]);
  });

  it("rejects a missing tag", () => {
    expect(() => parseUnion("d = 2\n")).toThrow(/expected tag/);
  });

  it("rejects a truncated header", () => {
    expect(() => parseUnion(`${FORMAT_TAG}\nd = 2\n`)).toThrow(/truncated header/);
  });

  it("pins a count mismatch to the count line", () => {
    const text = TINY.replace("count = 1", "count = 2");
    let caught: ParseError | undefined;
    try {
      parseUnion(text);
    } catch (err) {
      caught = err as ParseError;
    }
    expect(caught).toBeInstanceOf(ParseError);
    expect(caught!.line).toBe(5);
    expect(caught!.message).toContain("count says 2");
  });

  it("rejects a record with the wrong number of entries", () => {
    const text = TINY.replace("e 0 0 1 0 0 1 2 1 6.2831853071795862", "e 0 0 1 0 0 1 2 1");
    expect(() => parseUnion(text)).toThrow(/expected 9 numbers/);
  });

  it("rejects non-finite entries and non-positive semi-axes", () => {
    expect(() =>
      parseUnion(TINY.replace("e 0 0 1", "e 0 inf 1")),
    ).toThrow(/not a finite number/);
    expect(() =>
      parseUnion(TINY.replace("0 1 2 1 6.2831853071795862", "0 1 2 0 6.2831853071795862")),
    ).toThrow(/semi-axes must be positive/);
  });

  it("rejects a stray non-record line where a record belongs", () => {
    expect(() =>
      parseUnion(TINY.replace("e 0 0 1 0 0 1 2 1 6.2831853071795862", "q 1 2 3")),
    ).toThrow(/expected an "e" record/);
  });
});
