/** Point membership and outline sampling for parsed ellipsoids. */

import { EllipsoidData } from "./regions";

/** Squared Mahalanobis radius: sum over axes of (axis . (p - c) / s)^2. */
export function mahalanobisSq(e: EllipsoidData, point: number[]): number {
  const d = e.center.length;
  let total = 0;
  for (let j = 0; j < d; j++) {
    let dot = 0;
    for (let i = 0; i < d; i++) {
      dot += e.axes[j][i] * (point[i] - e.center[i]);
    }
    const z = dot / e.semiAxes[j];
    total += z * z;
  }
  return total;
}

export function contains(e: EllipsoidData, point: number[]): boolean {
  return mahalanobisSq(e, point) <= 1.0;
}

export function unionContains(ellipsoids: EllipsoidData[], point: number[]): boolean {
  return ellipsoids.some((e) => contains(e, point));
}

/**
 * Closed outline of a 2-D ellipsoid: center + cos(t) s1 u1 + sin(t) s2 u2.
 *
 * `segments` must be a multiple of 4 so the four axis endpoints
 * center +- s_j u_j land exactly on outline vertices.
 */
export function ellipseOutline(e: EllipsoidData, segments = 128): Array<[number, number]> {
  if (e.center.length !== 2) {
    throw new Error(`outline needs d = 2, got d = ${e.center.length}`);
  }
  if (segments < 8 || segments % 4 !== 0) {
    throw new Error(`segments must be a multiple of 4 and at least 8, got ${segments}`);
  }
  const points: Array<[number, number]> = [];
  for (let k = 0; k < segments; k++) {
    const t = (2 * Math.PI * k) / segments;
    // snap the quarter turns so axis endpoints are hit without rounding
    const quarter = k / (segments / 4);
    const cos = Number.isInteger(quarter) ? [1, 0, -1, 0][quarter % 4] : Math.cos(t);
    const sin = Number.isInteger(quarter) ? [0, 1, 0, -1][quarter % 4] : Math.sin(t);
    points.push([
      e.center[0] + cos * e.semiAxes[0] * e.axes[0][0] + sin * e.semiAxes[1] * e.axes[1][0],
      e.center[1] + cos * e.semiAxes[0] * e.axes[0][1] + sin * e.semiAxes[1] * e.axes[1][1],
    ]);
  }
  points.push(points[0]);
  return points;
}
