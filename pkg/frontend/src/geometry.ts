/* Pure parameter-space geometry: barycentric weights, hull clamping and
 * vertex snapping. No DOM access so everything here runs under node:test.
 *
 * Parameter points are 1D or 2D; 1D spaces are embedded on the x axis.
 */

import type { SpaceDescription } from "./types.js";

export interface HullPoint {
  point: number[];
  simplex: number;
  /* barycentric weights in the simplex's vertex order, clipped to >= 0 */
  weights: number[];
}

function sub(a: number[], b: number[]): number[] {
  return a.map((v, i) => v - b[i]);
}

function dot(a: number[], b: number[]): number {
  return a.reduce((s, v, i) => s + v * b[i], 0);
}

function dist2(a: number[], b: number[]): number {
  const d = sub(a, b);
  return dot(d, d);
}

export function embed(r: number[]): number[] {
  return r.length === 1 ? [r[0], 0] : r.slice(0, 2);
}

/** Barycentric weights of `x` for a segment (2 vertices) or triangle (3). */
export function barycentric(x: number[], verts: number[][]): number[] {
  if (verts.length === 2) {
    const [a, b] = verts;
    const ab = sub(b, a);
    const len2 = dot(ab, ab);
    if (len2 === 0) throw new Error("degenerate segment");
    const t = dot(sub(x, a), ab) / len2;
    return [1 - t, t];
  }
  if (verts.length === 3) {
    const [a, b, c] = verts;
    const m00 = b[0] - a[0];
    const m01 = c[0] - a[0];
    const m10 = b[1] - a[1];
    const m11 = c[1] - a[1];
    const det = m00 * m11 - m01 * m10;
    if (Math.abs(det) < 1e-12) throw new Error("degenerate triangle");
    const px = x[0] - a[0];
    const py = x[1] - a[1];
    const w2 = (px * m11 - py * m01) / det;
    const w3 = (py * m00 - px * m10) / det;
    return [1 - w2 - w3, w2, w3];
  }
  throw new Error(`unsupported simplex of ${verts.length} vertices`);
}

function closestOnSegment(x: number[], a: number[], b: number[]): number[] {
  const ab = sub(b, a);
  const len2 = dot(ab, ab);
  const t = len2 === 0 ? 0 : Math.max(0, Math.min(1, dot(sub(x, a), ab) / len2));
  return a.map((v, i) => v + t * ab[i]);
}

function closestOnSimplex(x: number[], verts: number[][]): number[] {
  if (verts.length === 2) return closestOnSegment(x, verts[0], verts[1]);
  const w = barycentric(x, verts);
  if (w.every((v) => v >= 0)) return x.slice();
  let best: number[] | null = null;
  for (let i = 0; i < 3; i++) {
    const p = closestOnSegment(x, verts[i], verts[(i + 1) % 3]);
    if (best === null || dist2(x, p) < dist2(x, best)) best = p;
  }
  return best!;
}

/**
 * Clamp an arbitrary point into the union of simplices and report which
 * simplex holds it. Weights come back clipped and renormalized, so requests
 * built from the result can never leave the hull.
 */
export function clampToHull(x: number[], space: SpaceDescription): HullPoint {
  if (space.simplices.length === 0) throw new Error("space has no simplices");
  const coords = space.samples.map((s) => embed(s.r));
  let best: { p: number[]; simplex: number; d: number } | null = null;
  for (let si = 0; si < space.simplices.length; si++) {
    const verts = space.simplices[si].map((i) => coords[i]);
    const p = closestOnSimplex(x, verts);
    const d = dist2(x, p);
    if (best === null || d < best.d) best = { p, simplex: si, d };
    if (d === 0) break;
  }
  const verts = space.simplices[best!.simplex].map((i) => coords[i]);
  let weights = barycentric(best!.p, verts).map((w) => Math.max(0, w));
  const total = weights.reduce((s, v) => s + v, 0);
  weights = weights.map((w) => w / total);
  /* rebuild the point from the clipped weights so point and weights agree */
  const point = verts[0].map((_, axis) =>
    weights.reduce((s, w, vi) => s + w * verts[vi][axis], 0)
  );
  return { point, simplex: best!.simplex, weights };
}

/** Index of the sample within snapping distance of `point`, or null. */
export function snapVertex(
  point: number[],
  space: SpaceDescription,
  radius: number
): number | null {
  let best: number | null = null;
  let bestD = radius * radius;
  space.samples.forEach((s, i) => {
    const d = dist2(point, embed(s.r));
    if (d <= bestD) {
      best = i;
      bestD = d;
    }
  });
  return best;
}

/** Parameter coordinates sent to the service for a hull point. */
export function requestCoordinates(hull: HullPoint, space: SpaceDescription): number[] {
  const dim = space.samples[0].r.length;
  const snapped = snapVertex(hull.point, space, 1e-9);
  if (snapped !== null) return space.samples[snapped].r.slice();
  return hull.point.slice(0, dim);
}

export interface CanvasLayout {
  toCanvas(p: number[]): [number, number];
  fromCanvas(xy: [number, number]): number[];
}

/** Fit the sample cloud into a canvas with a uniform-scale margin. */
export function makeLayout(
  space: SpaceDescription,
  width: number,
  height: number,
  margin = 34
): CanvasLayout {
  const pts = space.samples.map((s) => embed(s.r));
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const lo = [Math.min(...xs), Math.min(...ys)];
  const hi = [Math.max(...xs), Math.max(...ys)];
  const span = [Math.max(hi[0] - lo[0], 1e-9), Math.max(hi[1] - lo[1], 1e-9)];
  const scale = Math.min(
    (width - 2 * margin) / span[0],
    (height - 2 * margin) / span[1]
  );
  const offset = [
    (width - scale * span[0]) / 2,
    (height - scale * span[1]) / 2,
  ];
  return {
    toCanvas(p: number[]): [number, number] {
      return [
        offset[0] + (p[0] - lo[0]) * scale,
        height - (offset[1] + (p[1] - lo[1]) * scale),
      ];
    },
    fromCanvas(xy: [number, number]): number[] {
      return [
        lo[0] + (xy[0] - offset[0]) / scale,
        lo[1] + (height - xy[1] - offset[1]) / scale,
      ];
    },
  };
}
