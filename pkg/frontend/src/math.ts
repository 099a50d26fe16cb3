/** Minimal vector/transform helpers for picking and rendering.
 *
 * Scene transforms are rigid (rotation + translation), stored column-major,
 * so inverses are transpose + negated offset and box tests can run in the
 * model's local frame.
 */

import type { Mat16, Vec3 } from "./types.js";

export const add = (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
export const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
export const scale = (a: Vec3, s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s];
export const dot = (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
export const cross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
export const len = (a: Vec3): number => Math.hypot(a[0], a[1], a[2]);

export function normalize(a: Vec3): Vec3 {
  const l = len(a);
  if (l < 1e-12) throw new Error("cannot normalize a zero vector");
  return scale(a, 1 / l);
}

export function applyTransform(t: Mat16, p: Vec3): Vec3 {
  return [
    t[0] * p[0] + t[4] * p[1] + t[8] * p[2] + t[12],
    t[1] * p[0] + t[5] * p[1] + t[9] * p[2] + t[13],
    t[2] * p[0] + t[6] * p[1] + t[10] * p[2] + t[14],
  ];
}

/** Rotate a direction (ignores translation). */
export function applyLinear(t: Mat16, v: Vec3): Vec3 {
  return [
    t[0] * v[0] + t[4] * v[1] + t[8] * v[2],
    t[1] * v[0] + t[5] * v[1] + t[9] * v[2],
    t[2] * v[0] + t[6] * v[1] + t[10] * v[2],
  ];
}

/** World point into the transform's local frame (rigid inverse). */
export function toLocal(t: Mat16, p: Vec3): Vec3 {
  const d: Vec3 = [p[0] - t[12], p[1] - t[13], p[2] - t[14]];
  return [
    t[0] * d[0] + t[1] * d[1] + t[2] * d[2],
    t[4] * d[0] + t[5] * d[1] + t[6] * d[2],
    t[8] * d[0] + t[9] * d[1] + t[10] * d[2],
  ];
}

export function toLocalDir(t: Mat16, v: Vec3): Vec3 {
  return [
    t[0] * v[0] + t[1] * v[1] + t[2] * v[2],
    t[4] * v[0] + t[5] * v[1] + t[6] * v[2],
    t[8] * v[0] + t[9] * v[1] + t[10] * v[2],
  ];
}

export function translationOf(t: Mat16): Vec3 {
  return [t[12], t[13], t[14]];
}

/** Eight world-space corners of a box of `dims` centered on the local origin. */
export function boxCorners(t: Mat16, dims: Vec3): Vec3[] {
  const [hx, hy, hz] = [dims[0] / 2, dims[1] / 2, dims[2] / 2];
  const out: Vec3[] = [];
  for (const sx of [-1, 1])
    for (const sy of [-1, 1])
      for (const sz of [-1, 1]) out.push(applyTransform(t, [sx * hx, sy * hy, sz * hz]));
  return out;
}

/** Rodrigues rotation of v about a unit axis. */
export function rotateVec(v: Vec3, axis: Vec3, angle: number): Vec3 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const k = dot(axis, v) * (1 - c);
  const cx = cross(axis, v);
  return [
    v[0] * c + cx[0] * s + axis[0] * k,
    v[1] * c + cx[1] * s + axis[1] * k,
    v[2] * c + cx[2] * s + axis[2] * k,
  ];
}

/** Transform spun by `angle` about the axis through `pivot`; used for live
 *  rotation previews before the server ack arrives. */
export function spinTransform(t: Mat16, pivot: Vec3, axis: Vec3, angle: number): Mat16 {
  const out = t.slice();
  for (const col of [0, 4, 8]) {
    const v = rotateVec([t[col], t[col + 1], t[col + 2]], axis, angle);
    out[col] = v[0];
    out[col + 1] = v[1];
    out[col + 2] = v[2];
  }
  const rel = rotateVec(sub(translationOf(t), pivot), axis, angle);
  const p = add(pivot, rel);
  out[12] = p[0];
  out[13] = p[1];
  out[14] = p[2];
  return out;
}

export interface Plane {
  point: Vec3;
  normal: Vec3;
}

export function rayPlane(origin: Vec3, dir: Vec3, plane: Plane): Vec3 | null {
  const denom = dot(dir, plane.normal);
  if (Math.abs(denom) < 1e-9) return null;
  const t = dot(sub(plane.point, origin), plane.normal) / denom;
  if (t < 0) return null;
  return add(origin, scale(dir, t));
}

export interface BoxHit {
  distance: number;
  point: Vec3;
  normal: Vec3; // world space, outward
}

/** Slab test against an oriented box; null when the ray misses. */
export function rayBox(origin: Vec3, dir: Vec3, t: Mat16, dims: Vec3): BoxHit | null {
  const o = toLocal(t, origin);
  const d = toLocalDir(t, dir);
  const half: Vec3 = [dims[0] / 2, dims[1] / 2, dims[2] / 2];

  let tmin = -Infinity;
  let tmax = Infinity;
  let entryAxis = 0;
  let entrySide = 1;
  let exitAxis = 0;
  let exitSide = 1;
  for (let i = 0; i < 3; i++) {
    if (Math.abs(d[i]) < 1e-12) {
      if (o[i] < -half[i] || o[i] > half[i]) return null;
      continue;
    }
    let t1 = (-half[i] - o[i]) / d[i];
    let t2 = (half[i] - o[i]) / d[i];
    let s = -1;
    if (t1 > t2) {
      [t1, t2] = [t2, t1];
      s = 1;
    }
    if (t1 > tmin) {
      tmin = t1;
      entryAxis = i;
      entrySide = s;
    }
    if (t2 < tmax) {
      tmax = t2;
      exitAxis = i;
      exitSide = d[i] > 0 ? 1 : -1;
    }
    if (tmin > tmax) return null;
  }
  if (tmax < 0) return null;
  // starting inside the box, the first surface met is the exit face
  const inside = tmin < 0;
  const hitT = inside ? tmax : tmin;
  const localN: Vec3 = [0, 0, 0];
  if (inside) localN[exitAxis] = exitSide;
  else localN[entryAxis] = entrySide;
  return {
    distance: hitT,
    point: add(origin, scale(dir, hitT)),
    normal: applyLinear(t, localN),
  };
}
