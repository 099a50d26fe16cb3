/** Ray picking against the same box geometry the server rays see.
 *
 * The room shell is special: its solid box would swallow every ray from
 * outside, so architecture hits count only when the surface faces the camera
 * from inside (floor and the two far walls).
 */

import { dot, rayBox, scale } from "./math.js";
import type { Ray } from "./camera.js";
import type { ModelInfo, SceneDoc, SceneObject, Vec3 } from "./types.js";

export interface PickResult {
  object: SceneObject;
  point: Vec3;
  normal: Vec3;
  distance: number;
}

export interface PickOptions {
  /** object ids the ray should pass through (e.g. a dragged subtree) */
  ignore?: Set<string>;
  /** when false, architecture can be hit on interior surfaces */
  objectsOnly?: boolean;
}

export function pickScene(
  ray: Ray,
  scene: SceneDoc,
  models: Map<string, ModelInfo>,
  opts: PickOptions = {},
): PickResult | null {
  let best: PickResult | null = null;
  for (const obj of scene.objects) {
    if (opts.ignore?.has(obj.id)) continue;
    const meta = models.get(obj.modelId);
    if (!meta) continue;

    if (obj.isArchitecture) {
      if (opts.objectsOnly) continue;
      const hit = interiorHit(ray, obj, meta.bboxDims);
      if (hit && (!best || hit.distance < best.distance)) best = { object: obj, ...hit };
      continue;
    }

    const hit = rayBox(ray.origin, ray.direction, obj.transform, meta.bboxDims);
    if (hit && (!best || hit.distance < best.distance)) best = { object: obj, ...hit };
  }
  return best;
}

/** Farthest box intersection whose surface faces back toward the ray: the
 *  inside of the room as seen through its transparent near walls. */
function interiorHit(
  ray: Ray,
  obj: SceneObject,
  dims: Vec3,
): { point: Vec3; normal: Vec3; distance: number } | null {
  const entry = rayBox(ray.origin, ray.direction, obj.transform, dims);
  if (!entry) return null;
  // step past the entry face and intersect again to reach the far side
  const inside: Vec3 = [
    entry.point[0] + ray.direction[0] * 1e-4,
    entry.point[1] + ray.direction[1] * 1e-4,
    entry.point[2] + ray.direction[2] * 1e-4,
  ];
  const exit = rayBox(inside, ray.direction, obj.transform, dims);
  if (!exit) return null;
  const inward = scale(exit.normal, -1);
  if (dot(inward, ray.direction) >= 0) return null;
  return {
    point: exit.point,
    normal: inward,
    distance: entry.distance + 1e-4 + exit.distance,
  };
}
