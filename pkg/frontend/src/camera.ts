/** Orthographic orbit camera for a z-up world, isometric by default.
 *
 * Screen rays are what the server consumes for queries, so screenToRay and
 * worldToScreen must agree: projecting a world point and casting back must
 * yield a ray that passes through that point.
 */

import { add, cross, dot, normalize, scale, sub } from "./math.js";
import type { Vec3 } from "./types.js";

export interface ScreenPoint {
  x: number;
  y: number;
  /** distance along the view direction; larger is farther */
  depth: number;
}

export interface Ray {
  origin: Vec3;
  direction: Vec3;
}

const PULL_BACK = 50; // meters behind the target plane for ray origins

export function createCamera(width: number, height: number) {
  const cam = {
    yaw: Math.PI / 4,
    pitch: Math.PI / 5.5,
    zoom: 90, // pixels per meter
    target: [0, 0, 1] as Vec3,
    width,
    height,

    /** view direction, from the camera into the scene */
    forward(): Vec3 {
      const cp = Math.cos(cam.pitch);
      return [cp * Math.cos(cam.yaw), cp * Math.sin(cam.yaw), -Math.sin(cam.pitch)];
    },

    right(): Vec3 {
      return normalize(cross(cam.forward(), [0, 0, 1]));
    },

    up(): Vec3 {
      return cross(cam.right(), cam.forward());
    },

    worldToScreen(p: Vec3): ScreenPoint {
      const rel = sub(p, cam.target);
      return {
        x: cam.width / 2 + dot(rel, cam.right()) * cam.zoom,
        y: cam.height / 2 - dot(rel, cam.up()) * cam.zoom,
        depth: dot(rel, cam.forward()),
      };
    },

    screenToRay(x: number, y: number): Ray {
      const f = cam.forward();
      const sx = (x - cam.width / 2) / cam.zoom;
      const sy = (cam.height / 2 - y) / cam.zoom;
      const onPlane = add(cam.target, add(scale(cam.right(), sx), scale(cam.up(), sy)));
      return { origin: sub(onPlane, scale(f, PULL_BACK)), direction: f };
    },

    orbit(dxPx: number, dyPx: number): void {
      cam.yaw -= dxPx * 0.008;
      cam.pitch = Math.min(
        Math.PI / 2 - 0.05,
        Math.max(0.08, cam.pitch + dyPx * 0.008),
      );
    },

    pan(dxPx: number, dyPx: number): void {
      const move = add(
        scale(cam.right(), -dxPx / cam.zoom),
        scale(cam.up(), dyPx / cam.zoom),
      );
      cam.target = add(cam.target, move);
    },

    dolly(factor: number): void {
      cam.zoom = Math.min(600, Math.max(12, cam.zoom * factor));
    },

    resize(w: number, h: number): void {
      cam.width = w;
      cam.height = h;
    },
  };
  return cam;
}

export type Camera = ReturnType<typeof createCamera>;
