/** Canvas2D isometric renderer: flat-shaded boxes with category labels.
 *
 * Models render as their bounding boxes on purpose; the engine's contract is
 * placement, not appearance. Architecture is drawn hollow (floor plus the
 * walls facing away from the camera) so the interior stays visible.
 */

import { add, applyLinear, boxCorners, cross, dot, normalize, scale, sub } from "./math.js";
import type { Camera } from "./camera.js";
import type { UiState } from "./state.js";
import type { SceneObject, Vec3 } from "./types.js";

// corner index = (sx>0 ? 4 : 0) + (sy>0 ? 2 : 0) + (sz>0 ? 1 : 0)
const FACES: { idx: [number, number, number, number]; n: Vec3 }[] = [
  { idx: [0, 1, 3, 2], n: [-1, 0, 0] },
  { idx: [4, 5, 7, 6], n: [1, 0, 0] },
  { idx: [0, 1, 5, 4], n: [0, -1, 0] },
  { idx: [2, 3, 7, 6], n: [0, 1, 0] },
  { idx: [0, 2, 6, 4], n: [0, 0, -1] },
  { idx: [1, 3, 7, 5], n: [0, 0, 1] },
];

const LIGHT: Vec3 = normalize([0.4, 0.25, 0.88]);

const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];

function categoryColor(category: string): string {
  let h = 0;
  for (let i = 0; i < category.length; i++) h = (h * 31 + category.charCodeAt(i)) >>> 0;
  return PALETTE[h % PALETTE.length];
}

function shade(hex: string, k: number): string {
  const v = parseInt(hex.slice(1), 16);
  const ch = (sh: number) =>
    Math.max(0, Math.min(255, Math.round(((v >> sh) & 0xff) * k)));
  return `rgb(${ch(16)},${ch(8)},${ch(0)})`;
}

export function createRenderer(canvas: HTMLCanvasElement) {
  const ctx = canvas.getContext("2d")!;

  function poly(points: { x: number; y: number }[]): void {
    ctx.beginPath();
    ctx.moveTo(points[0].x, points[0].y);
    for (let i = 1; i < points.length; i++) ctx.lineTo(points[i].x, points[i].y);
    ctx.closePath();
  }

  function drawBox(obj: SceneObject, dims: Vec3, cam: Camera, selected: boolean, category: string): void {
    const corners = boxCorners(obj.transform, dims);
    const screen = corners.map((c) => cam.worldToScreen(c));
    const fwd = cam.forward();
    const base = categoryColor(category);

    for (const face of FACES) {
      const n = normalize(applyLinear(obj.transform, face.n));
      if (dot(n, fwd) >= 0) continue; // facing away
      const lit = 0.55 + 0.45 * Math.max(0, dot(n, LIGHT));
      poly(face.idx.map((i) => screen[i]));
      ctx.fillStyle = shade(base, lit);
      ctx.fill();
      ctx.strokeStyle = selected ? "#ffffff" : "rgba(10,14,20,0.65)";
      ctx.lineWidth = selected ? 2 : 1;
      ctx.stroke();
    }
  }

  function drawArchitecture(obj: SceneObject, dims: Vec3, cam: Camera): void {
    const corners = boxCorners(obj.transform, dims);
    const screen = corners.map((c) => cam.worldToScreen(c));
    const fwd = cam.forward();

    for (const face of FACES) {
      const n = normalize(applyLinear(obj.transform, face.n));
      const floor = face.n[2] === -1;
      // keep the floor and the walls the camera looks at from inside
      if (!floor && dot(n, fwd) <= 0) continue;
      if (face.n[2] === 1) continue; // no ceiling
      poly(face.idx.map((i) => screen[i]));
      ctx.fillStyle = floor ? "#222832" : "#1b212b";
      ctx.fill();
      ctx.strokeStyle = "#343d4d";
      ctx.lineWidth = 1;
      ctx.stroke();
    }

    // floor grid, 1 m pitch
    const t = obj.transform;
    const [hx, hy, hz] = [dims[0] / 2, dims[1] / 2, dims[2] / 2];
    ctx.strokeStyle = "rgba(90,104,128,0.35)";
    ctx.lineWidth = 1;
    for (let x = Math.ceil(-hx); x <= hx; x++) {
      const a = cam.worldToScreen(applyPoint(t, [x, -hy, -hz]));
      const b = cam.worldToScreen(applyPoint(t, [x, hy, -hz]));
      line(a, b);
    }
    for (let y = Math.ceil(-hy); y <= hy; y++) {
      const a = cam.worldToScreen(applyPoint(t, [-hx, y, -hz]));
      const b = cam.worldToScreen(applyPoint(t, [hx, y, -hz]));
      line(a, b);
    }
  }

  function applyPoint(t: number[], p: Vec3): Vec3 {
    return [
      t[0] * p[0] + t[4] * p[1] + t[8] * p[2] + t[12],
      t[1] * p[0] + t[5] * p[1] + t[9] * p[2] + t[13],
      t[2] * p[0] + t[6] * p[1] + t[10] * p[2] + t[14],
    ];
  }

  function line(a: { x: number; y: number }, b: { x: number; y: number }): void {
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }

  function drawRing(center: Vec3, normal: Vec3, radius: number, cam: Camera, marker: Vec3 | null): void {
    const e1 = normalize(
      Math.abs(normal[2]) > 0.9 ? cross(normal, [1, 0, 0]) : cross(normal, [0, 0, 1]),
    );
    const e2 = cross(normal, e1);
    ctx.beginPath();
    for (let i = 0; i <= 64; i++) {
      const a = (i / 64) * Math.PI * 2;
      const p = add(center, add(scale(e1, radius * Math.cos(a)), scale(e2, radius * Math.sin(a))));
      const s = cam.worldToScreen(p);
      if (i === 0) ctx.moveTo(s.x, s.y);
      else ctx.lineTo(s.x, s.y);
    }
    ctx.strokeStyle = "#facc15";
    ctx.lineWidth = 2;
    ctx.stroke();
    if (marker) {
      const c = cam.worldToScreen(center);
      const m = cam.worldToScreen(marker);
      ctx.beginPath();
      ctx.moveTo(c.x, c.y);
      ctx.lineTo(m.x, m.y);
      ctx.strokeStyle = "#facc15";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
  }

  return {
    draw(state: UiState, cam: Camera): void {
      ctx.fillStyle = "#11151c";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      if (!state.scene) return;

      const arch = state.scene.objects.filter((o) => o.isArchitecture);
      const rest = state.scene.objects
        .filter((o) => !o.isArchitecture)
        .map((o) => ({ o, depth: cam.worldToScreen(centroidOf(o)).depth }))
        .sort((a, b) => b.depth - a.depth);

      for (const obj of arch) {
        const meta = state.models.get(obj.modelId);
        if (meta) drawArchitecture(obj, meta.bboxDims, cam);
      }
      for (const { o } of rest) {
        const meta = state.models.get(o.modelId);
        if (!meta) continue;
        drawBox(o, meta.bboxDims, cam, o.id === state.selection, meta.category);

        const top = cam.worldToScreen(
          applyPoint(o.transform, [0, 0, meta.bboxDims[2] / 2]),
        );
        ctx.fillStyle = "rgba(226,232,240,0.92)";
        ctx.font = "11px system-ui, sans-serif";
        ctx.textAlign = "center";
        ctx.fillText(meta.category, top.x, top.y - 6);
      }

      const sel = state.scene.objects.find((o) => o.id === state.selection);
      if (sel && !sel.isArchitecture) {
        const meta = state.models.get(sel.modelId);
        const placement = state.placements.get(sel.id);
        if (meta) {
          const normal: Vec3 = placement ? placement.surfaceNormal : [0, 0, 1];
          const anchor: Vec3 = placement
            ? placement.anchor
            : sub(centroidOf(sel), scale([0, 0, 1], meta.bboxDims[2] / 2));
          const radius =
            Math.max(meta.bboxDims[0], meta.bboxDims[1]) * 0.65 + 0.12;
          const front = normalize(applyLinear(sel.transform, meta.front));
          drawRing(anchor, normal, radius, cam, add(anchor, scale(front, radius)));
        }
      }
    },
  };
}

function centroidOf(obj: SceneObject): Vec3 {
  return [obj.transform[12], obj.transform[13], obj.transform[14]];
}

export type Renderer = ReturnType<typeof createRenderer>;
