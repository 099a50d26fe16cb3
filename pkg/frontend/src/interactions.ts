/** Pointer and keyboard wiring: shift-click queries with auto-placement,
 *  panel swaps, surface-constrained dragging with snap-back, the single-axis
 *  rotation ring, and keyword search.
 */

import { ApiError, type Api } from "./api.js";
import type { Camera } from "./camera.js";
import { add, cross, dot, normalize, rayPlane, scale, spinTransform, sub } from "./math.js";
import type { Panel } from "./panel.js";
import { pickScene } from "./pick.js";
import type { Store } from "./state.js";
import type { Mat16, ModelInfo, PlacementInfo, Suggestion, Vec3 } from "./types.js";

const RING_GRAB_PX = 12;
const DRAG_START_PX = 4;

function ringBasis(normal: Vec3): { e1: Vec3; e2: Vec3 } {
  const e1 = normalize(
    Math.abs(normal[2]) > 0.9 ? cross(normal, [1, 0, 0]) : cross(normal, [0, 0, 1]),
  );
  return { e1, e2: cross(normal, e1) };
}

export function wireInteractions(
  canvas: HTMLCanvasElement,
  store: Store,
  api: Api,
  camera: Camera,
  panel: Panel,
  requestDraw: () => void,
) {
  type Mode =
    | { kind: "idle" }
    | { kind: "orbit"; x: number; y: number }
    | { kind: "pan"; x: number; y: number }
    | {
        kind: "drag";
        oid: string;
        startX: number;
        startY: number;
        moved: boolean;
        placement: PlacementInfo;
        parentId: string;
        savedTransform: Mat16;
        grabOffset: Vec3;
      }
    | {
        kind: "ring";
        oid: string;
        placement: PlacementInfo;
        savedTransform: Mat16;
        grabAngle: number;
        delta: number;
      };

  let mode: Mode = { kind: "idle" };

  function sid(): string {
    const s = store.state.sessionId;
    if (!s) throw new Error("no session");
    return s;
  }

  function placementFor(oid: string): PlacementInfo {
    const known = store.state.placements.get(oid);
    if (known) return known;
    // corpus-loaded object: assume it stands on a horizontal surface
    const obj = store.objectById(oid)!;
    const meta = store.state.models.get(obj.modelId);
    const h = meta ? meta.bboxDims[2] / 2 : 0;
    return {
      anchor: [obj.transform[12], obj.transform[13], obj.transform[14] - h],
      surfaceNormal: [0, 0, 1],
      face: "bottom",
      alpha: 0,
    };
  }

  function ringAngleAt(x: number, y: number, placement: PlacementInfo): number | null {
    const ray = camera.screenToRay(x, y);
    const hit = rayPlane(ray.origin, ray.direction, {
      point: placement.anchor,
      normal: placement.surfaceNormal,
    });
    if (!hit) return null;
    const { e1, e2 } = ringBasis(placement.surfaceNormal);
    const rel = sub(hit, placement.anchor);
    return Math.atan2(dot(rel, e2), dot(rel, e1));
  }

  function nearRing(x: number, y: number, oid: string): boolean {
    const placement = placementFor(oid);
    const obj = store.objectById(oid);
    const meta = obj && store.state.models.get(obj.modelId);
    if (!meta) return false;
    const radius = Math.max(meta.bboxDims[0], meta.bboxDims[1]) * 0.65 + 0.12;
    const { e1, e2 } = ringBasis(placement.surfaceNormal);
    let best = Infinity;
    for (let i = 0; i < 64; i++) {
      const a = (i / 64) * Math.PI * 2;
      const p = add(
        placement.anchor,
        add(scale(e1, radius * Math.cos(a)), scale(e2, radius * Math.sin(a))),
      );
      const s = camera.worldToScreen(p);
      best = Math.min(best, Math.hypot(s.x - x, s.y - y));
    }
    return best <= RING_GRAB_PX;
  }

  // ---------------------------------------------------------- suggestion flow

  async function suggestFlow(x: number, y: number): Promise<void> {
    const ray = camera.screenToRay(x, y);
    let resp;
    try {
      resp = await store.enqueue(() =>
        api.suggestAlongRay(sid(), ray.origin, ray.direction),
      );
    } catch (err) {
      store.toast(err instanceof ApiError && err.status === 422 ? "no surface there" : String(err));
      return;
    }
    if (resp.suggestions.length === 0) {
      store.toast("nothing to suggest here");
      return;
    }
    const top = resp.suggestions[0];
    try {
      const ack = await insertSuggestion(top, top.representativeModelId, "auto");
      store.setPanel({
        context: resp.context,
        suggestions: resp.suggestions,
        placedId: ack.objectId ?? null,
        placedCategory: top.category,
        screen: { x, y },
      });
      store.select(ack.objectId ?? null);
      panel.show(
        x + 14,
        y + 10,
        resp.suggestions,
        top.category,
        `${resp.context.surfaceType} on ${resp.context.parentCategory}`,
      );
    } catch (err) {
      store.toast(`placement failed: ${String(err)}`);
    }
    requestDraw();
  }

  function insertSuggestion(s: Suggestion, modelId: string, source: string) {
    return store.enqueue(async () => {
      const ack = await api.insertObject(sid(), {
        modelId,
        parentId: s.parentId,
        anchor: s.anchor,
        surfaceNormal: s.surfaceNormal,
        face: s.face,
        alpha: s.alpha,
        source,
        expectedRevision: store.state.revision,
      });
      store.applyInsert(ack.object!, ack.revision, {
        anchor: s.anchor,
        surfaceNormal: s.surfaceNormal,
        face: s.face,
        alpha: s.alpha,
      });
      return ack;
    });
  }

  /** Replace whatever sits at the query anchor with a different pick. */
  async function swapTo(s: Suggestion, modelId: string, source: string): Promise<void> {
    const p = store.state.panel;
    if (!p) return;
    try {
      if (p.placedId) {
        const doomed = p.placedId;
        await store.enqueue(async () => {
          const ack = await api.deleteObject(sid(), doomed, store.state.revision);
          store.applyDelete(ack.removed ?? [doomed], ack.revision);
        });
      }
      const ack = await insertSuggestion(s, modelId, source);
      p.placedId = ack.objectId ?? null;
      p.placedCategory = s.category;
      panel.markPlaced(s.category);
      store.select(ack.objectId ?? null);
    } catch (err) {
      store.toast(`swap failed: ${String(err)}`);
    }
    requestDraw();
  }

  async function searchFlow(q: string): Promise<void> {
    try {
      const res = await api.search(sid(), q);
      panel.showSearchResults(res.models);
    } catch (err) {
      store.toast(`search failed: ${String(err)}`);
    }
  }

  /** A search pick lands at the original query point; the server chooses the
   *  attachment face from its priors for this category. */
  async function placeSearchResult(m: ModelInfo): Promise<void> {
    const p = store.state.panel;
    if (!p) return;
    try {
      if (p.placedId) {
        const doomed = p.placedId;
        await store.enqueue(async () => {
          const ack = await api.deleteObject(sid(), doomed, store.state.revision);
          store.applyDelete(ack.removed ?? [doomed], ack.revision);
        });
      }
      const ack = await store.enqueue(async () => {
        const got = await api.insertObject(sid(), {
          modelId: m.modelId,
          parentId: p.context.parentId,
          anchor: p.context.pos,
          surfaceNormal: p.context.surfaceNormal,
          source: "search",
          expectedRevision: store.state.revision,
        });
        const placed = got.object!;
        store.applyInsert(placed, got.revision, {
          anchor: p.context.pos,
          surfaceNormal: p.context.surfaceNormal,
          face: "bottom",
          alpha: 0,
        });
        return got;
      });
      p.placedId = ack.objectId ?? null;
      p.placedCategory = m.category;
      panel.markPlaced(m.category);
      store.select(ack.objectId ?? null);
    } catch (err) {
      store.toast(`placement failed: ${String(err)}`);
    }
    requestDraw();
  }

  // ------------------------------------------------------------- mutations

  function commitRotation(oid: string, alpha: number, saved: Mat16): void {
    store
      .enqueue(async () => {
        const ack = await api.updateObject(sid(), oid, {
          alpha,
          expectedRevision: store.state.revision,
        });
        const placement = { ...placementFor(oid), alpha };
        store.applyUpdate(ack.object!, ack.revision, placement);
      })
      .catch((err) => {
        restoreTransform(oid, saved);
        store.toast(`rotation failed: ${String(err)}`);
      });
  }

  function commitMove(
    oid: string,
    anchor: Vec3,
    parentId: string,
    saved: Mat16,
  ): void {
    store
      .enqueue(async () => {
        const ack = await api.updateObject(sid(), oid, {
          anchor,
          parentId,
          expectedRevision: store.state.revision,
        });
        const obj = ack.object!;
        const placement = {
          ...placementFor(oid),
          anchor,
        };
        store.applyUpdate(obj, ack.revision, placement);
      })
      .catch((err) => {
        restoreTransform(oid, saved);
        store.toast(err instanceof ApiError ? err.message : String(err));
      });
  }

  function restoreTransform(oid: string, t: Mat16): void {
    const obj = store.objectById(oid);
    if (obj) obj.transform = t;
    requestDraw();
  }

  function deleteSelection(): void {
    const oid = store.state.selection;
    if (!oid) return;
    store
      .enqueue(async () => {
        const ack = await api.deleteObject(sid(), oid, store.state.revision);
        store.applyDelete(ack.removed ?? [oid], ack.revision);
      })
      .catch((err) => store.toast(`delete failed: ${String(err)}`));
  }

  // ---------------------------------------------------------- pointer wiring

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    const { offsetX: x, offsetY: y } = ev;

    if (ev.shiftKey) {
      void suggestFlow(x, y);
      return;
    }
    if (ev.button === 1 || ev.button === 2 || ev.altKey) {
      mode = { kind: "pan", x, y };
      return;
    }

    const scene = store.state.scene;
    const selected = store.state.selection;
    if (selected && nearRing(x, y, selected)) {
      const placement = placementFor(selected);
      const angle = ringAngleAt(x, y, placement);
      const obj = store.objectById(selected)!;
      if (angle !== null) {
        mode = {
          kind: "ring",
          oid: selected,
          placement,
          savedTransform: obj.transform.slice(),
          grabAngle: angle,
          delta: 0,
        };
        return;
      }
    }

    if (scene) {
      const hit = pickScene(camera.screenToRay(x, y), scene, store.state.models, {
        objectsOnly: true,
      });
      if (hit) {
        store.select(hit.object.id);
        const parentId = store.parentIdOf(hit.object.id) ?? "";
        mode = {
          kind: "drag",
          oid: hit.object.id,
          startX: x,
          startY: y,
          moved: false,
          placement: placementFor(hit.object.id),
          parentId,
          savedTransform: hit.object.transform.slice(),
          grabOffset: sub(hit.point, placementFor(hit.object.id).anchor),
        };
        requestDraw();
        return;
      }
      store.select(null);
    }
    mode = { kind: "orbit", x, y };
    requestDraw();
  });

  canvas.addEventListener("pointermove", (ev) => {
    const { offsetX: x, offsetY: y } = ev;
    if (mode.kind === "orbit") {
      camera.orbit(x - mode.x, y - mode.y);
      mode = { kind: "orbit", x, y };
      requestDraw();
    } else if (mode.kind === "pan") {
      camera.pan(x - mode.x, y - mode.y);
      mode = { kind: "pan", x, y };
      requestDraw();
    } else if (mode.kind === "drag") {
      if (!mode.moved && Math.hypot(x - mode.startX, y - mode.startY) < DRAG_START_PX)
        return;
      mode.moved = true;
      const ray = camera.screenToRay(x, y);
      const onPlane = rayPlane(ray.origin, ray.direction, {
        point: mode.placement.anchor,
        normal: mode.placement.surfaceNormal,
      });
      if (!onPlane) return;
      const anchor = sub(onPlane, mode.grabOffset);
      const obj = store.objectById(mode.oid);
      if (obj) {
        const shift = sub(anchor, mode.placement.anchor);
        const t = mode.savedTransform.slice();
        t[12] += shift[0];
        t[13] += shift[1];
        t[14] += shift[2];
        obj.transform = t;
        requestDraw();
      }
    } else if (mode.kind === "ring") {
      const angle = ringAngleAt(x, y, mode.placement);
      if (angle === null) return;
      mode.delta = angle - mode.grabAngle;
      const obj = store.objectById(mode.oid);
      if (obj) {
        obj.transform = spinTransform(
          mode.savedTransform,
          mode.placement.anchor,
          mode.placement.surfaceNormal,
          mode.delta,
        );
        requestDraw();
      }
    }
  });

  canvas.addEventListener("pointerup", (ev) => {
    const finished = mode;
    mode = { kind: "idle" };
    if (finished.kind === "ring") {
      const alpha = finished.placement.alpha + finished.delta;
      commitRotation(finished.oid, alpha, finished.savedTransform);
      return;
    }
    if (finished.kind !== "drag" || !finished.moved) return;

    const { offsetX: x, offsetY: y } = ev;
    const scene = store.state.scene!;
    // dropping onto another surface re-parents; otherwise slide on the own plane
    const drop = pickScene(camera.screenToRay(x, y), scene, store.state.models, {
      ignore: store.subtreeIds(finished.oid),
    });
    if (drop && drop.object.id !== finished.parentId) {
      commitMove(finished.oid, drop.point, drop.object.id, finished.savedTransform);
      return;
    }
    const ray = camera.screenToRay(x, y);
    const onPlane = rayPlane(ray.origin, ray.direction, {
      point: finished.placement.anchor,
      normal: finished.placement.surfaceNormal,
    });
    if (!onPlane) {
      restoreTransform(finished.oid, finished.savedTransform);
      return;
    }
    commitMove(
      finished.oid,
      sub(onPlane, finished.grabOffset),
      finished.parentId,
      finished.savedTransform,
    );
  });

  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    camera.dolly(ev.deltaY < 0 ? 1.1 : 1 / 1.1);
    requestDraw();
  });

  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());

  window.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement) return;
    const oid = store.state.selection;
    if ((ev.key === "[" || ev.key === "]") && oid) {
      const placement = placementFor(oid);
      const step = ((ev.key === "]" ? 15 : -15) * Math.PI) / 180;
      const obj = store.objectById(oid)!;
      commitRotation(oid, placement.alpha + step, obj.transform.slice());
    } else if ((ev.key === "Delete" || ev.key === "Backspace") && oid) {
      deleteSelection();
    } else if (ev.key === "Escape") {
      panel.hide();
      store.setPanel(null);
      store.select(null);
      requestDraw();
    }
  });

  return { suggestFlow, swapTo, searchFlow, placeSearchResult };
}
