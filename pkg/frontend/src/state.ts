/** Client-side session state and the serialized mutation queue.
 *
 * The server is the source of truth: every mutation resolves with a revision
 * and the store applies acks in order. Queueing mutations one behind another
 * keeps expectedRevision meaningful even when the UI fires fast.
 */

import type {
  ModelInfo,
  PlacementInfo,
  QueryContext,
  SceneDoc,
  SceneObject,
  Suggestion,
} from "./types.js";

export interface PendingPanel {
  context: QueryContext;
  suggestions: Suggestion[];
  /** object currently sitting at the query anchor (auto-placed or swapped) */
  placedId: string | null;
  placedCategory: string | null;
  screen: { x: number; y: number };
}

export interface UiState {
  sessionId: string | null;
  revision: number;
  scene: SceneDoc | null;
  models: Map<string, ModelInfo>;
  placements: Map<string, PlacementInfo>;
  selection: string | null;
  panel: PendingPanel | null;
  toast: string | null;
  busy: boolean;
}

export function createStore() {
  const state: UiState = {
    sessionId: null,
    revision: -1,
    scene: null,
    models: new Map(),
    placements: new Map(),
    selection: null,
    panel: null,
    toast: null,
    busy: false,
  };

  const listeners = new Set<() => void>();
  let tail: Promise<unknown> = Promise.resolve();
  let pending = 0;
  let toastTimer: ReturnType<typeof setTimeout> | null = null;

  function emit(): void {
    for (const fn of listeners) fn();
  }

  const store = {
    state,

    subscribe(fn: () => void): () => void {
      listeners.add(fn);
      return () => listeners.delete(fn);
    },

    /** Queue a server mutation; each starts only after the previous settled. */
    enqueue<T>(op: () => Promise<T>): Promise<T> {
      const run = tail.then(
        () => op(),
        () => op(),
      );
      tail = run.then(
        () => undefined,
        () => undefined,
      );
      pending += 1;
      state.busy = true;
      emit();
      // settle via .then on both paths; .finally would mint a second
      // rejected promise nobody handles
      const settled = () => {
        pending -= 1;
        state.busy = pending > 0;
        emit();
      };
      run.then(settled, settled);
      return run;
    },

    applySession(sessionId: string, scene: SceneDoc, revision: number): void {
      state.sessionId = sessionId;
      state.scene = scene;
      state.revision = revision;
      const ids = new Set(scene.objects.map((o) => o.id));
      for (const oid of [...state.placements.keys()])
        if (!ids.has(oid)) state.placements.delete(oid);
      if (state.selection && !ids.has(state.selection)) state.selection = null;
      emit();
    },

    applyInsert(obj: SceneObject, revision: number, placement: PlacementInfo): void {
      if (!state.scene) return;
      state.scene.objects.push(obj);
      state.scene.supportEdges.push([obj.id, obj.parentId ?? ""]);
      state.placements.set(obj.id, placement);
      state.revision = revision;
      emit();
    },

    applyUpdate(obj: SceneObject, revision: number, placement: PlacementInfo): void {
      if (!state.scene) return;
      state.scene.objects = state.scene.objects.map((o) => (o.id === obj.id ? obj : o));
      state.scene.supportEdges = state.scene.supportEdges
        .filter(([c]) => c !== obj.id)
        .concat([[obj.id, obj.parentId ?? ""]]);
      state.placements.set(obj.id, placement);
      state.revision = revision;
      emit();
    },

    applyDelete(removed: string[], revision: number): void {
      if (!state.scene) return;
      const gone = new Set(removed);
      state.scene.objects = state.scene.objects.filter((o) => !gone.has(o.id));
      state.scene.supportEdges = state.scene.supportEdges.filter(
        ([c, p]) => !gone.has(c) && !gone.has(p),
      );
      for (const oid of removed) state.placements.delete(oid);
      if (state.selection && gone.has(state.selection)) state.selection = null;
      if (state.panel?.placedId && gone.has(state.panel.placedId)) {
        state.panel.placedId = null;
        state.panel.placedCategory = null;
      }
      state.revision = revision;
      emit();
    },

    objectById(oid: string | null): SceneObject | undefined {
      if (!oid || !state.scene) return undefined;
      return state.scene.objects.find((o) => o.id === oid);
    },

    parentIdOf(oid: string): string | null {
      const edge = state.scene?.supportEdges.find(([c]) => c === oid);
      return edge ? edge[1] : null;
    },

    /** ids of oid and everything transitively supported by it */
    subtreeIds(oid: string): Set<string> {
      const out = new Set([oid]);
      const edges = state.scene?.supportEdges ?? [];
      let grew = true;
      while (grew) {
        grew = false;
        for (const [c, p] of edges)
          if (out.has(p) && !out.has(c)) {
            out.add(c);
            grew = true;
          }
      }
      return out;
    },

    select(oid: string | null): void {
      state.selection = oid;
      emit();
    },

    setPanel(panel: PendingPanel | null): void {
      state.panel = panel;
      emit();
    },

    setModels(models: ModelInfo[]): void {
      for (const m of models) state.models.set(m.modelId, m);
      emit();
    },

    toast(message: string, ms = 2600): void {
      state.toast = message;
      emit();
      if (toastTimer) clearTimeout(toastTimer);
      toastTimer = setTimeout(() => {
        state.toast = null;
        emit();
      }, ms);
    },
  };
  return store;
}

export type Store = ReturnType<typeof createStore>;
