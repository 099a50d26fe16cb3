/** Boot: open a session, wire the canvas, panel, and toolbar together. */

import { createApi } from "./api.js";
import { createCamera } from "./camera.js";
import { wireInteractions } from "./interactions.js";
import { createPanel } from "./panel.js";
import { createRenderer } from "./render.js";
import { createStore } from "./state.js";

const params = new URLSearchParams(location.search);
const api = createApi(params.get("api") ?? "http://127.0.0.1:8000");
const sceneType = params.get("sceneType") ?? "office";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const statusLine = document.getElementById("status") as HTMLSpanElement;
const toastBox = document.getElementById("toast") as HTMLDivElement;
const doneButton = document.getElementById("done") as HTMLButtonElement;

const store = createStore();
const camera = createCamera(window.innerWidth, window.innerHeight);
const renderer = createRenderer(canvas);

let drawQueued = false;
function requestDraw(): void {
  if (drawQueued) return;
  drawQueued = true;
  requestAnimationFrame(() => {
    drawQueued = false;
    renderer.draw(store.state, camera);
  });
}

/** late-bound so panel callbacks can reach the interaction flows */
let flows: ReturnType<typeof wireInteractions>;

const panel = createPanel(document.body, {
  thumbnailUrl: (mid) => api.thumbnailUrl(mid),
  onPickSuggestion: (s) => {
    void flows.swapTo(s, s.representativeModelId, "suggestion").then(fetchMissingModels);
  },
  onPickMember: (mid, s) => {
    void flows.swapTo(s, mid, "suggestion").then(fetchMissingModels);
  },
  onPickSearchResult: (m) => {
    store.setModels([m]);
    void flows.placeSearchResult(m);
  },
  onSearch: (q) => void flows.searchFlow(q),
  onClose: () => {
    panel.hide();
    store.setPanel(null);
  },
});

flows = wireInteractions(canvas, store, api, camera, panel, requestDraw);

async function fetchMissingModels(): Promise<void> {
  const scene = store.state.scene;
  if (!scene) return;
  const missing = [...new Set(scene.objects.map((o) => o.modelId))].filter(
    (mid) => !store.state.models.has(mid),
  );
  if (missing.length === 0) return;
  const fetched = await Promise.all(missing.map((mid) => api.getModelInfo(mid)));
  store.setModels(fetched);
  requestDraw();
}

function resize(): void {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight;
  camera.resize(canvas.width, canvas.height);
  requestDraw();
}

doneButton.addEventListener("click", () => {
  const id = store.state.sessionId;
  if (!id) return;
  void api
    .exportScene(id)
    .then((doc) => {
      const blob = new Blob([JSON.stringify(doc, null, 2)], {
        type: "application/json",
      });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `${doc.id || "scene"}.json`;
      a.click();
      URL.revokeObjectURL(a.href);
      store.toast("scene exported");
    })
    .catch((err) => store.toast(`export failed: ${String(err)}`));
});

store.subscribe(() => {
  const s = store.state;
  statusLine.textContent = s.sessionId
    ? `session ${s.sessionId} · rev ${s.revision}${s.busy ? " · saving..." : ""}`
    : "connecting...";
  toastBox.textContent = s.toast ?? "";
  toastBox.classList.toggle("hidden", s.toast === null);
  requestDraw();
});

async function boot(): Promise<void> {
  const session = await api.createSession(sceneType);
  store.applySession(session.sessionId, session.scene, session.revision);
  await fetchMissingModels();

  const room = session.scene.objects.find((o) => o.isArchitecture);
  if (room) camera.target = [room.transform[12], room.transform[13], 1.0];
  requestDraw();
}

window.addEventListener("resize", resize);
resize();
boot().catch((err) => {
  statusLine.textContent = `failed to start: ${String(err)}`;
});
