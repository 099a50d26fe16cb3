/** Floating suggestion panel: search box on top, one row per category with a
 *  thumbnail, score, and a drill-down arrow that expands the category's
 *  member models. Clicking a row (or member) swaps the placed object.
 */

import type { ModelInfo, Suggestion } from "./types.js";

export interface PanelCallbacks {
  thumbnailUrl(modelId: string): string;
  onPickSuggestion(s: Suggestion): void;
  onPickMember(modelId: string, s: Suggestion): void;
  onPickSearchResult(m: ModelInfo): void;
  onSearch(q: string): void;
  onClose(): void;
}

export function createPanel(host: HTMLElement, cb: PanelCallbacks) {
  const root = document.createElement("div");
  root.className = "suggest-panel hidden";
  root.innerHTML = `
    <div class="panel-head">
      <input class="panel-search" type="text" placeholder="search models..." />
      <button class="panel-close" title="close">&times;</button>
    </div>
    <div class="panel-caption"></div>
    <ul class="panel-list"></ul>
  `;
  host.appendChild(root);

  const list = root.querySelector(".panel-list") as HTMLUListElement;
  const caption = root.querySelector(".panel-caption") as HTMLDivElement;
  const search = root.querySelector(".panel-search") as HTMLInputElement;
  const expanded = new Set<string>();
  let current: Suggestion[] = [];
  let placedCategory: string | null = null;

  (root.querySelector(".panel-close") as HTMLButtonElement).addEventListener(
    "click",
    () => cb.onClose(),
  );
  search.addEventListener("keydown", (ev) => {
    if ((ev as KeyboardEvent).key === "Enter" && search.value.trim())
      cb.onSearch(search.value.trim());
  });
  // stray clicks inside the panel must not reach the canvas
  root.addEventListener("pointerdown", (ev) => ev.stopPropagation());

  function row(s: Suggestion): HTMLLIElement {
    const li = document.createElement("li");
    li.className = "panel-row" + (s.category === placedCategory ? " placed" : "");
    li.dataset.category = s.category;

    const img = document.createElement("img");
    img.src = cb.thumbnailUrl(s.representativeModelId);
    img.alt = s.category;

    const label = document.createElement("span");
    label.className = "row-label";
    label.textContent = s.category;

    const score = document.createElement("span");
    score.className = "row-score";
    score.textContent = s.score >= 0.01 ? s.score.toFixed(2) : s.score.toExponential(1);

    const expand = document.createElement("button");
    expand.className = "row-expand";
    expand.textContent = "▸";
    expand.title = `${s.memberModelIds.length} models`;
    expand.addEventListener("click", (ev) => {
      ev.stopPropagation();
      if (expanded.has(s.category)) expanded.delete(s.category);
      else expanded.add(s.category);
      render();
    });

    li.append(img, label, score, expand);
    li.addEventListener("click", () => cb.onPickSuggestion(s));

    if (expanded.has(s.category)) {
      const members = document.createElement("div");
      members.className = "row-members";
      for (const mid of s.memberModelIds) {
        const m = document.createElement("img");
        m.src = cb.thumbnailUrl(mid);
        m.alt = mid;
        m.title = mid;
        m.addEventListener("click", (ev) => {
          ev.stopPropagation();
          cb.onPickMember(mid, s);
        });
        members.appendChild(m);
      }
      li.appendChild(members);
    }
    return li;
  }

  function render(): void {
    list.textContent = "";
    for (const s of current) list.appendChild(row(s));
  }

  return {
    element: root,

    show(x: number, y: number, suggestions: Suggestion[], placed: string | null, title: string): void {
      current = suggestions;
      placedCategory = placed;
      expanded.clear();
      caption.textContent = title;
      search.value = "";
      root.classList.remove("hidden");
      root.style.left = `${Math.round(x)}px`;
      root.style.top = `${Math.round(y)}px`;
      render();
    },

    /** keyword results override the ranked list */
    showSearchResults(models: ModelInfo[]): void {
      caption.textContent = models.length ? "search results" : "no matches";
      list.textContent = "";
      for (const m of models) {
        const li = document.createElement("li");
        li.className = "panel-row";
        li.dataset.modelId = m.modelId;
        const img = document.createElement("img");
        img.src = m.thumbnailUrl ?? cb.thumbnailUrl(m.modelId);
        img.alt = m.modelId;
        const label = document.createElement("span");
        label.className = "row-label";
        label.textContent = m.name || m.modelId;
        li.append(img, label);
        li.addEventListener("click", () => cb.onPickSearchResult(m));
        list.appendChild(li);
      }
    },

    markPlaced(category: string | null): void {
      placedCategory = category;
      render();
    },

    hide(): void {
      root.classList.add("hidden");
      current = [];
      expanded.clear();
    },

    get visible(): boolean {
      return !root.classList.contains("hidden");
    },
  };
}

export type Panel = ReturnType<typeof createPanel>;
