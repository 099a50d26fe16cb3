/** Typed fetch client for the suggestion service. One base URL, no state. */

import type {
  MutationAck,
  ModelInfo,
  SceneDoc,
  SessionSnapshot,
  SuggestResponse,
  Vec3,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

export interface InsertRequest {
  modelId: string;
  parentId: string;
  anchor: Vec3;
  surfaceNormal?: Vec3;
  face?: string;
  alpha?: number;
  source?: string;
  expectedRevision?: number;
}

export interface UpdateRequest {
  anchor?: Vec3;
  parentId?: string;
  surfaceNormal?: Vec3;
  alpha?: number;
  expectedRevision?: number;
}

export function createApi(baseUrl: string) {
  const base = baseUrl.replace(/\/+$/, "");

  async function call<T>(method: string, path: string, body?: unknown): Promise<T> {
    let res: Response;
    try {
      res = await fetch(base + path, {
        method,
        headers: body !== undefined ? { "content-type": "application/json" } : undefined,
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable at ${base}: ${String(err)}`);
    }
    if (!res.ok) {
      let detail = `${res.status} ${res.statusText}`;
      try {
        const parsed = await res.json();
        if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
        else if (parsed?.detail) detail = JSON.stringify(parsed.detail);
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  return {
    baseUrl: base,

    createSession(sceneType: string, scene?: SceneDoc): Promise<SessionSnapshot> {
      const body: Record<string, unknown> = { sceneType };
      if (scene) body.scene = scene;
      return call("POST", "/session", body);
    },

    getSession(sessionId: string): Promise<SessionSnapshot> {
      return call("GET", `/session/${sessionId}`);
    },

    suggestAlongRay(
      sessionId: string,
      origin: Vec3,
      direction: Vec3,
      limit?: number,
    ): Promise<SuggestResponse> {
      return call("POST", `/session/${sessionId}/suggest`, {
        ray: { origin, direction },
        ...(limit !== undefined ? { limit } : {}),
      });
    },

    suggestAtPoint(
      sessionId: string,
      pos: Vec3,
      parentId: string,
      limit?: number,
    ): Promise<SuggestResponse> {
      return call("POST", `/session/${sessionId}/suggest`, {
        pos,
        parentId,
        ...(limit !== undefined ? { limit } : {}),
      });
    },

    insertObject(sessionId: string, req: InsertRequest): Promise<MutationAck> {
      return call("POST", `/session/${sessionId}/objects`, req);
    },

    updateObject(sessionId: string, oid: string, req: UpdateRequest): Promise<MutationAck> {
      return call("PATCH", `/session/${sessionId}/objects/${oid}`, req);
    },

    deleteObject(
      sessionId: string,
      oid: string,
      expectedRevision?: number,
    ): Promise<MutationAck> {
      const qs =
        expectedRevision !== undefined ? `?expectedRevision=${expectedRevision}` : "";
      return call("DELETE", `/session/${sessionId}/objects/${oid}${qs}`);
    },

    /** Session-scoped search: the service records it for evaluation. */
    search(sessionId: string, q: string, limit = 20): Promise<{ revision: number; models: ModelInfo[] }> {
      return call("POST", `/session/${sessionId}/search`, { q, limit });
    },

    listModels(q = "", limit = 20): Promise<{ models: ModelInfo[] }> {
      const params = new URLSearchParams({ q, limit: String(limit) });
      return call("GET", `/models?${params}`);
    },

    getModelInfo(modelId: string): Promise<ModelInfo> {
      return call("GET", `/models/${modelId}`);
    },

    exportScene(sessionId: string): Promise<SceneDoc> {
      return call("GET", `/scenes/${sessionId}/export`);
    },

    thumbnailUrl(modelId: string): string {
      return `${base}/thumbnails/${modelId}.png`;
    },
  };
}

export type Api = ReturnType<typeof createApi>;
