/** Wire types mirroring the suggestion service's JSON documents. */

export type Vec3 = [number, number, number];

/** Column-major 4x4, translation in slots 12..14. Same layout the server uses. */
export type Mat16 = number[];

export interface SceneObject {
  id: string;
  modelId: string;
  transform: Mat16;
  parentId: string | null;
  isArchitecture: boolean;
}

export interface SceneDoc {
  formatVersion: number;
  id: string;
  sceneType: string;
  objects: SceneObject[];
  supportEdges: [string, string][];
}

export interface ModelInfo {
  modelId: string;
  category: string;
  up: Vec3;
  front: Vec3;
  bboxDims: Vec3;
  hasSemanticFront: boolean;
  name: string;
  tags: string[];
  description: string;
  thumbnailUrl?: string;
}

export interface Suggestion {
  category: string;
  representativeModelId: string;
  memberModelIds: string[];
  score: number;
  alpha: number;
  face: string;
  transform: Mat16;
  parentId: string;
  anchor: Vec3;
  surfaceNormal: Vec3;
}

export interface QueryContext {
  parentId: string;
  parentCategory: string;
  surfaceType: string;
  surfaceNormal: Vec3;
  pos: Vec3;
}

export interface SuggestResponse {
  revision: number;
  context: QueryContext;
  suggestions: Suggestion[];
}

export interface SessionSnapshot {
  sessionId: string;
  sceneType?: string;
  revision: number;
  scene: SceneDoc;
}

export interface MutationAck {
  revision: number;
  objectId?: string;
  object?: SceneObject;
  removed?: string[];
}

/** How a placed object sits on its parent; the client remembers this so the
 *  rotation ring and drag plane stay aligned with the real support surface. */
export interface PlacementInfo {
  anchor: Vec3;
  surfaceNormal: Vec3;
  face: string;
  alpha: number;
}
