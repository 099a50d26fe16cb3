"""Scene domain model: metadata, instances, support trees, surfaces, picking.

Scenes hold box-shaped model instances arranged in a static-support tree
rooted at the room. Geometry is bounding boxes only -- every learned prior
is featurized on boxes, so meshes carry no extra information here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from scenehint.geometry import (
    Transform,
    normalize,
    ray_box,
    require_unit,
    rotation_about_axis,
    rotation_between,
)

SCENE_FORMAT_VERSION = 1
MODELS_FORMAT_VERSION = 1

UP_COS_THRESHOLD = 0.707  # 45-degree cones split up / horizontal / down


class NormalClass(str, Enum):
    UP = "up"
    DOWN = "down"
    HORIZONTAL = "horizontal"


class Interiority(str, Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class SurfaceType:
    """Featurized support surface: normal band plus interior/exterior."""

    normal_class: NormalClass
    interiority: Interiority

    @property
    def key(self) -> str:
        return f"{self.normal_class.value}-{self.interiority.value}"

    @classmethod
    def from_key(cls, key: str) -> "SurfaceType":
        nc, inter = key.split("-")
        return cls(NormalClass(nc), Interiority(inter))

    def __str__(self) -> str:
        return self.key


ALL_SURFACE_TYPES = tuple(
    SurfaceType(nc, it) for nc in NormalClass for it in Interiority
)


class AttachmentFace(str, Enum):
    """Bounding-box side of a child in contact with its support surface."""

    TOP = "top"
    BOTTOM = "bottom"
    FRONT = "front"
    BACK = "back"
    LEFT = "left"
    RIGHT = "right"


# deterministic tie-break order for face argmax and fallback decisions
FACE_ORDER = (
    AttachmentFace.BOTTOM,
    AttachmentFace.BACK,
    AttachmentFace.LEFT,
    AttachmentFace.RIGHT,
    AttachmentFace.FRONT,
    AttachmentFace.TOP,
)

# outward unit normals in the canonical model frame (up=+Z, front=+Y, right=+X)
_FACE_NORMALS = {
    AttachmentFace.TOP: np.array([0.0, 0.0, 1.0]),
    AttachmentFace.BOTTOM: np.array([0.0, 0.0, -1.0]),
    AttachmentFace.FRONT: np.array([0.0, 1.0, 0.0]),
    AttachmentFace.BACK: np.array([0.0, -1.0, 0.0]),
    AttachmentFace.RIGHT: np.array([1.0, 0.0, 0.0]),
    AttachmentFace.LEFT: np.array([-1.0, 0.0, 0.0]),
}


class ShapeClass(str, Enum):
    BLOCKY = "blocky"
    FLAT = "flat"
    THIN = "thin"


THIN_RATIO = 0.05
FLAT_RATIO = 0.15


@dataclass(frozen=True)
class ModelMetadata:
    """Per-model annotations: category, semantic orientation, box dims.

    up/front are unit vectors in the model's local frame; bbox_dims are the
    local axis-aligned box extents in meters, box centered at the local
    origin.
    """

    model_id: str
    category: str
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    front: tuple[float, float, float] = (0.0, 1.0, 0.0)
    bbox_dims: tuple[float, float, float] = (1.0, 1.0, 1.0)
    has_semantic_front: bool = True
    name: str = ""
    tags: tuple[str, ...] = ()
    description: str = ""

    def __post_init__(self):
        up = require_unit(self.up, "up")
        front = require_unit(self.front, "front")
        if abs(float(np.dot(up, front))) > 1e-6:
            raise ValueError(f"model {self.model_id}: up and front not orthogonal")
        if any(d <= 0 for d in self.bbox_dims):
            raise ValueError(f"model {self.model_id}: bbox dims must be positive")

    @property
    def shape_class(self) -> ShapeClass:
        """Coarse silhouette class from box proportions.

        thin: one dominant axis (both other extents under 5% of it, pen-like);
        flat: one small axis (under 15% of the largest, poster-like);
        blocky: everything else.
        """
        dims = sorted(self.bbox_dims)
        big = dims[2]
        if dims[1] / big < THIN_RATIO:
            return ShapeClass.THIN
        if dims[0] / big < FLAT_RATIO:
            return ShapeClass.FLAT
        return ShapeClass.BLOCKY

    @property
    def canonical_rotation(self) -> np.ndarray:
        """Rotation mapping model-local coords to the canonical frame.

        Canonical frame: semantic up on +Z, front on +Y, right on +X.
        """
        up = np.asarray(self.up, dtype=float)
        front = np.asarray(self.front, dtype=float)
        right = np.cross(front, up)
        return np.stack([right, front, up])

    @property
    def canonical_dims(self) -> np.ndarray:
        """Box extents along the canonical axes (right, front, up)."""
        return np.abs(self.canonical_rotation) @ np.asarray(self.bbox_dims, dtype=float)

    def face_normal(self, face: AttachmentFace) -> np.ndarray:
        """Outward face normal in the canonical frame."""
        return _FACE_NORMALS[face]

    def face_center(self, face: AttachmentFace) -> np.ndarray:
        """Center of a box face in the canonical frame (box centered at origin)."""
        return 0.5 * self.canonical_dims * _FACE_NORMALS[face]

    def to_dict(self) -> dict:
        return {
            "modelId": self.model_id,
            "category": self.category,
            "up": list(self.up),
            "front": list(self.front),
            "bboxDims": list(self.bbox_dims),
            "hasSemanticFront": self.has_semantic_front,
            "name": self.name,
            "tags": list(self.tags),
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelMetadata":
        return cls(
            model_id=d["modelId"],
            category=d["category"],
            up=tuple(d.get("up", (0.0, 0.0, 1.0))),
            front=tuple(d.get("front", (0.0, 1.0, 0.0))),
            bbox_dims=tuple(d["bboxDims"]),
            has_semantic_front=bool(d.get("hasSemanticFront", True)),
            name=d.get("name", ""),
            tags=tuple(d.get("tags", ())),
            description=d.get("description", ""),
        )


@dataclass(frozen=True)
class ModelInstance:
    """A placed model: metadata reference plus a world transform."""

    id: str
    model_id: str
    transform: Transform
    parent_id: str | None = None
    is_architecture: bool = False

    @property
    def centroid(self) -> np.ndarray:
        # local box is centered at the origin
        return self.transform.translation

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "modelId": self.model_id,
            "transform": self.transform.to_list(),
        }
        if self.parent_id is not None:
            d["parentId"] = self.parent_id
        if self.is_architecture:
            d["isArchitecture"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelInstance":
        return cls(
            id=d["id"],
            model_id=d["modelId"],
            transform=Transform.from_list(d["transform"]),
            parent_id=d.get("parentId"),
            is_architecture=bool(d.get("isArchitecture", False)),
        )


class ModelDatabase:
    """Lookup over model metadata, by id and by category."""

    def __init__(self, models: list[ModelMetadata]):
        self.models = list(models)
        self.by_id = {m.model_id: m for m in self.models}
        if len(self.by_id) != len(self.models):
            raise ValueError("duplicate model ids in model database")
        self.by_category: dict[str, list[ModelMetadata]] = {}
        for m in self.models:
            self.by_category.setdefault(m.category, []).append(m)
        for members in self.by_category.values():
            members.sort(key=lambda m: m.model_id)

    def __len__(self) -> int:
        return len(self.models)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self.by_id

    def get(self, model_id: str) -> ModelMetadata:
        return self.by_id[model_id]

    def categories(self) -> list[str]:
        return sorted(self.by_category)

    def representative(self, category: str) -> ModelMetadata | None:
        members = self.by_category.get(category)
        return members[0] if members else None

    def category_has_semantic_front(self, category: str) -> bool:
        """A category keeps its front only if some member has a semantic one."""
        members = self.by_category.get(category, [])
        return any(m.has_semantic_front for m in members) if members else True

    def to_dict(self) -> dict:
        return {
            "formatVersion": MODELS_FORMAT_VERSION,
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelDatabase":
        version = d.get("formatVersion")
        if version != MODELS_FORMAT_VERSION:
            raise ValueError(f"unsupported model db formatVersion {version!r}")
        return cls([ModelMetadata.from_dict(m) for m in d["models"]])


@dataclass
class Scene:
    """A scene: typed collection of instances plus the support tree edges."""

    id: str
    scene_type: str
    objects: list[ModelInstance] = field(default_factory=list)
    support_edges: list[tuple[str, str]] = field(default_factory=list)

    def object_by_id(self, oid: str) -> ModelInstance | None:
        for o in self.objects:
            if o.id == oid:
                return o
        return None

    def parent_of(self, oid: str) -> str | None:
        for child, parent in self.support_edges:
            if child == oid:
                return parent
        return None

    def children_of(self, oid: str) -> list[ModelInstance]:
        ids = [c for c, p in self.support_edges if p == oid]
        return [o for o in self.objects if o.id in set(ids)]

    def root(self) -> ModelInstance | None:
        children = {c for c, _ in self.support_edges}
        for o in self.objects:
            if o.id not in children:
                return o
        return None

    def to_dict(self) -> dict:
        return {
            "formatVersion": SCENE_FORMAT_VERSION,
            "id": self.id,
            "sceneType": self.scene_type,
            "objects": [o.to_dict() for o in self.objects],
            "supportEdges": [list(e) for e in self.support_edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        version = d.get("formatVersion")
        if version != SCENE_FORMAT_VERSION:
            raise ValueError(f"unsupported scene formatVersion {version!r}")
        return cls(
            id=d["id"],
            scene_type=d["sceneType"],
            objects=[ModelInstance.from_dict(o) for o in d.get("objects", [])],
            support_edges=[tuple(e) for e in d.get("supportEdges", [])],
        )


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    normal: np.ndarray
    object_id: str
    distance: float


def featurize_surface(normal, owner_is_architecture: bool) -> SurfaceType:
    """Classify a world-space surface normal into one of six surface types.

    The sphere splits into 45-degree up/down cones and a horizontal band;
    interiority is interior exactly for architecture-owned surfaces.
    """
    n = require_unit(normal, "surface normal")
    if n[2] > UP_COS_THRESHOLD:
        nc = NormalClass.UP
    elif n[2] < -UP_COS_THRESHOLD:
        nc = NormalClass.DOWN
    else:
        nc = NormalClass.HORIZONTAL
    it = Interiority.INTERIOR if owner_is_architecture else Interiority.EXTERIOR
    return SurfaceType(nc, it)


def compose_placement(
    anchor,
    surface_normal,
    face: AttachmentFace,
    alpha: float,
    meta: ModelMetadata,
) -> Transform:
    """Transform placing a model against a surface.

    The rotation first maps the outward normal of bounding-box face `face`
    onto -surface_normal, then spins by `alpha` about surface_normal; the
    face center lands exactly at `anchor`. Model size is kept as annotated.
    """
    if any(d <= 0 for d in meta.bbox_dims):
        raise ValueError(f"model {meta.model_id}: degenerate bbox")
    n_s = require_unit(surface_normal, "surface normal")
    anchor = np.asarray(anchor, dtype=float)

    align = rotation_between(meta.face_normal(face), -n_s)
    spin = rotation_about_axis(n_s, alpha)
    rot_canonical = spin @ align
    rotation = rot_canonical @ meta.canonical_rotation
    translation = anchor - rot_canonical @ meta.face_center(face)
    return Transform.from_rotation_translation(rotation, translation)


def placed_centroid(anchor, surface_normal, face: AttachmentFace, meta: ModelMetadata) -> np.ndarray:
    """World centroid of a model placed by compose_placement (alpha-invariant)."""
    n_s = require_unit(surface_normal, "surface normal")
    # the face center maps onto the anchor, so the box center sits half the
    # face-axis extent along the surface normal regardless of the spin angle
    extent = float(meta.canonical_dims[int(np.argmax(np.abs(meta.face_normal(face))))])
    return np.asarray(anchor, dtype=float) + 0.5 * extent * n_s


def placed_front(surface_normal, face: AttachmentFace, alpha: float, meta: ModelMetadata) -> np.ndarray:
    """World direction of the model's semantic front after placement."""
    n_s = require_unit(surface_normal, "surface normal")
    align = rotation_between(meta.face_normal(face), -n_s)
    return rotation_about_axis(n_s, alpha) @ align @ np.array([0.0, 1.0, 0.0])


def world_front(instance: ModelInstance, meta: ModelMetadata) -> np.ndarray:
    """World direction of an instance's semantic front."""
    return normalize(instance.transform.rotation @ np.asarray(meta.front, dtype=float))


def raycast_scene(origin, direction, scene: Scene, model_db: ModelDatabase) -> RayHit | None:
    """Nearest oriented-bounding-box hit in the scene, or None on a miss.

    The returned normal is the hit face's normal oriented against the ray,
    so rays cast from inside the room pick up interior surfaces (floor up,
    walls inward).
    """
    origin = np.asarray(origin, dtype=float)
    direction = require_unit(direction, "ray direction")

    best: RayHit | None = None
    for obj in scene.objects:
        meta = model_db.get(obj.model_id)
        inv = obj.transform.inverse()
        local_o = inv.apply_point(origin)
        local_d = inv.apply_vector(direction)
        hit = ray_box(local_o, local_d, 0.5 * np.asarray(meta.bbox_dims, dtype=float))
        if hit is None:
            continue
        t, local_n = hit
        if best is None or t < best.distance:
            world_n = obj.transform.apply_normal(local_n)
            best = RayHit(
                point=origin + t * direction,
                normal=world_n,
                object_id=obj.id,
                distance=float(t),
            )
    return best


def validate_support_tree(scene: Scene) -> list[str]:
    """Violations of the single-tree-rooted-at-architecture invariant."""
    problems: list[str] = []
    ids = {o.id for o in scene.objects}

    parents: dict[str, list[str]] = {}
    for child, parent in scene.support_edges:
        if child not in ids:
            problems.append(f"edge ({child},{parent}) references unknown child {child}")
            continue
        if parent not in ids:
            problems.append(f"edge ({child},{parent}) references unknown parent {parent}")
            continue
        parents.setdefault(child, []).append(parent)

    for child, ps in sorted(parents.items()):
        if len(ps) > 1:
            problems.append(f"multi-parent: {child} has parents {sorted(ps)}")

    roots = [o for o in scene.objects if o.id not in parents]
    if len(roots) != 1:
        problems.append(f"expected exactly one root, found {sorted(o.id for o in roots)}")
    else:
        root = roots[0]
        if not root.is_architecture:
            problems.append(f"root {root.id} is not architecture")

    # cycle detection over the child->parent map
    visited: set[str] = set()
    for start in sorted(parents):
        if start in visited:
            continue
        path: list[str] = []
        seen_here: set[str] = set()
        node: str | None = start
        while node is not None and node in parents:
            if node in seen_here:
                cycle = path[path.index(node):] + [node]
                problems.append("cycle: " + "->".join(cycle))
                break
            if node in visited:
                break
            seen_here.add(node)
            path.append(node)
            node = parents[node][0]
        visited.update(seen_here)

    return problems


def load_scene_file(path: str | Path) -> Scene:
    with open(path, "r", encoding="utf-8") as f:
        return Scene.from_dict(json.load(f))


def save_scene_file(scene: Scene, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scene.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def load_model_db(path: str | Path) -> ModelDatabase:
    with open(path, "r", encoding="utf-8") as f:
        return ModelDatabase.from_dict(json.load(f))


def save_model_db(db: ModelDatabase, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(db.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
