"""Seeded synthetic scene corpora with known generating distributions.

A generator spec lists, per scene type, placement rules keyed by
(parent category, child category): how many children to spawn, which
surface they sit on, and where. Scenes are sampled deterministically from a
seed, and the spec object keeps the exact generating distributions around so
recovery tests can compare learned priors against ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from scenehint.corpus import CorpusError
from scenehint.geometry import (
    Transform,
    plane_frame,
    project_to_plane,
    rotation_about_axis,
    signed_angle,
    vec3,
)
from scenehint.priors import CategoryTaxonomy
from scenehint.scene import (
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    ModelMetadata,
    Scene,
    compose_placement,
    placed_front,
    save_model_db,
    save_scene_file,
    world_front,
)

SPEC_FORMAT_VERSION = 1

_SURFACES = ("floor", "wall", "top")
_POSITION_KINDS = ("fixed", "gaussian", "uniform", "relative")
_ORIENTATION_KINDS = ("fixed", "gaussian", "relative")


@dataclass(frozen=True)
class PlacementRule:
    """One generative rule: children of one category on one parent category.

    Positions are 2-D in surface coordinates: floor/top use the (right,
    front) yaw frame of the room/parent around its center; wall uses
    (height above floor, lateral offset) on the +X wall. count and face are
    normalized categoricals; position/orientation are the raw spec dicts.
    """

    child: str
    parent: str
    surface: str
    count: tuple[tuple[int, float], ...]
    position: dict
    orientation: dict
    face: tuple[tuple[AttachmentFace, float], ...]

    def count_probs(self) -> dict[int, float]:
        return dict(self.count)

    def face_probs(self) -> dict[AttachmentFace, float]:
        return dict(self.face)


@dataclass(frozen=True)
class SceneTypeSpec:
    scene_type: str
    room_model: str
    rules: tuple[PlacementRule, ...]


@dataclass(frozen=True)
class GeneratorSpec:
    model_db: ModelDatabase
    taxonomy: CategoryTaxonomy
    scene_types: dict[str, SceneTypeSpec]

    def rule(self, scene_type: str, parent: str, child: str) -> PlacementRule | None:
        st = self.scene_types.get(scene_type)
        if st is None:
            return None
        for r in st.rules:
            if r.parent == parent and r.child == child:
                return r
        return None


def _normalized(probs: dict, what: str, cast_key) -> tuple:
    if not probs:
        raise CorpusError(f"{what}: empty categorical")
    items = sorted((cast_key(k), float(v)) for k, v in probs.items())
    total = sum(p for _, p in items)
    if abs(total - 1.0) > 1e-9:
        raise CorpusError(f"{what}: probabilities sum to {total}, expected 1")
    if any(p < 0 for _, p in items):
        raise CorpusError(f"{what}: negative probability")
    return tuple(items)


def parse_generator_spec(doc: dict) -> GeneratorSpec:
    """Validate a spec document and bind it to its model database."""
    if doc.get("formatVersion") != SPEC_FORMAT_VERSION:
        raise CorpusError(
            f"unsupported generator spec formatVersion {doc.get('formatVersion')!r}"
        )
    model_db = ModelDatabase([ModelMetadata.from_dict(m) for m in doc["models"]])
    taxonomy = CategoryTaxonomy.from_dict(doc.get("taxonomy", {}))

    scene_types = {}
    for scene_type, st in doc["sceneTypes"].items():
        room_model = st["roomModel"]
        if room_model not in model_db:
            raise CorpusError(f"{scene_type}: unknown room model {room_model}")
        rules = []
        known_cats = {model_db.get(room_model).category}
        for i, r in enumerate(st.get("rules", ())):
            where = f"{scene_type}: rule {i} ({r.get('child')} on {r.get('parent')})"
            if r["surface"] not in _SURFACES:
                raise CorpusError(f"{where}: unknown surface {r['surface']!r}")
            if r["child"] not in model_db.by_category:
                raise CorpusError(f"{where}: no models for category {r['child']!r}")
            if r["parent"] not in known_cats:
                raise CorpusError(
                    f"{where}: parent category {r['parent']!r} not produced by "
                    "an earlier rule"
                )
            position = dict(r.get("position", {"kind": "uniform", "margin": 0.5}))
            if position.get("kind") not in _POSITION_KINDS:
                raise CorpusError(f"{where}: unknown position kind")
            orientation = dict(r.get("orientation", {"kind": "fixed", "deg": 0.0}))
            if orientation.get("kind") not in _ORIENTATION_KINDS:
                raise CorpusError(f"{where}: unknown orientation kind")
            default_face = "back" if r["surface"] == "wall" else "bottom"
            rules.append(
                PlacementRule(
                    child=r["child"],
                    parent=r["parent"],
                    surface=r["surface"],
                    count=_normalized(r["count"], f"{where}: count", int),
                    position=position,
                    orientation=orientation,
                    face=_normalized(
                        r.get("face", {default_face: 1.0}),
                        f"{where}: face",
                        AttachmentFace,
                    ),
                )
            )
            known_cats.add(r["child"])
        scene_types[scene_type] = SceneTypeSpec(scene_type, room_model, tuple(rules))

    return GeneratorSpec(model_db=model_db, taxonomy=taxonomy, scene_types=scene_types)


def load_generator_spec(path: str | Path) -> GeneratorSpec:
    with open(path, "r", encoding="utf-8") as f:
        return parse_generator_spec(json.load(f))


def _draw(rng: np.random.Generator, categorical: tuple) -> object:
    """Inverse-CDF draw; uses only the generator's uniform stream."""
    u = rng.random()
    acc = 0.0
    for value, p in categorical:
        acc += p
        if u < acc:
            return value
    return categorical[-1][0]


def _gauss2(rng, mean, std) -> np.ndarray:
    std = np.broadcast_to(np.asarray(std, dtype=float), (2,))
    out = np.asarray(mean, dtype=float).copy()
    for i in range(2):
        # draw even when the axis is frozen to keep the stream layout fixed
        g = rng.normal()
        out[i] += std[i] * g
    return out


class _SceneBuilder:
    def __init__(self, spec: GeneratorSpec, st: SceneTypeSpec, scene_id: str, rng):
        self.spec = spec
        self.rng = rng
        room_meta = spec.model_db.get(st.room_model)
        self.room_dims = room_meta.canonical_dims
        room_tf = Transform.from_rotation_translation(
            np.eye(3), vec3(0.0, 0.0, self.room_dims[2] / 2.0)
        )
        self.room = ModelInstance(
            id="room",
            model_id=st.room_model,
            transform=room_tf,
            is_architecture=True,
        )
        self.scene = Scene(id=scene_id, scene_type=st.scene_type, objects=[self.room])
        self.by_category: dict[str, list[ModelInstance]] = {
            room_meta.category: [self.room]
        }
        self.seq = 0

    def instances_of(self, category: str) -> list[ModelInstance]:
        return self.by_category.get(category, [])

    def first_of(self, category: str, where: str) -> ModelInstance:
        members = self.instances_of(category)
        if not members:
            raise CorpusError(f"{where}: no instance of reference category {category!r}")
        return members[0]

    def _surface_geometry(self, rule: PlacementRule, parent: ModelInstance, where: str):
        """Anchor plane for a rule: (normal, origin, xhat, yhat, bounds)."""
        w, d, h = self.room_dims
        if rule.surface == "floor":
            if parent.id != self.room.id:
                raise CorpusError(f"{where}: floor rules must target the room")
            normal = vec3(0.0, 0.0, 1.0)
            xhat, yhat = plane_frame(normal, vec3(0.0, 1.0, 0.0))
            return normal, vec3(0.0, 0.0, 0.0), xhat, yhat, (w / 2.0, d / 2.0)
        if rule.surface == "wall":
            if parent.id != self.room.id:
                raise CorpusError(f"{where}: wall rules must target the room")
            normal = vec3(-1.0, 0.0, 0.0)  # interior normal of the +X wall
            xhat, yhat = plane_frame(normal, vec3(0.0, 1.0, 0.0))
            # position coords are (height above floor, lateral y)
            return normal, vec3(w / 2.0, 0.0, 0.0), xhat, yhat, (h, d / 2.0)
        # "top": the parent's upper surface, coords in the parent yaw frame
        meta = self.spec.model_db.get(parent.model_id)
        normal = vec3(0.0, 0.0, 1.0)
        front = world_front(parent, meta)
        xhat, yhat = plane_frame(normal, front)
        dims = meta.canonical_dims
        top_z = parent.centroid[2] + dims[2] / 2.0
        origin = vec3(parent.centroid[0], parent.centroid[1], top_z)
        return normal, origin, xhat, yhat, (dims[0] / 2.0, dims[1] / 2.0)

    def _sample_position(self, rule: PlacementRule, bounds, normal, where: str):
        pos = rule.position
        kind = pos["kind"]
        if kind == "fixed":
            return np.asarray(pos["at"], dtype=float), None
        if kind == "gaussian":
            return _gauss2(self.rng, pos["mean"], pos.get("std", 0.0)), None
        if kind == "uniform":
            margin = float(pos.get("margin", 0.0))
            lo_x, hi_x = -bounds[0] + margin, bounds[0] - margin
            lo_y, hi_y = -bounds[1] + margin, bounds[1] - margin
            if rule.surface == "wall":  # heights measured up from the floor
                lo_x, hi_x = margin, bounds[0] - margin
            x = lo_x + self.rng.random() * (hi_x - lo_x)
            y = lo_y + self.rng.random() * (hi_y - lo_y)
            return np.array([x, y]), None
        ref = self.first_of(pos["ref"], where)
        offset = _gauss2(self.rng, pos["delta"], pos.get("std", 0.0))
        return offset, ref

    def place(self, rule: PlacementRule, parent: ModelInstance, where: str) -> None:
        meta_members = self.spec.model_db.by_category[rule.child]
        idx = min(int(self.rng.random() * len(meta_members)), len(meta_members) - 1)
        meta = meta_members[idx]

        face = _draw(self.rng, rule.face)
        normal, origin, xhat, yhat, bounds = self._surface_geometry(rule, parent, where)
        coords, pos_ref = self._sample_position(rule, bounds, normal, where)

        if pos_ref is not None:
            ref_front = world_front(pos_ref, self.spec.model_db.get(pos_ref.model_id))
            rx, ry = plane_frame(normal, ref_front)
            base = project_to_plane(pos_ref.centroid - origin, normal) + origin
            anchor = base + coords[0] * rx + coords[1] * ry
        else:
            anchor = origin + coords[0] * xhat + coords[1] * yhat

        orient = rule.orientation
        if orient["kind"] == "fixed":
            alpha = math.radians(float(orient["deg"]))
        elif orient["kind"] == "gaussian":
            alpha = math.radians(
                float(orient["deg"]) + float(orient.get("stdDeg", 0.0)) * self.rng.normal()
            )
        else:
            ref = self.first_of(orient["ref"], where)
            deg = float(orient["deg"]) + float(orient.get("stdDeg", 0.0)) * self.rng.normal()
            ref_front = world_front(ref, self.spec.model_db.get(ref.model_id))
            target = rotation_about_axis(normal, math.radians(deg)) @ project_to_plane(
                ref_front, normal
            )
            alpha = signed_angle(placed_front(normal, face, 0.0, meta), target, normal)

        self.seq += 1
        child = ModelInstance(
            id=f"{rule.child}-{self.seq:03d}",
            model_id=meta.model_id,
            transform=compose_placement(anchor, normal, face, alpha, meta),
            parent_id=parent.id,
        )
        self.scene.objects.append(child)
        self.scene.support_edges.append((child.id, parent.id))
        self.by_category.setdefault(meta.category, []).append(child)

    def build(self, st: SceneTypeSpec) -> Scene:
        for i, rule in enumerate(st.rules):
            where = f"{self.scene.id}: rule {i} ({rule.child} on {rule.parent})"
            for parent in list(self.instances_of(rule.parent)):
                k = _draw(self.rng, rule.count)
                for _ in range(int(k)):
                    self.place(rule, parent, where)
        return self.scene


def generate_synthetic_corpus(
    spec: GeneratorSpec, n: int, seed: int
) -> list[Scene]:
    """n scenes per scene type, sampled from one seeded stream.

    Rules run in file order, so later rules can reference categories placed
    by earlier ones. Identical (spec, n, seed) inputs give identical scenes.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    scenes: list[Scene] = []
    for scene_type in sorted(spec.scene_types):
        st = spec.scene_types[scene_type]
        for i in range(n):
            builder = _SceneBuilder(spec, st, f"{scene_type}-{i:04d}", rng)
            scenes.append(builder.build(st))
    return scenes


def write_corpus(
    scenes: list[Scene],
    model_db: ModelDatabase,
    taxonomy: CategoryTaxonomy | None,
    out_dir: str | Path,
) -> None:
    """Write the corpus directory layout: scenes/, models.json, taxonomy.json."""
    out = Path(out_dir)
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    save_model_db(model_db, out / "models.json")
    if taxonomy is not None:
        with open(out / "taxonomy.json", "w", encoding="utf-8") as f:
            json.dump(taxonomy.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
    for scene in scenes:
        save_scene_file(scene, out / "scenes" / f"{scene.id}.json")


def _box(model_id, category, dims, front=True, **extra) -> dict:
    return {
        "modelId": model_id,
        "category": category,
        "bboxDims": list(dims),
        "hasSemanticFront": front,
        **extra,
    }


def demo_office_spec() -> GeneratorSpec:
    """Office generator used by the examples and the end-to-end tests.

    Encodes a desk-centric office: cabinet to the desk's right, chair in
    front facing it, wall socket low and poster high on the wall, and a
    keyboard / monitor / mousepad / mouse arrangement on the desk top.
    """
    return parse_generator_spec(demo_office_spec_doc())


def demo_office_spec_doc() -> dict:
    models = [
        _box("room-1", "room", (6.0, 5.0, 3.0), front=False),
        _box("desk-1", "desk", (1.6, 0.8, 0.75), name="office desk", tags=["office"]),
        _box("chair-1", "chair", (0.5, 0.5, 0.9), name="task chair", tags=["office", "seating"]),
        _box("cabinet-1", "cabinet", (0.5, 0.6, 1.3), name="filing cabinet", tags=["office", "storage"]),
        _box("socket-1", "socket", (0.08, 0.02, 0.08), name="wall socket"),
        _box("poster-1", "poster", (0.6, 0.02, 0.9), name="movie poster", tags=["decor"]),
        _box("keyboard-1", "keyboard", (0.45, 0.15, 0.03), name="keyboard", tags=["office"]),
        _box("monitor-1", "monitor", (0.55, 0.06, 0.35), name="monitor", tags=["office"]),
        _box("mousepad-1", "mousepad", (0.25, 0.22, 0.005), name="mousepad"),
        _box("mouse-1", "mouse", (0.06, 0.1, 0.035), name="mouse", tags=["office"]),
        _box("plant-1", "plant", (0.3, 0.3, 0.5), front=False, name="potted plant", tags=["decor"]),
        _box("clock-1", "clock", (0.3, 0.05, 0.3), name="wall clock", tags=["decor"]),
    ]
    rules = [
        {
            "child": "desk", "parent": "room", "surface": "floor",
            "count": {"1": 1.0},
            "position": {"kind": "fixed", "at": [0.5, -0.7]},
            "orientation": {"kind": "fixed", "deg": 0.0},
        },
        {
            "child": "cabinet", "parent": "room", "surface": "floor",
            "count": {"1": 1.0},
            "position": {"kind": "relative", "ref": "desk", "delta": [1.2, 0.0], "std": 0.02},
            "orientation": {"kind": "relative", "ref": "desk", "deg": 5.0, "stdDeg": 1.5},
        },
        {
            "child": "chair", "parent": "room", "surface": "floor",
            "count": {"1": 0.7, "2": 0.3},
            "position": {"kind": "relative", "ref": "desk", "delta": [0.0, 0.9], "std": 0.02},
            "orientation": {"kind": "relative", "ref": "desk", "deg": 185.0, "stdDeg": 1.5},
        },
        {
            "child": "plant", "parent": "room", "surface": "floor",
            "count": {"0": 0.25, "1": 0.75},
            "position": {"kind": "uniform", "margin": 0.5},
            "orientation": {"kind": "fixed", "deg": 0.0},
        },
        {
            "child": "socket", "parent": "room", "surface": "wall",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [0.3, -0.9], "std": [0.01, 0.15]},
            "orientation": {"kind": "fixed", "deg": 0.0},
        },
        {
            "child": "poster", "parent": "room", "surface": "wall",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [1.9, 0.9], "std": [0.01, 0.15]},
            "orientation": {"kind": "fixed", "deg": 0.0},
        },
        {
            "child": "clock", "parent": "room", "surface": "wall",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [2.2, -0.3], "std": [0.01, 0.1]},
            "orientation": {"kind": "fixed", "deg": 0.0},
            "face": {"back": 0.85, "bottom": 0.15},
        },
        {
            "child": "keyboard", "parent": "desk", "surface": "top",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [0.0, -0.15], "std": 0.01},
            "orientation": {"kind": "gaussian", "deg": 5.0, "stdDeg": 1.5},
        },
        {
            "child": "monitor", "parent": "desk", "surface": "top",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [0.0, 0.18], "std": 0.01},
            "orientation": {"kind": "gaussian", "deg": 5.0, "stdDeg": 1.5},
        },
        {
            "child": "mousepad", "parent": "desk", "surface": "top",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [0.3, -0.15], "std": 0.01},
            "orientation": {"kind": "gaussian", "deg": 5.0, "stdDeg": 1.5},
        },
        {
            "child": "plant", "parent": "desk", "surface": "top",
            "count": {"0": 0.75, "1": 0.25},
            "position": {"kind": "uniform", "margin": 0.18},
            "orientation": {"kind": "fixed", "deg": 0.0},
        },
        {
            "child": "mouse", "parent": "mousepad", "surface": "top",
            "count": {"1": 1.0},
            "position": {"kind": "gaussian", "mean": [0.0, 0.0], "std": 0.005},
            "orientation": {"kind": "gaussian", "deg": 5.0, "stdDeg": 1.5},
        },
    ]
    return {
        "formatVersion": SPEC_FORMAT_VERSION,
        "models": models,
        "taxonomy": {
            "parents": {"chair": "seating", "desk": "furniture", "cabinet": "furniture", "seating": "furniture"},
            "noFrontCategories": ["room", "plant"],
        },
        "sceneTypes": {"office": {"roomModel": "room-1", "rules": rules}},
    }
