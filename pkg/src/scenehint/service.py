"""HTTP facade: sessions, suggestions, scene editing, search, thumbnails.

Holds one scene per session with an optimistic revision counter. Suggestion
queries never mutate; every accepted mutation bumps the revision by one and
is appended to an event log (JSON lines) from which the final scene can be
replayed exactly.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response

from scenehint.corpus import PROXIMITY_THRESHOLD, support_contact
from scenehint.geometry import Transform, is_unit, nearest_point_on_box, signed_angle, vec3
from scenehint.priors import PriorsDB, support_surface_probability
from scenehint.scene import (
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    Scene,
    compose_placement,
    featurize_surface,
    validate_support_tree,
)
from scenehint.suggest import (
    choose_attachment_face,
    keyword_search,
    query_from_point,
    query_from_ray,
    suggest,
)


@dataclass
class PlacementRecord:
    """How an object was attached, kept so rotate/move can recompose it."""

    anchor: tuple[float, float, float]
    surface_normal: tuple[float, float, float]
    face: AttachmentFace
    alpha: float
    surface_key: str

    def to_dict(self) -> dict:
        return {
            "anchor": list(self.anchor),
            "surfaceNormal": list(self.surface_normal),
            "face": self.face.value,
            "alpha": self.alpha,
            "surface": self.surface_key,
        }


@dataclass
class SessionState:
    session_id: str
    scene: Scene
    revision: int = 0
    placements: dict[str, PlacementRecord] = field(default_factory=dict)
    counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class EventLog:
    """Append-only JSONL event sink, also mirrored in memory for tests."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self.events: list[dict] = []
        self._lock = threading.Lock()

    def append(self, op: str, session_id: str, payload: dict) -> None:
        event = {"ts": time.time(), "sessionId": session_id, "op": op, "payload": payload}
        with self._lock:
            self.events.append(event)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(event, sort_keys=True) + "\n")


def _as_vec(value, name: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise HTTPException(422, f"{name} must be a 3-number array")
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise HTTPException(422, f"{name} must be three finite numbers")
    return arr


def derive_placement_record(
    obj: ModelInstance,
    parent: ModelInstance,
    model_db: ModelDatabase,
) -> PlacementRecord:
    """Reverse-engineer anchor/face/alpha for objects loaded from scene files.

    The contact face midpoint is the anchor; the spin angle is recovered by
    comparing a reference axis placed at alpha 0 against the actual pose.
    The reference axis is the canonical up except for top/bottom attachments,
    where up spins degenerately and the front is used instead.
    """
    meta = model_db.get(obj.model_id)
    n_world, face, _, _ = support_contact(obj, parent, model_db)
    canon = meta.canonical_rotation
    anchor = obj.transform.apply_point(canon.T @ meta.face_center(face))

    axis = vec3(0.0, 1.0, 0.0) if face in (AttachmentFace.TOP, AttachmentFace.BOTTOM) else vec3(0.0, 0.0, 1.0)
    base = compose_placement(anchor, n_world, face, 0.0, meta)
    v0 = base.rotation @ (canon.T @ axis)
    v1 = obj.transform.rotation @ (canon.T @ axis)
    alpha = signed_angle(v0, v1, n_world)
    surface = featurize_surface(n_world, parent.is_architecture)
    return PlacementRecord(
        anchor=tuple(float(x) for x in anchor),
        surface_normal=tuple(float(x) for x in n_world),
        face=face,
        alpha=float(alpha),
        surface_key=surface.key,
    )


def _subtree_ids(scene: Scene, root_id: str) -> set[str]:
    out = {root_id}
    frontier = [root_id]
    while frontier:
        nxt = []
        for child, parent in scene.support_edges:
            if parent in frontier and child not in out:
                out.add(child)
                nxt.append(child)
        frontier = nxt
    return out


def _thumbnail_png(model_id: str, category: str) -> bytes:
    from PIL import Image, ImageDraw

    digest = hashlib.md5(model_id.encode("utf-8")).digest()
    color = tuple(96 + (b % 128) for b in digest[:3])
    img = Image.new("RGB", (128, 128), color)
    draw = ImageDraw.Draw(img)
    draw.rectangle([4, 4, 123, 123], outline=(40, 40, 40), width=2)
    label = (category or model_id)[:10]
    draw.text((12, 56), label, fill=(20, 20, 20))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def create_app(
    priors: PriorsDB,
    model_db: ModelDatabase,
    log_path: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="scenehint service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    sessions: dict[str, SessionState] = {}
    store_lock = threading.Lock()
    log = EventLog(log_path)
    thumbs: dict[str, bytes] = {}

    app.state.sessions = sessions
    app.state.event_log = log

    def get_session(session_id: str) -> SessionState:
        with store_lock:
            state = sessions.get(session_id)
        if state is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return state

    def check_revision(state: SessionState, body: dict, header: int | None = None):
        expected = body.get("expectedRevision", header)
        if expected is not None and int(expected) != state.revision:
            raise HTTPException(
                409,
                f"revision conflict: expected {expected}, current {state.revision}",
            )

    def instance_meta(state: SessionState, oid: str):
        obj = state.scene.object_by_id(oid)
        if obj is None:
            raise HTTPException(404, f"unknown object {oid}")
        return obj, model_db.get(obj.model_id)

    def surface_at(parent: ModelInstance, anchor: np.ndarray):
        """Parent surface normal nearest the anchor plus the world gap to it."""
        meta = model_db.get(parent.model_id)
        local = parent.transform.inverse().apply_point(anchor)
        q_local, n_local, _ = nearest_point_on_box(
            local, 0.5 * np.asarray(meta.bbox_dims, dtype=float)
        )
        q_world = parent.transform.apply_point(q_local)
        n_world = parent.transform.apply_normal(n_local)
        if parent.is_architecture:
            n_world = -n_world
        return n_world, float(np.linalg.norm(anchor - q_world))

    def serialize_suggestion(s, query) -> dict:
        return {
            "category": s.category,
            "representativeModelId": s.representative_model_id,
            "memberModelIds": list(s.member_model_ids),
            "score": s.score,
            "alpha": s.alpha,
            "face": s.placement.face.value,
            "transform": s.placement.transform.to_list(),
            "parentId": query.parent_id,
            "anchor": [float(x) for x in query.pos],
            "surfaceNormal": [float(x) for x in query.surface_normal],
        }

    # ------------------------------------------------------------ sessions

    @app.post("/session")
    def create_session(body: dict = Body(...)):
        scene_type = body.get("sceneType")
        if not scene_type or not isinstance(scene_type, str):
            raise HTTPException(400, "sceneType is required")

        if "scene" in body:
            try:
                scene = Scene.from_dict(body["scene"])
            except (KeyError, TypeError, ValueError) as e:
                raise HTTPException(400, f"malformed scene: {e}")
            for obj in scene.objects:
                if obj.model_id not in model_db:
                    raise HTTPException(400, f"unknown model {obj.model_id}")
                issues = obj.transform.validate()
                if issues:
                    raise HTTPException(
                        400, f"object {obj.id}: invalid transform: " + "; ".join(issues)
                    )
            if not scene.support_edges and len(scene.objects) > 1:
                derived = [
                    (o.id, o.parent_id) for o in scene.objects if o.parent_id is not None
                ]
                scene.support_edges = derived
            violations = validate_support_tree(scene)
            if violations:
                raise HTTPException(400, "invalid support tree: " + "; ".join(violations))
            scene.scene_type = scene_type
        else:
            scene = Scene(id=f"scene-{uuid.uuid4().hex[:8]}", scene_type=scene_type)
            root_model = body.get("roomModelId")
            if root_model is None and "room" in model_db.by_category:
                root_model = model_db.representative("room").model_id
            if root_model is not None:
                if root_model not in model_db:
                    raise HTTPException(400, f"unknown model {root_model}")
                meta = model_db.get(root_model)
                height = float(meta.canonical_dims[2])
                scene.objects.append(
                    ModelInstance(
                        id="room",
                        model_id=root_model,
                        transform=Transform.from_rotation_translation(
                            np.eye(3), vec3(0.0, 0.0, height / 2.0)
                        ),
                        is_architecture=True,
                    )
                )

        session_id = uuid.uuid4().hex[:12]
        state = SessionState(session_id=session_id, scene=scene)
        with store_lock:
            sessions[session_id] = state
        log.append("createSession", session_id, {"sceneType": scene_type, "scene": scene.to_dict()})
        return {"sessionId": session_id, "revision": state.revision, "scene": scene.to_dict()}

    @app.get("/session/{session_id}")
    def get_session_state(session_id: str):
        state = get_session(session_id)
        with state.lock:
            return {
                "sessionId": session_id,
                "sceneType": state.scene.scene_type,
                "revision": state.revision,
                "scene": state.scene.to_dict(),
            }

    # ---------------------------------------------------------- suggesting

    @app.post("/session/{session_id}/suggest")
    def post_suggest(session_id: str, body: dict = Body(...)):
        state = get_session(session_id)
        limit = body.get("limit")
        with state.lock:
            if "ray" in body:
                ray = body["ray"]
                origin = _as_vec(ray.get("origin"), "ray.origin")
                direction = _as_vec(ray.get("direction"), "ray.direction")
                norm = float(np.linalg.norm(direction))
                if norm < 1e-9:
                    raise HTTPException(422, "ray.direction must be nonzero")
                query = query_from_ray(state.scene, model_db, origin, direction / norm)
                if query is None:
                    raise HTTPException(422, "ray does not hit any scene surface")
            elif "pos" in body:
                pos = _as_vec(body.get("pos"), "pos")
                parent_id = body.get("parentId")
                if not parent_id or state.scene.object_by_id(parent_id) is None:
                    raise HTTPException(422, f"unknown parent {parent_id!r}")
                normal = None
                if body.get("surfaceNormal") is not None:
                    normal = _as_vec(body["surfaceNormal"], "surfaceNormal")
                    if not is_unit(normal, tol=1e-3):
                        raise HTTPException(422, "surfaceNormal must be unit length")
                    normal = normal / np.linalg.norm(normal)
                query = query_from_point(state.scene, model_db, parent_id, pos, normal)
            else:
                raise HTTPException(422, "body needs either ray or pos+parentId")

            ranked = suggest(priors, model_db, query, limit=limit)
            payload = {
                "parentId": query.parent_id,
                "pos": [float(x) for x in query.pos],
                "rankedCategories": [s.category for s in ranked],
            }
            log.append("suggest", session_id, payload)
            return {
                "revision": state.revision,
                "context": {
                    "parentId": query.parent_id,
                    "parentCategory": query.parent_category,
                    "surfaceType": query.surface_type.key,
                    "surfaceNormal": [float(x) for x in query.surface_normal],
                    "pos": [float(x) for x in query.pos],
                },
                "suggestions": [serialize_suggestion(s, query) for s in ranked],
            }

    # ------------------------------------------------------------ mutation

    @app.post("/session/{session_id}/objects")
    def insert_object(session_id: str, body: dict = Body(...)):
        state = get_session(session_id)
        with state.lock:
            check_revision(state, body)
            model_id = body.get("modelId")
            if model_id not in model_db:
                raise HTTPException(422, f"unknown model {model_id!r}")
            meta = model_db.get(model_id)
            parent_id = body.get("parentId")
            parent = state.scene.object_by_id(parent_id) if parent_id else None
            if parent is None:
                raise HTTPException(422, f"unknown parent {parent_id!r}")
            anchor = _as_vec(body.get("anchor"), "anchor")

            derived_n, gap = surface_at(parent, anchor)
            if gap > PROXIMITY_THRESHOLD:
                raise HTTPException(
                    422, f"anchor is {gap:.3f} m off the parent surface"
                )
            if body.get("surfaceNormal") is not None:
                normal = _as_vec(body["surfaceNormal"], "surfaceNormal")
                if not is_unit(normal, tol=1e-3):
                    raise HTTPException(422, "surfaceNormal must be unit length")
                normal = normal / np.linalg.norm(normal)
            else:
                normal = derived_n
            surface = featurize_surface(normal, parent.is_architecture)

            if body.get("face") is not None:
                try:
                    face = AttachmentFace(body["face"])
                except ValueError:
                    raise HTTPException(422, f"unknown face {body['face']!r}")
            else:
                face = choose_attachment_face(priors, meta.category, surface)
            alpha = float(body.get("alpha", 0.0))

            state.counter += 1
            oid = f"obj-{state.counter}"
            instance = ModelInstance(
                id=oid,
                model_id=model_id,
                transform=compose_placement(anchor, normal, face, alpha, meta),
                parent_id=parent_id,
            )
            state.scene.objects.append(instance)
            state.scene.support_edges.append((oid, parent_id))
            state.placements[oid] = PlacementRecord(
                anchor=tuple(float(x) for x in anchor),
                surface_normal=tuple(float(x) for x in normal),
                face=face,
                alpha=alpha,
                surface_key=surface.key,
            )
            state.revision += 1
            log.append(
                "insert",
                session_id,
                {
                    "objectId": oid,
                    "modelId": model_id,
                    "category": meta.category,
                    "parentId": parent_id,
                    "anchor": [float(x) for x in anchor],
                    "surfaceNormal": [float(x) for x in normal],
                    "face": face.value,
                    "alpha": alpha,
                    "source": body.get("source", "manual"),
                    "revision": state.revision,
                },
            )
            return {
                "revision": state.revision,
                "objectId": oid,
                "object": instance.to_dict(),
            }

    @app.patch("/session/{session_id}/objects/{oid}")
    def update_object(session_id: str, oid: str, body: dict = Body(...)):
        state = get_session(session_id)
        with state.lock:
            check_revision(state, body)
            obj, meta = instance_meta(state, oid)
            current_parent = state.scene.parent_of(oid)
            if current_parent is None:
                raise HTTPException(422, "the scene root cannot be repositioned")

            record = state.placements.get(oid)
            if record is None:
                parent_obj = state.scene.object_by_id(current_parent)
                record = derive_placement_record(obj, parent_obj, model_db)

            moved = "anchor" in body
            rotated = "alpha" in body
            if not moved and not rotated:
                raise HTTPException(422, "nothing to update: send anchor and/or alpha")

            parent_id = current_parent
            if moved:
                parent_id = body.get("parentId", current_parent)
                parent = state.scene.object_by_id(parent_id)
                if parent is None:
                    raise HTTPException(422, f"unknown parent {parent_id!r}")
                if parent_id in _subtree_ids(state.scene, oid):
                    raise HTTPException(422, "new parent lies inside the moved subtree")
                anchor = _as_vec(body["anchor"], "anchor")
                normal, gap = surface_at(parent, anchor)
                if gap > PROXIMITY_THRESHOLD:
                    raise HTTPException(
                        422, f"anchor is {gap:.3f} m off the parent surface"
                    )
                if body.get("surfaceNormal") is not None:
                    normal = _as_vec(body["surfaceNormal"], "surfaceNormal")
                    if not is_unit(normal, tol=1e-3):
                        raise HTTPException(422, "surfaceNormal must be unit length")
                    normal = normal / np.linalg.norm(normal)
                surface = featurize_surface(normal, parent.is_architecture)
                if support_surface_probability(priors, surface, meta.category) <= 0.0:
                    raise HTTPException(
                        422,
                        f"{meta.category} is never supported by {surface.key} surfaces",
                    )
                face = record.face
                if surface.key != record.surface_key:
                    face = choose_attachment_face(priors, meta.category, surface)
                record = PlacementRecord(
                    anchor=tuple(float(x) for x in anchor),
                    surface_normal=tuple(float(x) for x in normal),
                    face=face,
                    alpha=record.alpha,
                    surface_key=surface.key,
                )
            if rotated:
                record.alpha = float(body["alpha"])

            transform = compose_placement(
                np.asarray(record.anchor),
                np.asarray(record.surface_normal),
                record.face,
                record.alpha,
                meta,
            )
            updated = ModelInstance(
                id=oid,
                model_id=obj.model_id,
                transform=transform,
                parent_id=parent_id,
                is_architecture=obj.is_architecture,
            )
            state.scene.objects = [
                updated if o.id == oid else o for o in state.scene.objects
            ]
            state.scene.support_edges = [
                (c, p) for c, p in state.scene.support_edges if c != oid
            ] + [(oid, parent_id)]
            state.placements[oid] = record
            state.revision += 1
            log.append(
                "move" if moved else "rotate",
                session_id,
                {
                    "objectId": oid,
                    "parentId": parent_id,
                    "anchor": list(record.anchor),
                    "surfaceNormal": list(record.surface_normal),
                    "face": record.face.value,
                    "alpha": record.alpha,
                    "revision": state.revision,
                },
            )
            return {"revision": state.revision, "object": updated.to_dict()}

    @app.delete("/session/{session_id}/objects/{oid}")
    def delete_object(
        session_id: str,
        oid: str,
        expectedRevision: int | None = Query(default=None),
    ):
        state = get_session(session_id)
        with state.lock:
            check_revision(state, {}, header=expectedRevision)
            obj = state.scene.object_by_id(oid)
            if obj is None:
                raise HTTPException(404, f"unknown object {oid}")
            if state.scene.parent_of(oid) is None:
                raise HTTPException(422, "the scene root cannot be deleted")
            doomed = _subtree_ids(state.scene, oid)
            state.scene.objects = [o for o in state.scene.objects if o.id not in doomed]
            state.scene.support_edges = [
                (c, p) for c, p in state.scene.support_edges
                if c not in doomed and p not in doomed
            ]
            for gone in doomed:
                state.placements.pop(gone, None)
            state.revision += 1
            log.append(
                "delete",
                session_id,
                {"objectId": oid, "removed": sorted(doomed), "revision": state.revision},
            )
            return {"revision": state.revision, "removed": sorted(doomed)}

    # ------------------------------------------------------ models, export

    @app.get("/models")
    def search_models(q: str = Query(default=""), limit: int = Query(default=20)):
        results = keyword_search(model_db, q, limit=limit)
        return {
            "models": [
                {**m.to_dict(), "thumbnailUrl": f"/thumbnails/{m.model_id}.png"}
                for m in results
            ]
        }

    @app.post("/session/{session_id}/search")
    def session_search(session_id: str, body: dict = Body(...)):
        state = get_session(session_id)
        text = body.get("q", "")
        results = keyword_search(model_db, text, limit=int(body.get("limit", 20)))
        log.append("search", session_id, {"q": text, "hits": len(results)})
        return {
            "revision": state.revision,
            "models": [
                {**m.to_dict(), "thumbnailUrl": f"/thumbnails/{m.model_id}.png"}
                for m in results
            ],
        }

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        if model_id not in model_db:
            raise HTTPException(404, f"unknown model {model_id}")
        meta = model_db.get(model_id)
        return {**meta.to_dict(), "thumbnailUrl": f"/thumbnails/{model_id}.png"}

    @app.get("/thumbnails/{model_id}.png")
    def thumbnail(model_id: str):
        if model_id not in model_db:
            raise HTTPException(404, f"unknown model {model_id}")
        if model_id not in thumbs:
            thumbs[model_id] = _thumbnail_png(model_id, model_db.get(model_id).category)
        return Response(content=thumbs[model_id], media_type="image/png")

    @app.get("/scenes/{session_id}/export")
    def export_scene(session_id: str):
        state = get_session(session_id)
        with state.lock:
            log.append("export", session_id, {"revision": state.revision})
            return state.scene.to_dict()

    return app


def replay_events(events: list[dict], model_db: ModelDatabase) -> dict[str, Scene]:
    """Rebuild final scenes per session from an event stream.

    Mutation payloads carry complete placement parameters, so replay uses
    the same composition path as the live service and reproduces transforms
    exactly.
    """
    scenes: dict[str, Scene] = {}
    for event in events:
        op = event["op"]
        sid = event["sessionId"]
        payload = event.get("payload", {})
        if op == "createSession":
            scenes[sid] = Scene.from_dict(payload["scene"])
        elif op == "insert":
            scene = scenes[sid]
            meta = model_db.get(payload["modelId"])
            instance = ModelInstance(
                id=payload["objectId"],
                model_id=payload["modelId"],
                transform=compose_placement(
                    np.asarray(payload["anchor"], dtype=float),
                    np.asarray(payload["surfaceNormal"], dtype=float),
                    AttachmentFace(payload["face"]),
                    float(payload["alpha"]),
                    meta,
                ),
                parent_id=payload["parentId"],
            )
            scene.objects.append(instance)
            scene.support_edges.append((instance.id, payload["parentId"]))
        elif op in ("move", "rotate"):
            scene = scenes[sid]
            oid = payload["objectId"]
            old = scene.object_by_id(oid)
            meta = model_db.get(old.model_id)
            transform = compose_placement(
                np.asarray(payload["anchor"], dtype=float),
                np.asarray(payload["surfaceNormal"], dtype=float),
                AttachmentFace(payload["face"]),
                float(payload["alpha"]),
                meta,
            )
            updated = ModelInstance(
                id=oid,
                model_id=old.model_id,
                transform=transform,
                parent_id=payload["parentId"],
                is_architecture=old.is_architecture,
            )
            scene.objects = [updated if o.id == oid else o for o in scene.objects]
            scene.support_edges = [
                (c, p) for c, p in scene.support_edges if c != oid
            ] + [(oid, payload["parentId"])]
        elif op == "delete":
            scene = scenes[sid]
            doomed = set(payload.get("removed") or _subtree_ids(scene, payload["objectId"]))
            scene.objects = [o for o in scene.objects if o.id not in doomed]
            scene.support_edges = [
                (c, p) for c, p in scene.support_edges
                if c not in doomed and p not in doomed
            ]
    return scenes


def load_events(path: str | Path) -> list[dict]:
    events = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events
