"""Context queries: score categories, orient them, and rank suggestions.

A query names a point on a support surface inside a scene. Every category
in the model database is scored as

    w = occurrence(category | parent, sceneType, existing count)
        * supportSurface(surfaceType | category)
        + 0.25 * positionScore

where positionScore sums relative-position density times orientation-bin
mass against each sibling under the query parent and against the parent
itself (the architecture root carries no placement signal and is skipped).
The spin angle around the surface normal is swept in 1-degree steps to
maximize positionScore.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from scenehint.corpus import Relationship, category_has_front
from scenehint.geometry import (
    Transform,
    nearest_point_on_box,
    plane_frame,
    project_to_plane,
    require_unit,
    signed_angle,
)
from scenehint.priors import (
    PriorsDB,
    WrappedHistogram,
    attachment_face_probability,
    occurrence_probability,
    relpos_density,
    support_surface_probability,
)
from scenehint.scene import (
    FACE_ORDER,
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    Scene,
    SurfaceType,
    compose_placement,
    featurize_surface,
    placed_centroid,
    placed_front,
    raycast_scene,
    world_front,
)

LAMBDA_OCCURRENCE = 1.0
LAMBDA_POSITION = 0.25

SWEEP_STEP_DEG = 1


@dataclass(frozen=True, eq=False)
class ContextQuery:
    """Where a suggestion is wanted: a point on a parent's support surface."""

    scene: Scene
    parent_id: str
    parent_category: str
    surface_normal: np.ndarray
    surface_type: SurfaceType
    pos: np.ndarray
    scene_type: str


@dataclass(frozen=True)
class Placement:
    transform: Transform
    face: AttachmentFace


@dataclass(frozen=True)
class Suggestion:
    category: str
    representative_model_id: str
    member_model_ids: tuple[str, ...]
    placement: Placement
    score: float
    alpha: float


def query_from_point(
    scene: Scene,
    model_db: ModelDatabase,
    parent_id: str,
    pos,
    surface_normal=None,
    scene_type: str | None = None,
) -> ContextQuery:
    """Build a query from an anchor point; derives the normal when omitted.

    The derived normal is the parent's surface normal nearest the anchor,
    interior-facing for architecture parents.
    """
    parent = scene.object_by_id(parent_id)
    if parent is None:
        raise ValueError(f"parent object {parent_id!r} not in scene")
    meta = model_db.get(parent.model_id)
    pos = np.asarray(pos, dtype=float)

    if surface_normal is None:
        local = parent.transform.inverse().apply_point(pos)
        _, n_local, _ = nearest_point_on_box(
            local, 0.5 * np.asarray(meta.bbox_dims, dtype=float)
        )
        surface_normal = parent.transform.apply_normal(n_local)
        if parent.is_architecture:
            surface_normal = -surface_normal
    else:
        surface_normal = require_unit(surface_normal, "surface normal")

    return ContextQuery(
        scene=scene,
        parent_id=parent_id,
        parent_category=meta.category,
        surface_normal=surface_normal,
        surface_type=featurize_surface(surface_normal, parent.is_architecture),
        pos=pos,
        scene_type=scene_type or scene.scene_type,
    )


def query_from_ray(
    scene: Scene,
    model_db: ModelDatabase,
    origin,
    direction,
    scene_type: str | None = None,
) -> ContextQuery | None:
    """Resolve a pick ray to a query, or None when the ray misses everything."""
    hit = raycast_scene(origin, direction, scene, model_db)
    if hit is None:
        return None
    parent = scene.object_by_id(hit.object_id)
    return ContextQuery(
        scene=scene,
        parent_id=parent.id,
        parent_category=model_db.get(parent.model_id).category,
        surface_normal=hit.normal,
        surface_type=featurize_surface(hit.normal, parent.is_architecture),
        pos=hit.point,
        scene_type=scene_type or scene.scene_type,
    )


@dataclass(frozen=True)
class _NeighborTerm:
    # positional density is independent of the spin angle; only the relative
    # yaw slides with alpha, so the sweep reuses these per-neighbor constants
    density: float
    theta0: float
    hist: WrappedHistogram | None


def _neighbor_terms(
    db: PriorsDB,
    model_db: ModelDatabase,
    category: str,
    query: ContextQuery,
    face: AttachmentFace,
) -> list[_NeighborTerm]:
    meta = model_db.representative(category)
    if meta is None:
        return []
    n_s = query.surface_normal
    centroid = placed_centroid(query.pos, n_s, face, meta)
    front0 = placed_front(n_s, face, 0.0, meta)

    parent = query.scene.object_by_id(query.parent_id)
    refs: list[tuple[ModelInstance, Relationship]] = [
        (sib, Relationship.SIBLING) for sib in query.scene.children_of(query.parent_id)
    ]
    if not parent.is_architecture:
        refs.append((parent, Relationship.CHILD_PARENT))

    terms = []
    for ref, rel in refs:
        ref_meta = model_db.get(ref.model_id)
        ref_front = world_front(ref, ref_meta)
        offset = project_to_plane(centroid - ref.centroid, n_s)
        if category_has_front(ref_meta.category, model_db, db.taxonomy):
            xhat, yhat = plane_frame(n_s, ref_front)
            value = (float(np.dot(offset, xhat)), float(np.dot(offset, yhat)))
        else:
            value = float(np.linalg.norm(offset))
        density = relpos_density(
            db, value, category, ref_meta.category, query.scene_type, rel,
            query.surface_type,
        )
        hist, _ = db.resolve_relorient(
            category, ref_meta.category, query.scene_type, rel, query.surface_type
        )
        terms.append(
            _NeighborTerm(
                density=density,
                theta0=signed_angle(ref_front, front0, n_s),
                hist=hist,
            )
        )
    return terms


def _score_terms(db: PriorsDB, terms: list[_NeighborTerm], alpha: float) -> float:
    total = 0.0
    for t in terms:
        if t.hist is not None:
            mass = t.hist.mass(t.theta0 + alpha, db.smoothing_epsilon)
        else:
            mass = db.smoothing_epsilon
        total += t.density * mass
    return total


def position_score(
    db: PriorsDB,
    model_db: ModelDatabase,
    category: str,
    query: ContextQuery,
    alpha: float,
    face: AttachmentFace | None = None,
) -> float:
    """w_pos for a candidate category spun to alpha; 0 with no neighbors."""
    if face is None:
        face = choose_attachment_face(db, category, query.surface_type)
    return _score_terms(db, _neighbor_terms(db, model_db, category, query, face), alpha)


def choose_attachment_face(db: PriorsDB, category: str, t: SurfaceType) -> AttachmentFace:
    """Most likely box face against a type-t surface; fixed-order tie-break."""
    best_face = FACE_ORDER[0]
    best_p = -1.0
    for face in FACE_ORDER:
        p = attachment_face_probability(db, face, category, t)
        if p > best_p:
            best_face, best_p = face, p
    return best_face


def _optimize_rotation(
    db: PriorsDB,
    model_db: ModelDatabase,
    category: str,
    query: ContextQuery,
    face: AttachmentFace,
) -> tuple[float, float]:
    terms = _neighbor_terms(db, model_db, category, query, face)
    if not terms:
        return 0.0, 0.0
    best_alpha, best_w = 0.0, -1.0
    for deg in range(0, 360, SWEEP_STEP_DEG):
        alpha = math.radians(deg)
        w = _score_terms(db, terms, alpha)
        if w > best_w:
            best_alpha, best_w = alpha, w
    return best_alpha, best_w


def optimize_rotation(
    db: PriorsDB,
    model_db: ModelDatabase,
    category: str,
    query: ContextQuery,
    face: AttachmentFace,
) -> float:
    """Spin angle from a 1-degree sweep maximizing w_pos; ties take the smallest."""
    alpha, _ = _optimize_rotation(db, model_db, category, query, face)
    return alpha


def suggest(
    db: PriorsDB,
    model_db: ModelDatabase,
    query: ContextQuery,
    limit: int | None = None,
) -> list[Suggestion]:
    """Ranked, fully placed suggestions for every category in the model DB.

    Ties in score fall back to category name so rankings are a total order.
    """
    existing = Counter(
        model_db.get(child.model_id).category
        for child in query.scene.children_of(query.parent_id)
    )

    suggestions = []
    for category in model_db.categories():
        rep = model_db.representative(category)
        occ = occurrence_probability(
            db, category, query.parent_category, query.scene_type,
            existing.get(category, 0),
        )
        sup = support_surface_probability(db, query.surface_type, category)
        face = choose_attachment_face(db, category, query.surface_type)
        alpha, w_pos = _optimize_rotation(db, model_db, category, query, face)
        score = LAMBDA_OCCURRENCE * occ * sup + LAMBDA_POSITION * w_pos
        transform = compose_placement(
            query.pos, query.surface_normal, face, alpha, rep
        )
        suggestions.append(
            Suggestion(
                category=category,
                representative_model_id=rep.model_id,
                member_model_ids=tuple(
                    m.model_id for m in model_db.by_category[category]
                ),
                placement=Placement(transform=transform, face=face),
                score=score,
                alpha=alpha,
            )
        )

    suggestions.sort(key=lambda s: (-s.score, s.category))
    return suggestions[:limit] if limit is not None else suggestions


_TOKEN = re.compile(r"[a-z0-9]+")


def keyword_search(model_db: ModelDatabase, text: str, limit: int | None = None):
    """Models ranked by how many query tokens hit their name/tags/category.

    Case-insensitive; models matching no token are dropped; empty query
    returns nothing.
    """
    tokens = _TOKEN.findall(text.lower())
    if not tokens:
        return []
    scored = []
    for meta in model_db.models:
        haystack = set(_TOKEN.findall(meta.name.lower()))
        haystack.update(_TOKEN.findall(meta.category.lower()))
        haystack.update(_TOKEN.findall(meta.description.lower()))
        for tag in meta.tags:
            haystack.update(_TOKEN.findall(tag.lower()))
        score = sum(1 for t in set(tokens) if t in haystack)
        if score > 0:
            scored.append((score, meta))
    scored.sort(key=lambda s: (-s[0], s[1].model_id))
    if limit is not None:
        scored = scored[:limit]
    return [meta for _, meta in scored]


def expand_category(
    db: PriorsDB,
    model_db: ModelDatabase,
    category: str,
    placement: Placement,
) -> list[tuple[str, Placement]]:
    """Drill-down: every member of a category with the suggestion's placement."""
    members = model_db.by_category.get(category, [])
    return [(m.model_id, placement) for m in members]
