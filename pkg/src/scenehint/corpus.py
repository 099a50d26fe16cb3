"""Corpus loading and observation extraction.

Reads scene and model files, validates them, and turns support edges into
the flat observation lists (support, count, relative placement) that prior
learning consumes. Also infers missing support edges geometrically as a
loading fallback.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from scenehint.geometry import (
    nearest_point_on_box,
    plane_frame,
    project_to_plane,
    signed_angle,
    vec3,
)
from scenehint.scene import (
    FACE_ORDER,
    AttachmentFace,
    Interiority,
    ModelDatabase,
    ModelInstance,
    NormalClass,
    Scene,
    SurfaceType,
    featurize_surface,
    load_model_db,
    load_scene_file,
    validate_support_tree,
    world_front,
)

logger = logging.getLogger(__name__)

# contact tolerance between a child face midpoint and the parent surface, meters
PROXIMITY_THRESHOLD = 0.05


class CorpusError(Exception):
    """Invalid corpus input: parse failure, bad reference, broken tree."""


class Relationship(str, Enum):
    SIBLING = "sibling"
    CHILD_PARENT = "childParent"


@dataclass(frozen=True)
class SupportObservation:
    child_category: str
    parent_category: str
    scene_type: str
    parent_surface: SurfaceType
    child_face: AttachmentFace


@dataclass(frozen=True)
class CountObservation:
    """Children of one category found on one concrete parent instance.

    scene_id/parent_instance_id identify the instance so learning can
    re-aggregate counts per instance when pooling categories upward.
    """

    child_category: str
    parent_category: str
    scene_type: str
    count: int
    scene_id: str
    parent_instance_id: str


@dataclass(frozen=True)
class RelObservation:
    """Relative placement of one object against a reference object.

    delta is (x, y) in the reference yaw frame on the object's support
    plane; radial replaces it when the reference category has no semantic
    front. theta is the relative yaw of the object's front against the
    reference's front, in [0, 2*pi).
    """

    obj_category: str
    ref_category: str
    scene_type: str
    relationship: Relationship
    surface: SurfaceType
    theta: float
    delta: tuple[float, float] | None = None
    radial: float | None = None

    def __post_init__(self):
        if (self.delta is None) == (self.radial is None):
            raise ValueError("exactly one of delta/radial must be set")


@dataclass(frozen=True)
class CorpusStats:
    scene_count: int
    scenes_per_type: dict[str, int]


@dataclass
class ObservationSet:
    supports: list[SupportObservation] = field(default_factory=list)
    counts: list[CountObservation] = field(default_factory=list)
    relatives: list[RelObservation] = field(default_factory=list)
    stats: CorpusStats = field(default_factory=lambda: CorpusStats(0, {}))


def support_contact(
    child: ModelInstance,
    parent: ModelInstance,
    model_db: ModelDatabase,
) -> tuple[np.ndarray, AttachmentFace, float, bool]:
    """Contact geometry between a supported child and its parent.

    Tests each of the child's six bounding-box face midpoints against the
    parent's nearest surface point and keeps the closest pair. Returns
    (support normal in world space, child attachment face, contact
    distance, low_confidence). Architecture parents support children on
    their interior, so their outward surface normals are flipped.

    When no face midpoint lies within PROXIMITY_THRESHOLD of the parent the
    result falls back to a bottom attachment on an upward surface and is
    flagged low-confidence.
    """
    cmeta = model_db.get(child.model_id)
    pmeta = model_db.get(parent.model_id)
    canon = cmeta.canonical_rotation
    parent_inv = parent.transform.inverse()
    parent_half = 0.5 * np.asarray(pmeta.bbox_dims, dtype=float)

    best: tuple[float, AttachmentFace, np.ndarray] | None = None
    for face in FACE_ORDER:
        mid_local = canon.T @ cmeta.face_center(face)
        mid_world = child.transform.apply_point(mid_local)
        q_local, n_local, _ = nearest_point_on_box(
            parent_inv.apply_point(mid_world), parent_half
        )
        q_world = parent.transform.apply_point(q_local)
        dist = float(np.linalg.norm(mid_world - q_world))
        if best is None or dist < best[0] - 1e-12:
            n_world = parent.transform.apply_normal(n_local)
            if parent.is_architecture:
                n_world = -n_world
            best = (dist, face, n_world)

    dist, face, n_world = best
    if dist <= PROXIMITY_THRESHOLD:
        return n_world, face, dist, False
    return vec3(0.0, 0.0, 1.0), AttachmentFace.BOTTOM, dist, True


def identify_support_surface(
    child: ModelInstance,
    parent: ModelInstance,
    model_db: ModelDatabase,
) -> tuple[SurfaceType, AttachmentFace, bool]:
    """Featurized support surface and attachment face for one support edge.

    The third element flags the no-contact fallback (floating child).
    """
    n_world, face, _, low = support_contact(child, parent, model_db)
    if low:
        interiority = (
            Interiority.INTERIOR if parent.is_architecture else Interiority.EXTERIOR
        )
        return SurfaceType(NormalClass.UP, interiority), face, True
    return featurize_surface(n_world, parent.is_architecture), face, False


def category_has_front(category: str, model_db: ModelDatabase, taxonomy) -> bool:
    """Whether relative positions against this category keep a 2-D frame.

    A category loses its front when the taxonomy lists it as front-less or
    no member model carries a semantic front.
    """
    if taxonomy is not None and category in getattr(taxonomy, "no_front_categories", ()):
        return False
    return model_db.category_has_semantic_front(category)


def _relative_observation(
    obj: ModelInstance,
    ref: ModelInstance,
    relationship: Relationship,
    plane_normal: np.ndarray,
    surface: SurfaceType,
    scene_type: str,
    model_db: ModelDatabase,
    taxonomy,
) -> RelObservation:
    obj_meta = model_db.get(obj.model_id)
    ref_meta = model_db.get(ref.model_id)
    obj_front = world_front(obj, obj_meta)
    ref_front = world_front(ref, ref_meta)

    offset = project_to_plane(obj.centroid - ref.centroid, plane_normal)
    theta = signed_angle(ref_front, obj_front, plane_normal)

    if category_has_front(ref_meta.category, model_db, taxonomy):
        xhat, yhat = plane_frame(plane_normal, ref_front)
        delta = (float(np.dot(offset, xhat)), float(np.dot(offset, yhat)))
        return RelObservation(
            obj_category=obj_meta.category,
            ref_category=ref_meta.category,
            scene_type=scene_type,
            relationship=relationship,
            surface=surface,
            theta=theta,
            delta=delta,
        )
    return RelObservation(
        obj_category=obj_meta.category,
        ref_category=ref_meta.category,
        scene_type=scene_type,
        relationship=relationship,
        surface=surface,
        theta=theta,
        radial=float(np.linalg.norm(offset)),
    )


def extract_observations(
    scenes: list[Scene],
    model_db: ModelDatabase,
    taxonomy=None,
) -> ObservationSet:
    """All learning observations from a validated scene list.

    Per support edge: one SupportObservation, one child-parent
    RelObservation, and one sibling RelObservation per same-parent sibling
    (both directions arise as each sibling takes its turn as the subject).
    Count observations are per (parent instance, child category), with
    zeros recorded for every child category seen on that parent category
    anywhere in the corpus. Output order is fixed: scenes by id, objects by
    id, siblings by id.
    """
    category_of = {}
    for scene in scenes:
        for obj in scene.objects:
            category_of[obj.id, scene.id] = model_db.get(obj.model_id).category

    # which (child, parent) category pairs co-occur anywhere; drives zeros
    seen_pairs: set[tuple[str, str]] = set()
    for scene in scenes:
        for child_id, parent_id in scene.support_edges:
            seen_pairs.add(
                (category_of[child_id, scene.id], category_of[parent_id, scene.id])
            )
    children_by_parent_cat: dict[str, list[str]] = defaultdict(list)
    for child_cat, parent_cat in sorted(seen_pairs):
        children_by_parent_cat[parent_cat].append(child_cat)

    supports: list[SupportObservation] = []
    counts: list[CountObservation] = []
    relatives: list[RelObservation] = []
    per_type: Counter[str] = Counter()

    for scene in sorted(scenes, key=lambda s: s.id):
        per_type[scene.scene_type] += 1
        by_id = {o.id: o for o in scene.objects}
        parent_of = {c: p for c, p in scene.support_edges}
        children_of: dict[str, list[str]] = defaultdict(list)
        for c, p in scene.support_edges:
            children_of[p].append(c)

        for obj in sorted(scene.objects, key=lambda o: o.id):
            pid = parent_of.get(obj.id)
            if pid is not None:
                parent = by_id[pid]
                obj_cat = category_of[obj.id, scene.id]
                parent_cat = category_of[pid, scene.id]
                n_world, face, _, low = support_contact(obj, parent, model_db)
                if low:
                    interiority = (
                        Interiority.INTERIOR
                        if parent.is_architecture
                        else Interiority.EXTERIOR
                    )
                    surface = SurfaceType(NormalClass.UP, interiority)
                else:
                    surface = featurize_surface(n_world, parent.is_architecture)
                supports.append(
                    SupportObservation(
                        child_category=obj_cat,
                        parent_category=parent_cat,
                        scene_type=scene.scene_type,
                        parent_surface=surface,
                        child_face=face,
                    )
                )
                relatives.append(
                    _relative_observation(
                        obj, parent, Relationship.CHILD_PARENT,
                        n_world, surface, scene.scene_type, model_db, taxonomy,
                    )
                )
                for sib_id in sorted(children_of[pid]):
                    if sib_id == obj.id:
                        continue
                    relatives.append(
                        _relative_observation(
                            obj, by_id[sib_id], Relationship.SIBLING,
                            n_world, surface, scene.scene_type, model_db, taxonomy,
                        )
                    )

            # one count per child category ever seen on this parent category
            parent_cat = category_of[obj.id, scene.id]
            tallies = Counter(
                category_of[c, scene.id] for c in children_of.get(obj.id, ())
            )
            for child_cat in children_by_parent_cat.get(parent_cat, ()):
                counts.append(
                    CountObservation(
                        child_category=child_cat,
                        parent_category=parent_cat,
                        scene_type=scene.scene_type,
                        count=tallies.get(child_cat, 0),
                        scene_id=scene.id,
                        parent_instance_id=obj.id,
                    )
                )

    return ObservationSet(
        supports=supports,
        counts=counts,
        relatives=relatives,
        stats=CorpusStats(scene_count=len(scenes), scenes_per_type=dict(per_type)),
    )


def infer_support_edges(scene: Scene, model_db: ModelDatabase) -> list[tuple[str, str]]:
    """Geometric support edges for scenes that ship without them.

    Every non-architecture object attaches to the candidate whose surface
    its faces touch most closely; among contacts within the proximity
    threshold the largest-volume candidate wins (a desk beats the book
    resting on it), ties by object id. Only a loading fallback -- authored
    edges are always preferred.
    """
    roots = [o for o in scene.objects if o.is_architecture]
    if len(roots) != 1:
        raise CorpusError(
            f"scene {scene.id}: support inference needs exactly one architecture "
            f"object, found {len(roots)}"
        )
    root = roots[0]

    def volume(obj: ModelInstance) -> float:
        dims = model_db.get(obj.model_id).bbox_dims
        return float(np.prod(np.asarray(dims) * obj.transform.scales))

    edges: list[tuple[str, str]] = []
    for obj in sorted(scene.objects, key=lambda o: o.id):
        if obj.id == root.id:
            continue
        candidates = []
        for other in scene.objects:
            if other.id == obj.id:
                continue
            _, _, dist, low = support_contact(obj, other, model_db)
            candidates.append((np.inf if low else dist, other))
        touching = [c for d, c in candidates if d <= PROXIMITY_THRESHOLD]
        if touching:
            touching.sort(key=lambda o: (-volume(o), o.id))
            edges.append((obj.id, touching[0].id))
        else:
            candidates.sort(key=lambda t: (t[0], t[1].id))
            edges.append((obj.id, candidates[0][1].id))
    return edges


def load_corpus(
    scene_paths: list[str | Path],
    models_path: str | Path,
) -> tuple[list[Scene], ModelDatabase]:
    """Load and validate scene files against a model database file.

    Raises CorpusError naming the offending file and object for unknown
    model ids, malformed transforms, and broken support trees.
    """
    try:
        model_db = load_model_db(models_path)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as e:
        raise CorpusError(f"{models_path}: {e}") from e

    scenes: list[Scene] = []
    for path in scene_paths:
        try:
            scene = load_scene_file(path)
        except (OSError, json.JSONDecodeError, ValueError, KeyError) as e:
            raise CorpusError(f"{path}: {e}") from e

        for obj in scene.objects:
            if obj.model_id not in model_db:
                raise CorpusError(
                    f"{path}: object {obj.id} references unknown model "
                    f"{obj.model_id}"
                )
            issues = obj.transform.validate()
            if issues:
                raise CorpusError(
                    f"{path}: object {obj.id} has invalid transform: "
                    + "; ".join(issues)
                )

        if not scene.support_edges and len(scene.objects) > 1:
            from_parents = [
                (o.id, o.parent_id) for o in scene.objects if o.parent_id is not None
            ]
            if from_parents:
                scene.support_edges = from_parents
            else:
                logger.info("scene %s: inferring support edges", scene.id)
                scene.support_edges = infer_support_edges(scene, model_db)

        violations = validate_support_tree(scene)
        if violations:
            raise CorpusError(f"{path}: invalid support tree: " + "; ".join(violations))
        scenes.append(scene)

    return scenes, model_db


def load_corpus_dir(root: str | Path):
    """Load the corpus/scenes + corpus/models.json + corpus/taxonomy.json layout.

    Returns (scenes, model_db, taxonomy); taxonomy is None when the file is
    absent.
    """
    root = Path(root)
    scenes_dir = root / "scenes"
    models_path = root / "models.json"
    if not models_path.exists():
        raise CorpusError(f"{models_path}: missing model database file")
    scene_paths = sorted(scenes_dir.glob("*.json")) if scenes_dir.is_dir() else []
    if not scene_paths:
        raise CorpusError(f"{scenes_dir}: no scene files found")
    scenes, model_db = load_corpus(scene_paths, models_path)

    taxonomy = None
    tax_path = root / "taxonomy.json"
    if tax_path.exists():
        from scenehint.priors import load_taxonomy

        taxonomy = load_taxonomy(tax_path)
    return scenes, model_db, taxonomy
