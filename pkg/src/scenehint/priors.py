"""Learned placement priors with taxonomy backoff and geometry fallbacks.

Five distribution families feed suggestion scoring: child-count histograms,
support-surface categoricals, attachment-face categoricals, relative-position
KDEs, and wrapped relative-orientation histograms. Sparse keys back off along
the category taxonomy and then into a pooled scene type; keys with no data at
any level fall back to a small epsilon or to box-geometry heuristics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from scenehint.corpus import ObservationSet, Relationship
from scenehint.scene import (
    AttachmentFace,
    Interiority,
    ModelDatabase,
    ModelMetadata,
    NormalClass,
    ShapeClass,
    SurfaceType,
)

PRIORS_FORMAT_VERSION = 1

BACKOFF_THRESHOLD = 5  # entries with fewer observations defer to a coarser key
SMOOTHING_EPSILON = 1e-4
ORIENT_BINS = 36
ORIENT_BIN_WIDTH = 2.0 * math.pi / ORIENT_BINS
BANDWIDTH_FLOOR = 0.05  # meters; keeps duplicated samples from degenerating
POOLED_SCENE = "*"

FALLBACK_SURFACE = SurfaceType(NormalClass.UP, Interiority.EXTERIOR)


class PriorsError(Exception):
    """Bad priors input or file: empty observations, version drift, corruption."""


@dataclass(frozen=True)
class CategoryTaxonomy:
    """Category hierarchy for backoff plus the set of front-less categories."""

    parents: dict[str, str | None] = field(default_factory=dict)
    no_front_categories: frozenset[str] = frozenset()

    def __post_init__(self):
        for start in self.parents:
            seen = set()
            node: str | None = start
            while node is not None:
                if node in seen:
                    raise ValueError(f"taxonomy cycle through {node!r}")
                seen.add(node)
                node = self.parents.get(node)

    def ancestors(self, category: str) -> list[str]:
        """The category itself followed by its ancestor chain, most specific first."""
        chain = [category]
        node = self.parents.get(category)
        while node is not None and node not in chain:
            chain.append(node)
            node = self.parents.get(node)
        return chain

    def to_dict(self) -> dict:
        return {
            "parents": dict(sorted(self.parents.items())),
            "noFrontCategories": sorted(self.no_front_categories),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryTaxonomy":
        return cls(
            parents=dict(d.get("parents", {})),
            no_front_categories=frozenset(d.get("noFrontCategories", ())),
        )


def load_taxonomy(path: str | Path) -> CategoryTaxonomy:
    with open(path, "r", encoding="utf-8") as f:
        return CategoryTaxonomy.from_dict(json.load(f))


@dataclass(frozen=True)
class CountHistogram:
    """How many children of one category sit on one parent category.

    Raw integer tallies are kept so tail probabilities divide once and match
    count-based oracles exactly.
    """

    child_category: str
    parent_category: str
    scene_type: str
    counts: dict[int, int]
    n_obs: int

    @property
    def probs(self) -> dict[int, float]:
        return {k: v / self.n_obs for k, v in sorted(self.counts.items())}

    def tail_probability(self, k: int) -> float:
        """P(count > k): integer tail sum over the histogram, one division."""
        tail = sum(v for i, v in self.counts.items() if i > k)
        return tail / self.n_obs


@dataclass(frozen=True)
class SurfaceCategorical:
    category: str
    counts: dict[str, int]  # SurfaceType key -> tally
    n_obs: int

    @property
    def probs(self) -> dict[str, float]:
        return {k: v / self.n_obs for k, v in sorted(self.counts.items())}


@dataclass(frozen=True)
class FaceCategorical:
    category: str
    surface: str  # SurfaceType key
    counts: dict[AttachmentFace, int]
    n_obs: int

    @property
    def probs(self) -> dict[AttachmentFace, float]:
        return {k: v / self.n_obs for k, v in sorted(self.counts.items())}


RelKey = tuple[str, str, str, Relationship, str]  # obj, ref, sceneType, R, surface


@dataclass(frozen=True)
class RelPosKde:
    """Gaussian-kernel density over relative-position samples.

    2-D samples live in the reference yaw frame; radial entries hold scalar
    distances for front-less references. Bandwidth is Scott's n^(-1/6)*sigma
    per axis, floored so duplicated samples stay finite.
    """

    key: RelKey
    radial: bool
    samples: np.ndarray  # (n,2) or (n,)
    bandwidth: np.ndarray  # (2,) or (1,)
    n_obs: int

    def density(self, value) -> float:
        if self.radial:
            h = float(self.bandwidth[0])
            z = (float(value) - self.samples) / h
            return float(
                np.exp(-0.5 * z * z).sum() / (self.n_obs * h * math.sqrt(2.0 * math.pi))
            )
        hx, hy = float(self.bandwidth[0]), float(self.bandwidth[1])
        d = (np.asarray(value, dtype=float) - self.samples) / (hx, hy)
        norm = self.n_obs * 2.0 * math.pi * hx * hy
        return float(np.exp(-0.5 * (d * d).sum(axis=1)).sum() / norm)


@dataclass(frozen=True)
class WrappedHistogram:
    """36-bin circular histogram of relative yaw, 10 degrees per bin."""

    key: RelKey
    bin_counts: tuple[int, ...]
    n_obs: int

    def probs(self, epsilon: float) -> list[float]:
        denom = self.n_obs + ORIENT_BINS * epsilon
        return [(c + epsilon) / denom for c in self.bin_counts]

    def mass(self, theta: float, epsilon: float) -> float:
        return (self.bin_counts[orient_bin(theta)] + epsilon) / (
            self.n_obs + ORIENT_BINS * epsilon
        )


def orient_bin(theta: float) -> int:
    w = math.fmod(theta, 2.0 * math.pi)
    if w < 0.0:
        w += 2.0 * math.pi
    return min(ORIENT_BINS - 1, int(w / ORIENT_BIN_WIDTH))


@dataclass
class PriorsDB:
    """All learned priors plus the knobs queries need; immutable by convention."""

    taxonomy: CategoryTaxonomy
    count_hists: dict[tuple[str, str, str], CountHistogram]
    support_cats: dict[str, SurfaceCategorical]
    face_cats: dict[tuple[str, str], FaceCategorical]
    rel_pos: dict[RelKey, RelPosKde]
    rel_orient: dict[RelKey, WrappedHistogram]
    category_shapes: dict[str, ShapeClass]
    backoff_threshold: int = BACKOFF_THRESHOLD
    smoothing_epsilon: float = SMOOTHING_EPSILON

    # -- backoff resolution; each returns (entry or None, keys tried in order)

    def _resolve(self, table: dict, keys) -> tuple[object | None, list]:
        attempted = []
        for k in keys:
            attempted.append(k)
            entry = table.get(k)
            if entry is not None and entry.n_obs >= self.backoff_threshold:
                return entry, attempted
        return None, attempted

    def resolve_count(self, c: str, p_c: str, s_c: str):
        keys = [
            (anc, p_c, s)
            for s in (s_c, POOLED_SCENE)
            for anc in self.taxonomy.ancestors(c)
        ]
        return self._resolve(self.count_hists, keys)

    def resolve_support(self, c: str):
        return self._resolve(self.support_cats, self.taxonomy.ancestors(c))

    def resolve_face(self, c: str, t: SurfaceType):
        keys = [(anc, t.key) for anc in self.taxonomy.ancestors(c)]
        return self._resolve(self.face_cats, keys)

    def _rel_keys(self, c_obj: str, c_ref: str, s_c: str, r: Relationship, t: SurfaceType):
        return [
            (anc, c_ref, s, r, t.key)
            for s in (s_c, POOLED_SCENE)
            for anc in self.taxonomy.ancestors(c_obj)
        ]

    def resolve_relpos(self, c_obj, c_ref, s_c, r, t):
        return self._resolve(self.rel_pos, self._rel_keys(c_obj, c_ref, s_c, r, t))

    def resolve_relorient(self, c_obj, c_ref, s_c, r, t):
        return self._resolve(self.rel_orient, self._rel_keys(c_obj, c_ref, s_c, r, t))


def learn_priors(
    obs: ObservationSet,
    taxonomy: CategoryTaxonomy | None,
    model_db: ModelDatabase,
) -> PriorsDB:
    """Estimate every prior family from an observation set.

    Each entry is also materialized under its category ancestors and under
    the pooled scene type so backoff lookups are plain dictionary probes.
    Counts aggregate per parent instance when pooling (two chairs plus one
    stool on a room is three seating children on that room). Deterministic:
    identical observations give identical databases.
    """
    if not (obs.counts or obs.supports or obs.relatives):
        raise PriorsError("cannot learn from an empty observation set")
    taxonomy = taxonomy or CategoryTaxonomy()

    # count histograms, aggregated per concrete parent instance
    per_instance: dict[tuple[str, str, str], dict[tuple[str, str], int]] = {}
    for ob in obs.counts:
        for anc in taxonomy.ancestors(ob.child_category):
            for s in (ob.scene_type, POOLED_SCENE):
                inst = per_instance.setdefault((anc, ob.parent_category, s), {})
                iid = (ob.scene_id, ob.parent_instance_id)
                inst[iid] = inst.get(iid, 0) + ob.count
    count_hists = {}
    for key, inst in per_instance.items():
        tallies: dict[int, int] = {}
        for v in inst.values():
            tallies[v] = tallies.get(v, 0) + 1
        count_hists[key] = CountHistogram(
            child_category=key[0],
            parent_category=key[1],
            scene_type=key[2],
            counts=tallies,
            n_obs=len(inst),
        )

    # support-surface categoricals per category (scene types pooled by design)
    surf_tallies: dict[str, dict[str, int]] = {}
    face_tallies: dict[tuple[str, str], dict[AttachmentFace, int]] = {}
    for ob in obs.supports:
        for anc in taxonomy.ancestors(ob.child_category):
            st = surf_tallies.setdefault(anc, {})
            st[ob.parent_surface.key] = st.get(ob.parent_surface.key, 0) + 1
            ft = face_tallies.setdefault((anc, ob.parent_surface.key), {})
            ft[ob.child_face] = ft.get(ob.child_face, 0) + 1
    support_cats = {
        c: SurfaceCategorical(c, t, sum(t.values())) for c, t in surf_tallies.items()
    }
    face_cats = {
        k: FaceCategorical(k[0], k[1], t, sum(t.values()))
        for k, t in face_tallies.items()
    }

    # relative position and orientation, same key space
    pos_samples: dict[RelKey, list] = {}
    orient_counts: dict[RelKey, list[int]] = {}
    radial_keys: set[RelKey] = set()
    for ob in obs.relatives:
        for anc in taxonomy.ancestors(ob.obj_category):
            for s in (ob.scene_type, POOLED_SCENE):
                key = (anc, ob.ref_category, s, ob.relationship, ob.surface.key)
                if ob.radial is not None:
                    radial_keys.add(key)
                    pos_samples.setdefault(key, []).append(float(ob.radial))
                else:
                    pos_samples.setdefault(key, []).append(
                        (float(ob.delta[0]), float(ob.delta[1]))
                    )
                bins = orient_counts.setdefault(key, [0] * ORIENT_BINS)
                bins[orient_bin(ob.theta)] += 1

    rel_pos = {}
    for key, samples in pos_samples.items():
        radial = key in radial_keys
        arr = np.array(sorted(samples), dtype=float)
        n = len(samples)
        sigma = arr.std(axis=0) if not radial else np.array([arr.std()])
        bandwidth = np.maximum(BANDWIDTH_FLOOR, sigma * n ** (-1.0 / 6.0))
        rel_pos[key] = RelPosKde(
            key=key, radial=radial, samples=arr, bandwidth=bandwidth, n_obs=n
        )
    rel_orient = {
        key: WrappedHistogram(key=key, bin_counts=tuple(bins), n_obs=sum(bins))
        for key, bins in orient_counts.items()
    }

    category_shapes = {
        c: model_db.representative(c).shape_class for c in model_db.categories()
    }

    return PriorsDB(
        taxonomy=taxonomy,
        count_hists=count_hists,
        support_cats=support_cats,
        face_cats=face_cats,
        rel_pos=rel_pos,
        rel_orient=rel_orient,
        category_shapes=category_shapes,
    )


def occurrence_probability(db: PriorsDB, c: str, p_c: str, s_c: str, k: int) -> float:
    """P(more than k children of category c on a parent of category p_c).

    Tail sum over the most specific usable histogram; epsilon when no entry
    survives backoff.
    """
    hist, _ = db.resolve_count(c, p_c, s_c)
    if hist is None:
        return db.smoothing_epsilon
    return hist.tail_probability(k)


def support_surface_probability(db: PriorsDB, t: SurfaceType, c: str) -> float:
    """P(category c is supported by a surface of type t)."""
    cat, _ = db.resolve_support(c)
    if cat is None:
        surface, _ = _fallback_for(db, c, None)
        return 1.0 if t == surface else 0.0
    return cat.counts.get(t.key, 0) / cat.n_obs


def attachment_face_probability(
    db: PriorsDB, f: AttachmentFace, c: str, t: SurfaceType
) -> float:
    """P(category c touches a type-t surface with box face f)."""
    cat, _ = db.resolve_face(c, t)
    if cat is None:
        _, face = _fallback_for(db, c, t)
        return 1.0 if f == face else 0.0
    return cat.counts.get(f, 0) / cat.n_obs


def geometry_fallback(
    meta: ModelMetadata, surface: SurfaceType | None = None
) -> tuple[SurfaceType, AttachmentFace]:
    """Attachment defaults from box proportions when no data exists.

    Upward exterior surfaces are preferred. Blocky boxes sit on their
    bottom, rods lie on a side, and slabs press their back against wall-like
    surfaces but their bottom everywhere else.
    """
    face = _shape_face(meta.shape_class, surface or FALLBACK_SURFACE)
    return FALLBACK_SURFACE, face


def _shape_face(shape: ShapeClass, surface: SurfaceType) -> AttachmentFace:
    if shape == ShapeClass.THIN:
        return AttachmentFace.LEFT
    if shape == ShapeClass.FLAT and surface.normal_class == NormalClass.HORIZONTAL:
        return AttachmentFace.BACK
    return AttachmentFace.BOTTOM


def _fallback_for(
    db: PriorsDB, c: str, t: SurfaceType | None
) -> tuple[SurfaceType, AttachmentFace]:
    shape = db.category_shapes.get(c, ShapeClass.BLOCKY)
    return FALLBACK_SURFACE, _shape_face(shape, t or FALLBACK_SURFACE)


def relpos_density(
    db: PriorsDB,
    value,
    c_obj: str,
    c_ref: str,
    s_c: str,
    r: Relationship,
    t: SurfaceType,
) -> float:
    """Relative-position density at a (x, y) offset or radial distance."""
    kde, _ = db.resolve_relpos(c_obj, c_ref, s_c, r, t)
    if kde is None:
        return db.smoothing_epsilon
    return kde.density(value)


def relorient_probability(
    db: PriorsDB,
    theta: float,
    c_obj: str,
    c_ref: str,
    s_c: str,
    r: Relationship,
    t: SurfaceType,
) -> float:
    """Mass of the 10-degree orientation bin containing theta."""
    hist, _ = db.resolve_relorient(c_obj, c_ref, s_c, r, t)
    if hist is None:
        return db.smoothing_epsilon
    return hist.mass(theta, db.smoothing_epsilon)


def save_priors(db: PriorsDB, path: str | Path) -> None:
    doc = {
        "formatVersion": PRIORS_FORMAT_VERSION,
        "backoffThreshold": db.backoff_threshold,
        "smoothingEpsilon": db.smoothing_epsilon,
        "taxonomy": db.taxonomy.to_dict(),
        "categoryShapes": {
            c: s.value for c, s in sorted(db.category_shapes.items())
        },
        "countHists": [
            {
                "childCategory": h.child_category,
                "parentCategory": h.parent_category,
                "sceneType": h.scene_type,
                "counts": {str(k): v for k, v in sorted(h.counts.items())},
                "nObs": h.n_obs,
            }
            for _, h in sorted(db.count_hists.items())
        ],
        "supportCats": [
            {
                "category": c.category,
                "counts": dict(sorted(c.counts.items())),
                "nObs": c.n_obs,
            }
            for _, c in sorted(db.support_cats.items())
        ],
        "faceCats": [
            {
                "category": c.category,
                "surface": c.surface,
                "counts": {f.value: v for f, v in sorted(c.counts.items())},
                "nObs": c.n_obs,
            }
            for _, c in sorted(db.face_cats.items())
        ],
        "relPos": [
            {
                "objCategory": k.key[0],
                "refCategory": k.key[1],
                "sceneType": k.key[2],
                "relationship": k.key[3].value,
                "surface": k.key[4],
                "radial": k.radial,
                "samples": k.samples.tolist(),
                "bandwidth": k.bandwidth.tolist(),
                "nObs": k.n_obs,
            }
            for _, k in sorted(db.rel_pos.items())
        ],
        "relOrient": [
            {
                "objCategory": h.key[0],
                "refCategory": h.key[1],
                "sceneType": h.key[2],
                "relationship": h.key[3].value,
                "surface": h.key[4],
                "binCounts": list(h.bin_counts),
                "nObs": h.n_obs,
            }
            for _, h in sorted(db.rel_orient.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_priors(path: str | Path) -> PriorsDB:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise PriorsError(f"{path}: corrupt priors file: {e}") from e
    if not isinstance(doc, dict) or doc.get("formatVersion") != PRIORS_FORMAT_VERSION:
        raise PriorsError(
            f"{path}: unsupported priors formatVersion "
            f"{doc.get('formatVersion')!r}, expected {PRIORS_FORMAT_VERSION}"
        )

    count_hists = {}
    for h in doc["countHists"]:
        key = (h["childCategory"], h["parentCategory"], h["sceneType"])
        count_hists[key] = CountHistogram(
            *key,
            counts={int(k): v for k, v in h["counts"].items()},
            n_obs=h["nObs"],
        )
    support_cats = {
        c["category"]: SurfaceCategorical(c["category"], dict(c["counts"]), c["nObs"])
        for c in doc["supportCats"]
    }
    face_cats = {}
    for c in doc["faceCats"]:
        key = (c["category"], c["surface"])
        face_cats[key] = FaceCategorical(
            c["category"],
            c["surface"],
            {AttachmentFace(f): v for f, v in c["counts"].items()},
            c["nObs"],
        )
    rel_pos = {}
    for e in doc["relPos"]:
        key = (
            e["objCategory"],
            e["refCategory"],
            e["sceneType"],
            Relationship(e["relationship"]),
            e["surface"],
        )
        rel_pos[key] = RelPosKde(
            key=key,
            radial=e["radial"],
            samples=np.array(e["samples"], dtype=float),
            bandwidth=np.array(e["bandwidth"], dtype=float),
            n_obs=e["nObs"],
        )
    rel_orient = {}
    for e in doc["relOrient"]:
        key = (
            e["objCategory"],
            e["refCategory"],
            e["sceneType"],
            Relationship(e["relationship"]),
            e["surface"],
        )
        rel_orient[key] = WrappedHistogram(
            key=key, bin_counts=tuple(e["binCounts"]), n_obs=e["nObs"]
        )

    return PriorsDB(
        taxonomy=CategoryTaxonomy.from_dict(doc.get("taxonomy", {})),
        count_hists=count_hists,
        support_cats=support_cats,
        face_cats=face_cats,
        rel_pos=rel_pos,
        rel_orient=rel_orient,
        category_shapes={
            c: ShapeClass(s) for c, s in doc.get("categoryShapes", {}).items()
        },
        backoff_threshold=doc["backoffThreshold"],
        smoothing_epsilon=doc["smoothingEpsilon"],
    )
