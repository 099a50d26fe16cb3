"""Context-driven placement suggestions for 3D scenes.

Learns where object categories live (which surfaces, which neighbors, at
what offsets and headings) from a scene corpus, then ranks categories and
proposes full placements for a clicked point in a scene being edited.
"""

from scenehint.corpus import (
    CorpusError,
    ObservationSet,
    Relationship,
    extract_observations,
    identify_support_surface,
    infer_support_edges,
    load_corpus,
    load_corpus_dir,
)
from scenehint.geometry import Transform
from scenehint.priors import (
    CategoryTaxonomy,
    PriorsDB,
    PriorsError,
    learn_priors,
    load_priors,
    load_taxonomy,
    save_priors,
)
from scenehint.scene import (
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    ModelMetadata,
    Scene,
    SurfaceType,
    compose_placement,
    featurize_surface,
    load_model_db,
    load_scene_file,
    save_model_db,
    save_scene_file,
    validate_support_tree,
)
from scenehint.suggest import (
    ContextQuery,
    Suggestion,
    choose_attachment_face,
    expand_category,
    keyword_search,
    optimize_rotation,
    position_score,
    query_from_point,
    query_from_ray,
    suggest,
)

__version__ = "0.1.0"

__all__ = [
    "AttachmentFace",
    "CategoryTaxonomy",
    "ContextQuery",
    "CorpusError",
    "ModelDatabase",
    "ModelInstance",
    "ModelMetadata",
    "ObservationSet",
    "PriorsDB",
    "PriorsError",
    "Relationship",
    "Scene",
    "Suggestion",
    "SurfaceType",
    "Transform",
    "choose_attachment_face",
    "compose_placement",
    "expand_category",
    "extract_observations",
    "featurize_surface",
    "identify_support_surface",
    "infer_support_edges",
    "keyword_search",
    "learn_priors",
    "load_corpus",
    "load_corpus_dir",
    "load_model_db",
    "load_priors",
    "load_scene_file",
    "load_taxonomy",
    "optimize_rotation",
    "position_score",
    "query_from_point",
    "query_from_ray",
    "save_model_db",
    "save_priors",
    "save_scene_file",
    "suggest",
    "validate_support_tree",
]
