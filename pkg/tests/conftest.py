"""Shared fixtures: a small learned corpus and hand-built micro scenes."""

from __future__ import annotations

import numpy as np
import pytest

from scenehint.corpus import extract_observations
from scenehint.geometry import Transform, vec3
from scenehint.priors import learn_priors
from scenehint.scene import (
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    ModelMetadata,
    Scene,
    compose_placement,
)
from scenehint.synthetic import demo_office_spec, generate_synthetic_corpus


@pytest.fixture(scope="session")
def office_spec():
    return demo_office_spec()


@pytest.fixture(scope="session")
def office_corpus(office_spec):
    """30 generated office scenes; statistics are rough at this size."""
    scenes = generate_synthetic_corpus(office_spec, 30, seed=7)
    return scenes, office_spec.model_db, office_spec.taxonomy


@pytest.fixture(scope="session")
def office_priors(office_corpus):
    scenes, model_db, taxonomy = office_corpus
    obs = extract_observations(scenes, model_db, taxonomy)
    return learn_priors(obs, taxonomy, model_db)


@pytest.fixture(scope="session")
def office_models(office_spec):
    return office_spec.model_db


def fresh_office_scene(model_db: ModelDatabase) -> Scene:
    """Room plus one desk at the demo corpus pose, nothing else."""
    room = ModelInstance(
        id="room",
        model_id="room-1",
        transform=Transform.from_rotation_translation(np.eye(3), vec3(0.0, 0.0, 1.5)),
        is_architecture=True,
    )
    desk = ModelInstance(
        id="desk",
        model_id="desk-1",
        transform=compose_placement(
            vec3(0.5, -0.7, 0.0),
            vec3(0.0, 0.0, 1.0),
            AttachmentFace.BOTTOM,
            0.0,
            model_db.get("desk-1"),
        ),
        parent_id="room",
    )
    return Scene(
        id="live",
        scene_type="office",
        objects=[room, desk],
        support_edges=[("desk", "room")],
    )


@pytest.fixture
def live_scene(office_models):
    return fresh_office_scene(office_models)


def box_meta(model_id: str, category: str, dims, has_front: bool = True, **extra) -> ModelMetadata:
    return ModelMetadata.from_dict(
        {
            "modelId": model_id,
            "category": category,
            "bboxDims": list(dims),
            "hasSemanticFront": has_front,
            **extra,
        }
    )
