"""Ranking, face choice, rotation sweep, and query construction."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import box_meta, fresh_office_scene
from scenehint.corpus import Relationship
from scenehint.geometry import vec3
from scenehint.priors import (
    CategoryTaxonomy,
    FaceCategorical,
    PriorsDB,
    RelPosKde,
    WrappedHistogram,
    occurrence_probability,
    support_surface_probability,
)
from scenehint.scene import (
    AttachmentFace,
    ModelDatabase,
    ModelInstance,
    Scene,
    ShapeClass,
    SurfaceType,
    compose_placement,
)
from scenehint.suggest import (
    Placement,
    choose_attachment_face,
    expand_category,
    keyword_search,
    optimize_rotation,
    position_score,
    query_from_point,
    query_from_ray,
    suggest,
)

UP = vec3(0.0, 0.0, 1.0)
EPS = 1e-4

UP_INT = SurfaceType.from_key("up-interior")
UP_EXT = SurfaceType.from_key("up-exterior")
WALL_INT = SurfaceType.from_key("horizontal-interior")


def micro_db() -> ModelDatabase:
    # the lamp has no semantic front, so references against it go radial
    return ModelDatabase(
        [
            box_meta("room-1", "room", (6.0, 4.0, 3.0), has_front=False),
            box_meta("desk-1", "desk", (1.2, 0.6, 0.75)),
            box_meta("lamp-1", "lamp", (0.2, 0.2, 0.4), has_front=False),
            box_meta("mug-1", "mug", (0.08, 0.08, 0.1)),
            box_meta("mug-2", "mug", (0.08, 0.08, 0.1)),
        ]
    )


def place(db, oid, model_id, anchor, parent=None, alpha=0.0, arch=False):
    return ModelInstance(
        id=oid,
        model_id=model_id,
        transform=compose_placement(
            anchor, UP, AttachmentFace.BOTTOM, alpha, db.get(model_id)
        ),
        parent_id=parent,
        is_architecture=arch,
    )


def room_instance() -> ModelInstance:
    from scenehint.geometry import Transform

    return ModelInstance(
        id="room",
        model_id="room-1",
        transform=Transform.from_rotation_translation(np.eye(3), vec3(0, 0, 1.5)),
        is_architecture=True,
    )


def floor_scene(db, lamp_alpha=0.0) -> Scene:
    room = room_instance()
    lamp = place(db, "lamp", "lamp-1", vec3(0, 0, 0), "room", alpha=lamp_alpha)
    return Scene(
        id="s",
        scene_type="den",
        objects=[room, lamp],
        support_edges=[("lamp", "room")],
    )


def priors_with(rel_pos=None, rel_orient=None, face_cats=None, shapes=None) -> PriorsDB:
    return PriorsDB(
        taxonomy=CategoryTaxonomy(),
        count_hists={},
        support_cats={},
        face_cats=face_cats or {},
        rel_pos=rel_pos or {},
        rel_orient=rel_orient or {},
        category_shapes=shapes or {"mug": ShapeClass.BLOCKY},
    )


KEY_MUG_LAMP = ("mug", "lamp", "den", Relationship.SIBLING, "up-interior")


def lamp_kde(radius=0.3, h=0.1) -> RelPosKde:
    return RelPosKde(
        key=KEY_MUG_LAMP,
        radial=True,
        samples=np.full(5, radius),
        bandwidth=np.array([h]),
        n_obs=5,
    )


def lamp_hist(counts: dict[int, int]) -> WrappedHistogram:
    bins = [0] * 36
    for b, c in counts.items():
        bins[b] = c
    return WrappedHistogram(key=KEY_MUG_LAMP, bin_counts=tuple(bins), n_obs=sum(counts.values()))


# -- position score -----------------------------------------------------------


def test_position_score_single_radial_neighbor_product():
    db = micro_db()
    scene = floor_scene(db)
    priors = priors_with(
        rel_pos={KEY_MUG_LAMP: lamp_kde()},
        rel_orient={KEY_MUG_LAMP: lamp_hist({0: 7, 18: 3})},
    )
    # floor query 0.3 m from the lamp; mug centroid projects to radius 0.3,
    # which sits exactly on the KDE samples
    query = query_from_point(scene, db, "room", vec3(0.3, 0.0, 0.0))
    assert query.surface_type == UP_INT

    density = 1.0 / (0.1 * math.sqrt(2.0 * math.pi))
    # lamp front and candidate base front are both +Y, so theta0 = 0 and the
    # orientation bin is alpha's own
    for alpha_deg, b in ((0, 0), (185, 18), (95, 9)):
        mass = ({0: 7, 18: 3}.get(b, 0) + EPS) / (10 + 36 * EPS)
        got = position_score(
            priors, db, "mug", query, math.radians(alpha_deg), AttachmentFace.BOTTOM
        )
        assert got == pytest.approx(density * mass, rel=1e-12)


def test_position_score_sums_sibling_and_parent_terms():
    db = micro_db()
    room = room_instance()
    desk = place(db, "desk", "desk-1", vec3(1.0, 0.0, 0.0), "room")
    lamp = place(db, "lamp", "lamp-1", vec3(1.3, 0.2, 0.75), "desk")
    scene = Scene(
        id="s",
        scene_type="den",
        objects=[room, desk, lamp],
        support_edges=[("desk", "room"), ("lamp", "desk")],
    )

    key_lamp = ("mug", "lamp", "den", Relationship.SIBLING, "up-exterior")
    key_desk = ("mug", "desk", "den", Relationship.CHILD_PARENT, "up-exterior")
    priors = priors_with(
        rel_pos={
            key_lamp: RelPosKde(
                key=key_lamp, radial=True, samples=np.full(5, 0.5),
                bandwidth=np.array([0.2]), n_obs=5,
            ),
            key_desk: RelPosKde(
                key=key_desk, radial=False,
                samples=np.tile([(-0.2, -0.1)], (5, 1)).astype(float),
                bandwidth=np.array([0.1, 0.1]), n_obs=5,
            ),
        },
        rel_orient={
            key_lamp: WrappedHistogram(key=key_lamp, bin_counts=tuple([7] + [0] * 17 + [3] + [0] * 18), n_obs=10),
            key_desk: WrappedHistogram(key=key_desk, bin_counts=tuple([0] * 18 + [5] + [0] * 17), n_obs=5),
        },
    )

    query = query_from_point(scene, db, "desk", vec3(0.8, -0.1, 0.75))
    assert query.surface_type == UP_EXT

    # mug centroid (0.8, -0.1, 0.80): radius to the lamp is hypot(.5, .3) and
    # the offset in the desk's yaw frame is exactly (-0.2, -0.1)
    z = (math.hypot(0.5, 0.3) - 0.5) / 0.2
    d_lamp = math.exp(-0.5 * z * z) / (0.2 * math.sqrt(2.0 * math.pi))
    d_desk = 1.0 / (2.0 * math.pi * 0.1 * 0.1)

    alpha = math.radians(180.0)
    m_lamp = (3 + EPS) / (10 + 36 * EPS)
    m_desk = (5 + EPS) / (5 + 36 * EPS)
    got = position_score(priors, db, "mug", query, alpha, AttachmentFace.BOTTOM)
    assert got == pytest.approx(d_lamp * m_lamp + d_desk * m_desk, rel=1e-12)

    # the architecture root contributes no term: with epsilon fallbacks an
    # extra room term would add eps*eps and break the exact sum above
    got0 = position_score(priors, db, "mug", query, 0.0, AttachmentFace.BOTTOM)
    m_lamp0 = (7 + EPS) / (10 + 36 * EPS)
    m_desk0 = EPS / (5 + 36 * EPS)
    assert got0 == pytest.approx(d_lamp * m_lamp0 + d_desk * m_desk0, rel=1e-12)


def test_position_score_epsilon_when_orientation_unlearned():
    db = micro_db()
    scene = floor_scene(db)
    priors = priors_with(rel_pos={KEY_MUG_LAMP: lamp_kde()})
    query = query_from_point(scene, db, "room", vec3(0.3, 0.0, 0.0))
    density = 1.0 / (0.1 * math.sqrt(2.0 * math.pi))
    got = position_score(priors, db, "mug", query, 1.0, AttachmentFace.BOTTOM)
    assert got == pytest.approx(density * EPS, rel=1e-12)


def test_position_score_thin_entry_defers_to_epsilon_density():
    db = micro_db()
    scene = floor_scene(db)
    starved = RelPosKde(
        key=KEY_MUG_LAMP, radial=True, samples=np.full(4, 0.3),
        bandwidth=np.array([0.1]), n_obs=4,
    )
    priors = priors_with(
        rel_pos={KEY_MUG_LAMP: starved},
        rel_orient={KEY_MUG_LAMP: lamp_hist({0: 10})},
    )
    query = query_from_point(scene, db, "room", vec3(0.3, 0.0, 0.0))
    mass = (10 + EPS) / (10 + 36 * EPS)
    got = position_score(priors, db, "mug", query, 0.0, AttachmentFace.BOTTOM)
    assert got == pytest.approx(EPS * mass, rel=1e-12)


def test_position_score_zero_without_neighbors():
    db = micro_db()
    room = room_instance()
    scene = Scene(id="s", scene_type="den", objects=[room], support_edges=[])
    priors = priors_with()
    query = query_from_point(scene, db, "room", vec3(0.0, 0.0, 0.0))
    assert position_score(priors, db, "mug", query, 0.7, AttachmentFace.BOTTOM) == 0.0
    assert optimize_rotation(priors, db, "mug", query, AttachmentFace.BOTTOM) == 0.0


# -- attachment face ----------------------------------------------------------


def face_cat(category, surface, counts):
    return FaceCategorical(
        category=category,
        surface=surface.key,
        counts=counts,
        n_obs=sum(counts.values()),
    )


def test_choose_attachment_face_argmax():
    priors = priors_with(
        face_cats={
            ("poster", WALL_INT.key): face_cat(
                "poster", WALL_INT, {AttachmentFace.TOP: 5, AttachmentFace.BOTTOM: 1}
            )
        }
    )
    assert choose_attachment_face(priors, "poster", WALL_INT) == AttachmentFace.TOP


def test_choose_attachment_face_tie_uses_fixed_order():
    priors = priors_with(
        face_cats={
            ("poster", WALL_INT.key): face_cat(
                "poster", WALL_INT, {AttachmentFace.BACK: 3, AttachmentFace.BOTTOM: 3}
            ),
            ("clock", WALL_INT.key): face_cat(
                "clock", WALL_INT, {AttachmentFace.LEFT: 4, AttachmentFace.BACK: 4}
            ),
        }
    )
    # bottom outranks back outranks left when probabilities tie
    assert choose_attachment_face(priors, "poster", WALL_INT) == AttachmentFace.BOTTOM
    assert choose_attachment_face(priors, "clock", WALL_INT) == AttachmentFace.BACK


def test_choose_attachment_face_unseen_category_uses_shape():
    priors = priors_with(
        shapes={
            "pen": ShapeClass.THIN,
            "poster": ShapeClass.FLAT,
            "mug": ShapeClass.BLOCKY,
        }
    )
    assert choose_attachment_face(priors, "pen", UP_EXT) == AttachmentFace.LEFT
    assert choose_attachment_face(priors, "poster", WALL_INT) == AttachmentFace.BACK
    assert choose_attachment_face(priors, "poster", UP_EXT) == AttachmentFace.BOTTOM
    assert choose_attachment_face(priors, "mug", WALL_INT) == AttachmentFace.BOTTOM


# -- rotation sweep -----------------------------------------------------------


def test_optimize_rotation_matches_dense_sweep():
    db = micro_db()
    # lamp spun to 115.5 deg puts the plateau edges at half-degrees, so the
    # 1-degree sweep's winner (26) sits strictly inside the best bin
    scene = floor_scene(db, lamp_alpha=math.radians(115.5))
    priors = priors_with(
        rel_pos={KEY_MUG_LAMP: lamp_kde()},
        rel_orient={KEY_MUG_LAMP: lamp_hist({27: 7, 0: 3})},
    )
    query = query_from_point(scene, db, "room", vec3(0.3, 0.0, 0.0))

    got = optimize_rotation(priors, db, "mug", query, AttachmentFace.BOTTOM)
    assert got == math.radians(26.0)

    fine = [math.radians(0.1 * i) for i in range(3600)]
    scores = [
        position_score(priors, db, "mug", query, a, AttachmentFace.BOTTOM) for a in fine
    ]
    best = max(range(len(fine)), key=lambda i: (scores[i], -i))
    assert 25.4 <= 0.1 * best <= 25.7
    got_w = position_score(priors, db, "mug", query, got, AttachmentFace.BOTTOM)
    assert got_w == pytest.approx(max(scores), rel=1e-12)


def test_optimize_rotation_tie_keeps_zero():
    db = micro_db()
    scene = floor_scene(db, lamp_alpha=math.radians(40.0))
    priors = priors_with(
        rel_pos={KEY_MUG_LAMP: lamp_kde()},
        rel_orient={KEY_MUG_LAMP: lamp_hist({b: 1 for b in range(36)})},
    )
    query = query_from_point(scene, db, "room", vec3(0.3, 0.0, 0.0))
    assert optimize_rotation(priors, db, "mug", query, AttachmentFace.BOTTOM) == 0.0


# -- ranked suggestions -------------------------------------------------------


def desk_top_query(scene, model_db):
    return query_from_point(scene, model_db, "desk", vec3(0.5, -0.7, 0.75))


def test_suggest_ranks_every_category(office_priors, office_models):
    scene = fresh_office_scene(office_models)
    query = desk_top_query(scene, office_models)
    got = suggest(office_priors, office_models, query)
    assert {s.category for s in got} == set(office_models.categories())
    assert len(got) == len(office_models.categories())
    ranked = sorted(got, key=lambda s: (-s.score, s.category))
    assert [s.category for s in ranked] == [s.category for s in got]

    top3 = suggest(office_priors, office_models, query, limit=3)
    assert [s.category for s in top3] == [s.category for s in got[:3]]


def test_suggest_scores_compose_occurrence_support_position(
    office_priors, office_models
):
    scene = fresh_office_scene(office_models)
    query = desk_top_query(scene, office_models)
    for s in suggest(office_priors, office_models, query):
        occ = occurrence_probability(office_priors, s.category, "desk", "office", 0)
        sup = support_surface_probability(office_priors, query.surface_type, s.category)
        w_pos = position_score(
            office_priors, office_models, s.category, query, s.alpha, s.placement.face
        )
        assert s.score == pytest.approx(occ * sup + 0.25 * w_pos, rel=1e-12)
        assert s.alpha == optimize_rotation(
            office_priors, office_models, s.category, query, s.placement.face
        )
        rep = office_models.representative(s.category)
        assert s.representative_model_id == rep.model_id
        assert s.representative_model_id in s.member_model_ids
        expected_t = compose_placement(
            query.pos, query.surface_normal, s.placement.face, s.alpha, rep
        )
        assert np.array_equal(s.placement.transform.matrix, expected_t.matrix)


def test_suggest_conditions_on_existing_children(office_priors, office_models):
    fresh = fresh_office_scene(office_models)
    query = desk_top_query(fresh, office_models)
    fresh_scores = {s.category: s.score for s in suggest(office_priors, office_models, query)}

    monitor = ModelInstance(
        id="monitor",
        model_id="monitor-1",
        transform=compose_placement(
            vec3(0.5, -0.52, 0.75), UP, AttachmentFace.BOTTOM, 0.0,
            office_models.get("monitor-1"),
        ),
        parent_id="desk",
    )
    crowded = Scene(
        id="live",
        scene_type="office",
        objects=[*fresh.objects, monitor],
        support_edges=[*fresh.support_edges, ("monitor", "desk")],
    )
    query2 = desk_top_query(crowded, office_models)
    got = {s.category: s for s in suggest(office_priors, office_models, query2)}

    # every generated desk carries exactly one monitor, so a second one has
    # zero occurrence probability and only the position term survives
    assert occurrence_probability(office_priors, "monitor", "desk", "office", 1) == 0.0
    s = got["monitor"]
    w_pos = position_score(
        office_priors, office_models, "monitor", query2, s.alpha, s.placement.face
    )
    assert s.score == pytest.approx(0.25 * w_pos, rel=1e-12)
    assert s.score < fresh_scores["monitor"]


def test_suggest_does_not_mutate_scene(office_priors, office_models):
    scene = fresh_office_scene(office_models)
    before = json.dumps(scene.to_dict(), sort_keys=True)
    query = desk_top_query(scene, office_models)
    suggest(office_priors, office_models, query)
    suggest(office_priors, office_models, query, limit=2)
    assert json.dumps(scene.to_dict(), sort_keys=True) == before


def test_suggest_repeats_identically(office_priors, office_models):
    scene = fresh_office_scene(office_models)
    query = desk_top_query(scene, office_models)
    a = suggest(office_priors, office_models, query)
    b = suggest(office_priors, office_models, query)
    assert [(s.category, s.score, s.alpha) for s in a] == [
        (s.category, s.score, s.alpha) for s in b
    ]


# -- query construction -------------------------------------------------------


def test_query_from_point_derives_top_normal(office_models):
    scene = fresh_office_scene(office_models)
    q = desk_top_query(scene, office_models)
    assert q.parent_id == "desk"
    assert q.parent_category == "desk"
    assert q.scene_type == "office"
    np.testing.assert_allclose(q.surface_normal, [0.0, 0.0, 1.0], atol=1e-12)
    assert q.surface_type == UP_EXT


def test_query_from_point_flips_architecture_normal_inward(office_models):
    scene = fresh_office_scene(office_models)
    q = query_from_point(scene, office_models, "room", vec3(2.9, 0.5, 1.2))
    np.testing.assert_allclose(q.surface_normal, [-1.0, 0.0, 0.0], atol=1e-12)
    assert q.surface_type == WALL_INT


def test_query_from_point_respects_explicit_normal(office_models):
    scene = fresh_office_scene(office_models)
    q = query_from_point(
        scene, office_models, "desk", vec3(0.5, -0.7, 0.75),
        surface_normal=vec3(0.0, 1.0, 0.0), scene_type="studio",
    )
    np.testing.assert_allclose(q.surface_normal, [0.0, 1.0, 0.0])
    assert q.surface_type.key == "horizontal-exterior"
    assert q.scene_type == "studio"


def test_query_from_point_unknown_parent(office_models):
    scene = fresh_office_scene(office_models)
    with pytest.raises(ValueError, match="ghost"):
        query_from_point(scene, office_models, "ghost", vec3(0, 0, 0))


def test_query_from_ray_hits_desk_top(office_models):
    scene = fresh_office_scene(office_models)
    q = query_from_ray(scene, office_models, vec3(0.5, -0.7, 2.0), vec3(0, 0, -1))
    assert q is not None
    assert q.parent_id == "desk"
    np.testing.assert_allclose(q.surface_normal, [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(q.pos, [0.5, -0.7, 0.75], atol=1e-12)
    assert q.surface_type == UP_EXT


def test_query_from_ray_miss_returns_none(office_models):
    scene = fresh_office_scene(office_models)
    assert query_from_ray(scene, office_models, vec3(10, 0, 0), vec3(1, 0, 0)) is None


# -- model search and drill-down ----------------------------------------------


def search_db() -> ModelDatabase:
    return ModelDatabase(
        [
            box_meta(
                "m-desk", "desk", (1, 1, 1),
                name="Oak Writing Desk", tags=["wood", "office"],
                description="A sturdy desk",
            ),
            box_meta("m-chair", "chair", (1, 1, 1), name="Desk Chair", tags=["office"]),
            box_meta(
                "m-plant", "plant", (1, 1, 1), has_front=False,
                name="Potted Fern", description="Green leafy plant",
            ),
        ]
    )


def test_keyword_search_scores_distinct_token_hits():
    db = search_db()
    got = keyword_search(db, "wood desk")
    assert [m.model_id for m in got] == ["m-desk", "m-chair"]


def test_keyword_search_breaks_ties_by_model_id():
    db = search_db()
    got = keyword_search(db, "desk")
    assert [m.model_id for m in got] == ["m-chair", "m-desk"]


def test_keyword_search_ignores_case_and_repeats():
    db = search_db()
    assert [m.model_id for m in keyword_search(db, "DESK, desk!")] == [
        m.model_id for m in keyword_search(db, "desk")
    ]


def test_keyword_search_drops_nonmatching_models():
    db = search_db()
    got = keyword_search(db, "fern")
    assert [m.model_id for m in got] == ["m-plant"]
    assert keyword_search(db, "xyzzy") == []


def test_keyword_search_empty_query():
    db = search_db()
    assert keyword_search(db, "") == []
    assert keyword_search(db, "!!! ???") == []


def test_keyword_search_limit():
    db = search_db()
    assert [m.model_id for m in keyword_search(db, "wood desk", limit=1)] == ["m-desk"]


def test_expand_category_shares_placement():
    db = micro_db()
    meta = db.get("mug-1")
    placement = Placement(
        transform=compose_placement(vec3(0, 0, 0), UP, AttachmentFace.BOTTOM, 0.0, meta),
        face=AttachmentFace.BOTTOM,
    )
    priors = priors_with()
    got = expand_category(priors, db, "mug", placement)
    assert [(mid, p is placement) for mid, p in got] == [
        ("mug-1", True),
        ("mug-2", True),
    ]
    assert expand_category(priors, db, "sofa", placement) == []
