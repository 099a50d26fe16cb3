"""Command line entry points: learn, gen, dump, query, eval, serve.

Exit codes: 0 on success, 1 for validation problems (bad corpus data,
unknown parent, priors format mismatch), 2 for I/O problems (missing
files, unreadable JSON).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from scenehint.corpus import CorpusError, extract_observations, load_corpus_dir
from scenehint.evaluation import evaluate, format_report, parse_event_log
from scenehint.priors import (
    PriorsError,
    learn_priors,
    load_priors,
    save_priors,
)
from scenehint.scene import load_model_db, load_scene_file
from scenehint.suggest import query_from_point, suggest
from scenehint.synthetic import (
    demo_office_spec_doc,
    generate_synthetic_corpus,
    load_generator_spec,
    parse_generator_spec,
    write_corpus,
)


def _fail(err: Exception) -> None:
    """Print the error and exit 2 for I/O-rooted failures, 1 otherwise."""
    click.echo(f"error: {err}", err=True)
    cause: BaseException | None = err
    while cause is not None:
        if isinstance(cause, (OSError, json.JSONDecodeError)):
            sys.exit(2)
        cause = cause.__cause__
    if isinstance(err, (OSError, json.JSONDecodeError)):
        sys.exit(2)
    sys.exit(1)


def _parse_triple(text: str, name: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise click.UsageError(f"{name} must be three comma-separated numbers")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise click.UsageError(f"{name} must be three comma-separated numbers")


@click.group()
def main() -> None:
    """Placement priors for 3D scenes: learn them, inspect them, query them."""


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(), help="Corpus directory (scenes/ + models.json).")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Priors output file.")
def learn(corpus_dir: str, out_path: str) -> None:
    """Learn placement priors from a scene corpus."""
    if not Path(corpus_dir).is_dir():
        click.echo(f"error: {corpus_dir}: not a directory", err=True)
        sys.exit(2)
    try:
        scenes, model_db, taxonomy = load_corpus_dir(corpus_dir)
        obs = extract_observations(scenes, model_db, taxonomy)
        db = learn_priors(obs, taxonomy, model_db)
        save_priors(db, out_path)
    except (CorpusError, PriorsError, OSError) as e:
        _fail(e)
    click.echo(f"scenes: {len(scenes)}")
    click.echo(f"count histograms: {len(db.count_hists)}")
    click.echo(f"support surface categoricals: {len(db.support_cats)}")
    click.echo(f"attachment face categoricals: {len(db.face_cats)}")
    click.echo(f"relative position densities: {len(db.rel_pos)}")
    click.echo(f"relative orientation histograms: {len(db.rel_orient)}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--spec", "spec_path", type=click.Path(), default=None, help="Generator spec JSON; omit for the built-in office demo.")
@click.option("--n", "n_scenes", default=50, show_default=True, help="Scenes per scene type.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output corpus directory.")
def gen(spec_path: str | None, n_scenes: int, seed: int, out_dir: str) -> None:
    """Generate a synthetic corpus from a generator spec."""
    try:
        if spec_path is None:
            spec = parse_generator_spec(demo_office_spec_doc())
        else:
            spec = load_generator_spec(spec_path)
        scenes = generate_synthetic_corpus(spec, n_scenes, seed)
        write_corpus(scenes, spec.model_db, spec.taxonomy, out_dir)
    except (CorpusError, PriorsError, OSError) as e:
        _fail(e)
    click.echo(f"wrote {len(scenes)} scenes to {out_dir}")


@main.command()
@click.option("--priors", "priors_path", required=True, type=click.Path())
@click.option(
    "--family",
    type=click.Choice(["count", "support", "face", "relpos", "relorient"]),
    default=None,
    help="Restrict output to one prior family.",
)
@click.option("--key", default=None, help="Colon-separated key, e.g. monitor:desk:office.")
def dump(priors_path: str, family: str | None, key: str | None) -> None:
    """Print priors entries as human-readable tables.

    Without --key, lists the keys in each selected family. With --key,
    prints the matching entries; relative position entries come out as
    CSV sample rows. Unknown keys print nothing and still exit 0.
    """
    try:
        db = load_priors(priors_path)
    except (PriorsError, OSError) as e:
        _fail(e)

    want = key.split(":") if key else None

    def matches(entry_key: tuple) -> bool:
        if want is None:
            return True
        parts = [k.value if hasattr(k, "value") else str(k) for k in entry_key]
        return parts[: len(want)] == want

    def header(text: str) -> None:
        click.echo(text)
        click.echo("-" * len(text))

    if family in (None, "count"):
        rows = [(k, v) for k, v in sorted(db.count_hists.items()) if matches(k)]
        if rows:
            header("count histograms (child:parent:sceneType)")
            for (c, p, s), hist in rows:
                probs = " ".join(f"{n}:{q:.4f}" for n, q in sorted(hist.probs.items()))
                click.echo(f"{c}:{p}:{s}  nObs={hist.n_obs}  {probs}")
            click.echo("")
    if family in (None, "support"):
        rows = [(k, v) for k, v in sorted(db.support_cats.items()) if matches((k,))]
        if rows:
            header("support surfaces (category)")
            for c, cat in rows:
                probs = " ".join(f"{t}:{q:.4f}" for t, q in sorted(cat.probs.items()))
                click.echo(f"{c}  nObs={cat.n_obs}  {probs}")
            click.echo("")
    if family in (None, "face"):
        rows = [(k, v) for k, v in sorted(db.face_cats.items()) if matches(k)]
        if rows:
            header("attachment faces (category:surface)")
            for (c, t), cat in rows:
                probs = " ".join(
                    f"{f.value}:{q:.4f}" for f, q in sorted(cat.probs.items())
                )
                click.echo(f"{c}:{t}  nObs={cat.n_obs}  {probs}")
            click.echo("")
    if family in (None, "relpos"):
        rows = [
            (k, v)
            for k, v in sorted(db.rel_pos.items(), key=lambda kv: tuple(map(str, kv[0])))
            if matches(k)
        ]
        if rows:
            header("relative positions (obj:ref:sceneType:relationship:surface)")
            for (c, r, s, rel, t), kde in rows:
                kind = "radial" if kde.radial else "xy"
                bw = ",".join(f"{b:.4f}" for b in kde.bandwidth)
                click.echo(
                    f"{c}:{r}:{s}:{rel.value}:{t}  nObs={kde.n_obs}  kind={kind}  bandwidth={bw}"
                )
                if kde.radial:
                    click.echo("r")
                    for row in kde.samples:
                        click.echo(f"{row:.6f}")
                else:
                    click.echo("dx,dy")
                    for row in kde.samples:
                        click.echo(f"{row[0]:.6f},{row[1]:.6f}")
            click.echo("")
    if family in (None, "relorient"):
        rows = [
            (k, v)
            for k, v in sorted(db.rel_orient.items(), key=lambda kv: tuple(map(str, kv[0])))
            if matches(k)
        ]
        if rows:
            header("relative orientations (obj:ref:sceneType:relationship:surface)")
            for (c, r, s, rel, t), hist in rows:
                bins = " ".join(str(b) for b in hist.bin_counts)
                click.echo(f"{c}:{r}:{s}:{rel.value}:{t}  nObs={hist.n_obs}  bins={bins}")
            click.echo("")


@main.command()
@click.option("--priors", "priors_path", required=True, type=click.Path())
@click.option("--models", "models_path", required=True, type=click.Path())
@click.option("--scene", "scene_path", required=True, type=click.Path())
@click.option("--pos", required=True, help="Anchor point x,y,z in world coordinates.")
@click.option("--parent", "parent_id", required=True, help="Id of the supporting object.")
@click.option("--normal", default=None, help="Unit surface normal x,y,z; derived from the parent when omitted.")
@click.option("--scene-type", default=None, help="Override the scene's type for prior lookups.")
@click.option("--limit", default=8, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
def query(
    priors_path: str,
    models_path: str,
    scene_path: str,
    pos: str,
    parent_id: str,
    normal: str | None,
    scene_type: str | None,
    limit: int,
    as_json: bool,
) -> None:
    """Rank categories for an anchor point in a scene."""
    pos_v = _parse_triple(pos, "--pos")
    normal_v = _parse_triple(normal, "--normal") if normal else None
    try:
        db = load_priors(priors_path)
        model_db = load_model_db(models_path)
        scene = load_scene_file(scene_path)
        for obj in scene.objects:
            if obj.model_id not in model_db:
                raise CorpusError(f"{scene_path}: object {obj.id}: unknown model {obj.model_id}")
        q = query_from_point(scene, model_db, parent_id, pos_v, normal_v, scene_type)
        ranked = suggest(db, model_db, q, limit=limit)
    except (CorpusError, PriorsError, ValueError, KeyError, OSError) as e:
        _fail(e)

    if as_json:
        doc = {
            "parentId": q.parent_id,
            "parentCategory": q.parent_category,
            "surfaceType": q.surface_type.key,
            "pos": [float(x) for x in q.pos],
            "surfaceNormal": [float(x) for x in q.surface_normal],
            "suggestions": [
                {
                    "category": s.category,
                    "representativeModelId": s.representative_model_id,
                    "memberModelIds": list(s.member_model_ids),
                    "score": s.score,
                    "alpha": s.alpha,
                    "face": s.placement.face.value,
                    "transform": s.placement.transform.to_list(),
                }
                for s in ranked
            ],
        }
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        click.echo(
            f"surface {q.surface_type.key} on {q.parent_category} ({q.parent_id}) "
            f"at ({pos_v[0]:.3f}, {pos_v[1]:.3f}, {pos_v[2]:.3f})"
        )
        if not ranked:
            click.echo("no suggestions")
        for i, s in enumerate(ranked, 1):
            click.echo(
                f"{i:2d}. {s.category:<16s} score={s.score:.6g} "
                f"alpha={np.degrees(s.alpha):6.1f}deg face={s.placement.face.value} "
                f"model={s.representative_model_id}"
            )


@main.command("eval")
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
def eval_cmd(log_path: str, as_json: bool) -> None:
    """Summarize suggestion quality from a service event log."""
    try:
        records, skipped, text_queries = parse_event_log(log_path)
    except OSError as e:
        _fail(e)
    report = evaluate(records, text_query_count=text_queries, skipped_lines=skipped)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(format_report(report))


@main.command()
@click.option("--priors", "priors_path", required=True, type=click.Path())
@click.option("--models", "models_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--log", "log_path", default=None, type=click.Path(), help="Event log JSONL file.")
def serve(priors_path: str, models_path: str, host: str, port: int, log_path: str | None) -> None:
    """Run the HTTP suggestion service."""
    try:
        db = load_priors(priors_path)
        model_db = load_model_db(models_path)
    except (PriorsError, OSError, ValueError, KeyError) as e:
        _fail(e)

    import uvicorn

    from scenehint.service import create_app

    app = create_app(db, model_db, log_path=log_path)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
