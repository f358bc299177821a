"""Operator command line: validate, train, query, simulate, serve.

Every command is a thin adapter over the library (queries go through the
same Engine the HTTP service uses, so the three surfaces cannot drift).
Read commands take ``--format json`` for machine consumption; the default
is a short human rendering. Exit codes: 0 ok, 1 validation or any library
error, 2 internal failure.
"""

from __future__ import annotations

import functools
import json
import sys
import threading
import time

import click

from .errors import FokeError
from .inference import InferenceConfig
from .service import Engine, create_app
from .simulate import SimStep, trajectory_lines
from .store import (
    EngineState,
    load_forest_document,
    load_profiles,
    load_templates,
    parse_json_bytes,
    parse_train_config,
    read_snapshot,
    write_snapshot,
)
from .training import epoch_line, train

_FORMATS = click.Choice(["human", "json"])


def _wrap_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FokeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(2)
    return wrapper


def _emit_json(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))


def _load_json_file(path: str, source: str):
    with open(path, "rb") as handle:
        return parse_json_bytes(handle.read(), source)


def _engine_from(snapshot_path: str, profiles: str | None,
                 templates: str | None, tau: float) -> Engine:
    state = read_snapshot(snapshot_path)
    engine = Engine(state, inference=InferenceConfig(tau=tau))
    if profiles is not None:
        engine.merge_profiles(load_profiles(profiles))
    if templates is not None:
        engine.merge_templates(load_templates(templates))
    return engine


def _split_user(user: str) -> tuple[str | None, str]:
    """``profiles.json#id`` loads the file; a bare id uses snapshot profiles."""
    if "#" in user:
        path, _, user_id = user.rpartition("#")
        return path, user_id
    return None, user


@click.group()
def main() -> None:
    """Knowledge-forest engine commands."""


@main.command()
@click.argument("forest", type=click.Path(exists=True, dir_okay=False))
@_wrap_errors
def validate(forest: str) -> None:
    """Check a forest file against the schema and every structural invariant."""
    document = load_forest_document(forest)
    trees = document.forest.trees
    concepts = sum(len(t.concepts) for t in trees)
    relations = sum(len(t.relations) for t in trees)
    click.echo(f"ok: {len(trees)} trees, {concepts} concepts, "
               f"{relations} relations, {len(document.triples)} triples")


@main.command(name="train")
@click.argument("forest", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with training settings.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Write the trained snapshot here.")
@click.option("--profiles", "profiles_path", type=click.Path(exists=True, dir_okay=False),
              help="Bundle these profiles into the snapshot.")
@click.option("--templates", "templates_path", type=click.Path(exists=True, dir_okay=False),
              help="Bundle these prompt templates into the snapshot.")
@_wrap_errors
def train_command(forest: str, config_path: str | None, seed: int | None,
                  out_path: str | None, profiles_path: str | None,
                  templates_path: str | None) -> None:
    """Train embeddings on a forest file, printing one loss line per epoch."""
    document = load_forest_document(forest)
    raw_config = _load_json_file(config_path, "config file") if config_path else {}
    config = parse_train_config(raw_config, "config")
    if seed is not None:
        config = parse_train_config({**raw_config, "seed": seed}, "config")
    result = train(document.forest, document.triples, None, config)
    for record in result.history:
        click.echo(epoch_line(record))
    if out_path is not None:
        state = EngineState(
            forest=document.forest,
            triples=document.triples,
            table=result.table,
            config=config,
            profiles=load_profiles(profiles_path) if profiles_path else {},
            templates=load_templates(templates_path) if templates_path else {},
        )
        write_snapshot(out_path, state)
        click.echo(f"snapshot written to {out_path}", err=True)


@main.command()
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.option("--user", required=True,
              help="User id, or profiles.json#id to load from a file.")
@click.option("--tau", type=float, default=0.8, show_default=True,
              help="Tree-relation similarity threshold.")
@click.option("--format", "fmt", type=_FORMATS, default="human")
@_wrap_errors
def recommend(snapshot: str, user: str, tau: float, fmt: str) -> None:
    """Recommend the next tree for a user and show the full score table."""
    profiles_path, user_id = _split_user(user)
    engine = _engine_from(snapshot, profiles_path, None, tau)
    payload = engine.recommend({"user_id": user_id})
    if fmt == "json":
        _emit_json(payload)
        return
    summary = engine.summary()
    if payload["next"] is None:
        click.echo("next: none (all trees mastered)")
    else:
        click.echo(f"next: {payload['next']} ({payload['tree_id']})")
    click.echo("index  score        mastery  tree")
    for entry in summary["trees"]:
        k = entry["index"]
        marker = " *" if k == payload["next"] else ""
        click.echo(f"{k:<6d} {payload['scores'][k]:<12.6g} "
                   f"{payload['mastery'][k]:<8.4g} {entry['tree_id']}{marker}")


@main.command()
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.option("--concept", required=True, help="Query concept id.")
@click.option("--format", "fmt", type=_FORMATS, default="human")
@_wrap_errors
def retrieve(snapshot: str, concept: str, fmt: str) -> None:
    """Find the tree most relevant to a concept's embedding."""
    engine = _engine_from(snapshot, None, None, 0.8)
    payload = engine.retrieve({"concept": concept})
    if fmt == "json":
        _emit_json(payload)
        return
    click.echo(f"tree: {payload['tree_id']}  similarity: {payload['similarity']:.6g}")


@main.command()
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", type=float, default=0.34, show_default=True)
@click.option("--max-steps", type=int, default=50, show_default=True)
@click.option("--goal", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--user", default=None,
              help="Start from this user's mastery instead of zeros.")
@click.option("--tau", type=float, default=0.8, show_default=True)
@click.option("--format", "fmt", type=_FORMATS, default="human")
@_wrap_errors
def simulate(snapshot: str, delta: float, max_steps: int, goal: float, seed: int,
             user: str | None, tau: float, fmt: str) -> None:
    """Run the recommend-then-study loop; one line per step."""
    profiles_path, user_id = _split_user(user) if user else (None, None)
    engine = _engine_from(snapshot, profiles_path, None, tau)
    body = {"delta": delta, "max_steps": max_steps, "mastery_goal": goal,
            "seed": seed}
    if user_id is not None:
        body["user_id"] = user_id
    payload = engine.run_simulation(body)
    if fmt == "json":
        _emit_json(payload)
        return
    steps = [SimStep(e["step"], e["chosen"], tuple(e["mastery"]))
             for e in payload["trajectory"]]
    for line in trajectory_lines(steps):
        click.echo(line)


@main.command()
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.option("--task", "task_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON task spec file.")
@click.option("--templates", "templates_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Template file; defaults to the snapshot's templates.")
@click.option("--user", default=None,
              help="User id (or profiles.json#id) for attribute slots.")
@click.option("--format", "fmt", type=_FORMATS, default="human")
@_wrap_errors
def prompt(snapshot: str, task_path: str, templates_path: str | None,
           user: str | None, fmt: str) -> None:
    """Choose the best template for a task and render its prompt text."""
    profiles_path, user_id = _split_user(user) if user else (None, None)
    engine = _engine_from(snapshot, profiles_path, templates_path, 0.8)
    body = {"task": _load_json_file(task_path, "task file")}
    if user_id is not None:
        body["user_id"] = user_id
    payload = engine.build_prompt(body)
    if fmt == "json":
        _emit_json(payload)
        return
    click.echo(f"template: {payload['template_id']}  score: {payload['score']:.6g}")
    for part in ("goal", "explanation", "feedback"):
        click.echo(f"[{part}]")
        click.echo(payload[part])


@main.command()
@click.argument("snapshot", type=click.Path(exists=True, dir_okay=False))
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              help="host:port to bind.")
@click.option("--profiles", "profiles_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--templates", "templates_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", type=float, default=0.8, show_default=True)
@click.option("--save", "save_path", type=click.Path(dir_okay=False),
              help="Persist state here after mutations.")
@click.option("--autosave", type=float, default=0.0, show_default=True,
              help="Seconds between periodic saves; 0 saves on every mutation.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              help="Serve this directory of static files at /.")
@_wrap_errors
def serve(snapshot: str, listen: str, profiles_path: str | None,
          templates_path: str | None, tau: float, save_path: str | None,
          autosave: float, ui_dir: str | None) -> None:
    """Serve the HTTP API (and optionally the web UI) over a snapshot."""
    import uvicorn

    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.BadParameter("expected host:port", param_hint="--listen")
    engine = _engine_from(snapshot, profiles_path, templates_path, tau)
    if save_path is not None and autosave <= 0:
        engine.snapshot_path = save_path

    if save_path is not None and autosave > 0:
        def saver() -> None:
            seen = engine.revision
            while True:
                time.sleep(autosave)
                if engine.revision != seen:
                    seen = engine.revision
                    write_snapshot(save_path, engine.state)
        threading.Thread(target=saver, daemon=True, name="autosave").start()

    app = create_app(engine, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
