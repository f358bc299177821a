"""HTTP/JSON facade over the engine.

Every endpoint is a thin adapter: it validates the request body with the
same schema helpers the file formats use, calls the corresponding library
operation, and serializes the result. A monotonically increasing revision
counter stamps every response so clients can detect staleness; it bumps on
every successful mutation. While a training job runs, mutating endpoints
answer 409 and reads stay available.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .embedding import EmbeddingTable, TrainConfig, as_vector
from .errors import (
    ConflictError,
    FokeError,
    MissingEmbeddingError,
    NotFoundError,
    ValidationError,
)
from .inference import (
    InferenceConfig,
    TreeRelationMatrix,
    recommend_next,
    recommendation_scores,
    retrieve_tree,
    tree_relations,
)
from .profiles import MasteryState
from .prompts import PromptText, TaskSpec, choose_prompt
from .simulate import SimConfig, SimStep, simulate_learner
from .store import (
    FOREST_FORMAT_VERSION,
    EngineState,
    ProfileRecord,
    check_version,
    expect_array,
    expect_int,
    expect_number,
    expect_object,
    expect_scalar,
    expect_string,
    get_field,
    no_extra_keys,
    parse_json_bytes,
    parse_train_config,
    parse_tree_value,
    parse_triples_value,
    write_snapshot,
)
from .training import EpochLoss, TrainResult, train

HTTP_STATUS_BY_ERROR = {
    "not_found": 404,
    "conflict": 409,
}


@dataclass
class TrainJob:
    """Bookkeeping for one asynchronous training run."""

    job_id: str
    config: TrainConfig
    status: str = "running"
    history: list[EpochLoss] = field(default_factory=list)
    error: str | None = None

    def as_payload(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "error": self.error,
            "epochs": [
                {"epoch": e.epoch, "total": e.total, "triple": e.triple,
                 "supervised": e.supervised, "contrastive": e.contrastive}
                for e in self.history
            ],
        }


def _trajectory_payload(trajectory: list[SimStep]) -> list[dict]:
    return [
        {"step": s.step, "chosen": s.chosen, "mastery": list(s.mastery)}
        for s in trajectory
    ]


def _prompt_payload(template_id: str, text: PromptText, score: float) -> dict:
    return {
        "template_id": template_id,
        "goal": text.goal,
        "explanation": text.explanation,
        "feedback": text.feedback,
        "slot_values": {k: str(v) for k, v in text.slot_values.items()},
        "provenance": dict(text.provenance),
        "score": score,
    }


class Engine:
    """Session state plus the operations the endpoints expose.

    Mutations are serialized by one lock and bump ``revision``; reads take
    the lock only long enough to grab consistent references. Exactly one
    training job may run at a time, and while it runs every mutation raises
    ConflictError.
    """

    def __init__(self, state: EngineState | None = None,
                 inference: InferenceConfig = InferenceConfig(),
                 snapshot_path: str | None = None):
        self.state = state if state is not None else EngineState()
        self.inference = inference
        self.snapshot_path = snapshot_path
        self.revision = 0
        self._lock = threading.RLock()
        self._jobs: dict[str, TrainJob] = {}
        self._active_job: TrainJob | None = None
        self._job_ids = itertools.count(1)
        with self._lock:
            self._resize_mastery()

    # -- internals ----------------------------------------------------------

    def _resize_mastery(self) -> None:
        k = len(self.state.forest.trees)
        for user_id, record in self.state.profiles.items():
            if len(record.mastery) != k:
                resized = MasteryState(record.mastery).resized(k)
                self.state.profiles[user_id] = record.with_mastery(resized.values)

    def _ensure_mutable(self) -> None:
        if self._active_job is not None:
            raise ConflictError(
                f"training job {self._active_job.job_id!r} is running; "
                f"mutations are locked until it finishes")

    def _bump(self) -> None:
        self.revision += 1
        if self.snapshot_path is not None:
            write_snapshot(self.snapshot_path, self.state)

    def _table(self) -> EmbeddingTable:
        if self.state.table is None:
            raise MissingEmbeddingError(
                "no embedding table in the engine state; train first")
        return self.state.table

    def _matrix(self) -> TreeRelationMatrix:
        return tree_relations(self._table(), self.state.forest, self.inference)

    def _profile(self, user_id: str) -> ProfileRecord:
        record = self.state.profiles.get(user_id)
        if record is None:
            raise NotFoundError(f"unknown user {user_id!r}")
        return record

    def merge_profiles(self, profiles: dict[str, ProfileRecord]) -> None:
        """Install profile records (replacing same-id ones), mastery resized
        to the current forest."""
        with self._lock:
            self.state.profiles.update(profiles)
            self._resize_mastery()

    def merge_templates(self, templates: dict[str, Any]) -> None:
        with self._lock:
            self.state.templates.update(templates)

    # -- reads --------------------------------------------------------------

    def summary(self) -> dict:
        with self._lock:
            forest = self.state.forest
            trees = [
                {"index": i, "tree_id": t.tree_id, "root": t.root,
                 "root_name": t.concepts[t.root].name, "size": len(t.concepts)}
                for i, t in enumerate(forest.trees)
            ]
            matrix = None
            if self.state.table is not None:
                try:
                    matrix = self._matrix().values.tolist()
                except FokeError:
                    matrix = None
            return {
                "revision": self.revision,
                "trees": trees,
                "trained": self.state.table is not None,
                "matrix": matrix,
                "users": sorted(self.state.profiles),
                "templates": list(self.state.templates),
            }

    def retrieve(self, payload: Any) -> dict:
        body = expect_object(payload, "request")
        no_extra_keys(body, {"concept", "vector"}, "request")
        with self._lock:
            table = self._table()
            if ("concept" in body) == ("vector" in body):
                raise ValidationError(
                    "request must carry exactly one of 'concept' or 'vector'")
            if "concept" in body:
                concept_id = expect_string(body["concept"], "request.concept")
                query = table.concept(concept_id)
            else:
                raw = expect_array(body["vector"], "request.vector")
                query = as_vector(raw, table.dimension)
            tree_id, sim = retrieve_tree(query, table, self.state.forest)
            return {"revision": self.revision, "tree_id": tree_id,
                    "similarity": sim}

    def recommend(self, payload: Any) -> dict:
        body = expect_object(payload, "request")
        no_extra_keys(body, {"user_id"}, "request")
        user_id = expect_string(get_field(body, "user_id", "request"),
                                "request.user_id")
        with self._lock:
            record = self._profile(user_id)
            matrix = self._matrix()
            scores = recommendation_scores(matrix, record.mastery)
            chosen = recommend_next(matrix, record.mastery)
            return {
                "revision": self.revision,
                "user_id": user_id,
                "next": chosen,
                "tree_id": None if chosen is None else matrix.tree_ids[chosen],
                "scores": [float(x) for x in scores],
                "mastery": list(record.mastery),
            }

    def job_payload(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown training job {job_id!r}")
            payload = job.as_payload()
            payload["revision"] = self.revision
            return payload

    def build_prompt(self, payload: Any) -> dict:
        body = expect_object(payload, "request")
        no_extra_keys(body, {"task", "template_ids", "user_id", "overrides"},
                      "request")
        raw_task = expect_object(get_field(body, "task", "request"), "request.task")
        no_extra_keys(raw_task, {"task_id", "focus_concepts", "problem_type",
                                 "hop_radius"}, "request.task")
        focus = [
            expect_string(v, f"request.task.focus_concepts[{i}]")
            for i, v in enumerate(expect_array(
                get_field(raw_task, "focus_concepts", "request.task"),
                "request.task.focus_concepts"))
        ]
        task = TaskSpec(
            task_id=expect_string(get_field(raw_task, "task_id", "request.task"),
                                  "request.task.task_id"),
            focus_concepts=focus,
            problem_type=expect_scalar(
                get_field(raw_task, "problem_type", "request.task",
                          required=False, default=""),
                str, "a string", "request.task.problem_type"),
            hop_radius=expect_int(
                get_field(raw_task, "hop_radius", "request.task",
                          required=False, default=0),
                "request.task.hop_radius"),
        )

        overrides = {}
        raw_overrides = get_field(body, "overrides", "request",
                                  required=False, default={})
        for key, value in expect_object(raw_overrides, "request.overrides").items():
            overrides[key] = value

        with self._lock:
            if "template_ids" in body:
                ids = [expect_string(v, f"request.template_ids[{i}]")
                       for i, v in enumerate(expect_array(
                           body["template_ids"], "request.template_ids"))]
                missing = [t for t in ids if t not in self.state.templates]
                if missing:
                    raise NotFoundError(f"unknown template(s) {', '.join(missing)}")
                candidates = [self.state.templates[t] for t in ids]
            else:
                candidates = list(self.state.templates.values())

            attributes = None
            raw_user = get_field(body, "user_id", "request", required=False)
            if raw_user is not None:
                record = self._profile(expect_string(raw_user, "request.user_id"))
                attributes = dict(record.attributes)

            template_id, text, score = choose_prompt(
                self.state.forest, task, candidates, attributes, overrides)
            payload = _prompt_payload(template_id, text, score)
            payload["revision"] = self.revision
            return payload

    def run_simulation(self, payload: Any) -> dict:
        body = expect_object(payload, "request")
        no_extra_keys(body, {"user_id", "delta", "max_steps", "mastery_goal",
                             "seed"}, "request")
        config = SimConfig(
            delta=expect_number(get_field(body, "delta", "request",
                                          required=False,
                                          default=SimConfig.delta),
                                "request.delta"),
            max_steps=expect_int(get_field(body, "max_steps", "request",
                                           required=False,
                                           default=SimConfig.max_steps),
                                 "request.max_steps"),
            mastery_goal=expect_number(get_field(body, "mastery_goal", "request",
                                                 required=False,
                                                 default=SimConfig.mastery_goal),
                                       "request.mastery_goal"),
            seed=expect_int(get_field(body, "seed", "request", required=False,
                                      default=SimConfig.seed), "request.seed"),
        )
        with self._lock:
            matrix = self._matrix()
            raw_user = get_field(body, "user_id", "request", required=False)
            if raw_user is None:
                start = MasteryState.zeros(matrix.size)
            else:
                record = self._profile(expect_string(raw_user, "request.user_id"))
                start = MasteryState(record.mastery)
            trajectory = simulate_learner(matrix, start, config)
            return {
                "revision": self.revision,
                "start": list(start),
                "trajectory": _trajectory_payload(trajectory),
            }

    # -- mutations ----------------------------------------------------------

    def insert_fragment(self, payload: Any) -> dict:
        body = expect_object(payload, "fragment")
        no_extra_keys(body, {"format_version", "trees", "triples"}, "fragment")
        if "format_version" in body:
            check_version(body, FOREST_FORMAT_VERSION, "fragment")
        raw_trees = expect_array(get_field(body, "trees", "fragment"),
                                 "fragment.trees")
        if len(raw_trees) != 1:
            raise ValidationError(
                f"fragment must contain exactly one tree, got {len(raw_trees)}")
        tree = parse_tree_value(raw_trees[0], "fragment.trees[0]")
        with self._lock:
            self._ensure_mutable()
            self.state.forest.insert_tree(tree)
            try:
                known = self.state.forest.concept_ids()
                new_triples = parse_triples_value(
                    get_field(body, "triples", "fragment", required=False,
                              default=[]),
                    known, "fragment.triples")
            except FokeError:
                self.state.forest.remove_tree(tree.tree_id)
                raise
            self.state.triples = self.state.triples + new_triples
            for user_id, record in self.state.profiles.items():
                self.state.profiles[user_id] = record.with_mastery(
                    record.mastery + (0.0,))
            self._bump()
            return {"revision": self.revision, "tree_id": tree.tree_id,
                    "index": len(self.state.forest.trees) - 1}

    def remove_tree(self, tree_id: str) -> dict:
        with self._lock:
            self._ensure_mutable()
            index = self.state.forest.tree_index(tree_id)
            gone = set(self.state.forest.tree(tree_id).concepts)
            self.state.forest.remove_tree(tree_id)
            self.state.triples = tuple(
                t for t in self.state.triples
                if t[0] not in gone and t[1] not in gone)
            if self.state.table is not None:
                self.state.table.tree_vectors.pop(tree_id, None)
                for cid in gone:
                    self.state.table.concept_vectors.pop(cid, None)
            for user_id, record in self.state.profiles.items():
                trimmed = MasteryState(record.mastery).without_index(index)
                self.state.profiles[user_id] = record.with_mastery(trimmed.values)
            self._bump()
            return {"revision": self.revision, "tree_id": tree_id,
                    "index": index}

    def update_user_mastery(self, payload: Any) -> dict:
        body = expect_object(payload, "request")
        no_extra_keys(body, {"user_id", "tree", "delta"}, "request")
        user_id = expect_string(get_field(body, "user_id", "request"),
                                "request.user_id")
        k = expect_int(get_field(body, "tree", "request"), "request.tree")
        delta = expect_number(get_field(body, "delta", "request"), "request.delta")
        with self._lock:
            self._ensure_mutable()
            record = self._profile(user_id)
            updated = MasteryState(record.mastery).updated(k, delta)
            self.state.profiles[user_id] = record.with_mastery(updated.values)
            self._bump()
            return {"revision": self.revision, "user_id": user_id,
                    "mastery": list(updated)}

    def start_training(self, payload: Any) -> dict:
        raw = expect_object(payload if payload is not None else {}, "config")
        config = parse_train_config(raw, "config")
        with self._lock:
            self._ensure_mutable()
            job = TrainJob(job_id=f"job-{next(self._job_ids)}", config=config)
            self._jobs[job.job_id] = job
            self._active_job = job
            thread = threading.Thread(target=self._run_training, args=(job,),
                                      name=job.job_id, daemon=True)
            thread.start()
            return {"revision": self.revision, "job_id": job.job_id}

    def _run_training(self, job: TrainJob) -> None:
        try:
            result: TrainResult = train(self.state.forest, self.state.triples,
                                        None, job.config)
        except Exception as exc:  # a dead thread must not wedge the engine
            with self._lock:
                job.status = "failed"
                job.error = str(exc)
                self._active_job = None
            return
        with self._lock:
            self.state.table = result.table
            self.state.config = job.config
            job.history = result.history
            job.status = "done"
            self._active_job = None
            self._bump()

    def wait_for_training(self, job_id: str, timeout: float = 30.0) -> TrainJob:
        """Block until the job leaves the running state; for tests and the CLI."""
        end = time.monotonic() + timeout
        while True:
            with self._lock:
                job = self._jobs.get(job_id)
                if job is None:
                    raise NotFoundError(f"unknown training job {job_id!r}")
                if job.status != "running":
                    return job
            if time.monotonic() >= end:
                raise TimeoutError(f"training job {job_id} still running")
            time.sleep(0.01)


def create_app(engine: Engine, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="foke", docs_url=None, redoc_url=None)

    @app.exception_handler(FokeError)
    async def handle_foke_error(request: Request, exc: FokeError):
        status = HTTP_STATUS_BY_ERROR.get(exc.code, 400)
        return JSONResponse(status_code=status, content={
            "code": exc.code, "message": str(exc), "detail": exc.detail})

    async def body_of(request: Request) -> Any:
        raw = await request.body()
        if not raw:
            return {}
        return parse_json_bytes(raw, "request body")

    @app.get("/forest")
    async def get_forest():
        return engine.summary()

    @app.post("/trees")
    async def post_trees(request: Request):
        return engine.insert_fragment(await body_of(request))

    @app.delete("/trees/{tree_id}")
    async def delete_tree(tree_id: str):
        return engine.remove_tree(tree_id)

    @app.post("/train")
    async def post_train(request: Request):
        return engine.start_training(await body_of(request))

    @app.get("/train/{job_id}")
    async def get_train(job_id: str):
        return engine.job_payload(job_id)

    @app.post("/retrieve")
    async def post_retrieve(request: Request):
        return engine.retrieve(await body_of(request))

    @app.post("/recommend")
    async def post_recommend(request: Request):
        return engine.recommend(await body_of(request))

    @app.post("/mastery")
    async def post_mastery(request: Request):
        return engine.update_user_mastery(await body_of(request))

    @app.post("/prompt")
    async def post_prompt(request: Request):
        return engine.build_prompt(await body_of(request))

    @app.post("/simulate")
    async def post_simulate(request: Request):
        return engine.run_simulation(await body_of(request))

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
