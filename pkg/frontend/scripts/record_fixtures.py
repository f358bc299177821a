"""Record HTTP fixtures for the web UI test suite.

Spins up the engine the same way the backend test suite does (pinned
training configuration over the reference forest), drives it through the
in-process HTTP client, and saves the raw JSON payloads. The UI tests
replay these files instead of talking to a live server, so they exercise
the real wire format without a Python dependency.

Run from the repository root:  python3 frontend/scripts/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from foke import (
    Engine,
    EngineState,
    TrainConfig,
    create_app,
    load_forest_document,
    load_profiles,
    load_templates,
    train,
)

ROOT = Path(__file__).resolve().parents[2]
DATA = ROOT / "tests" / "data"
OUT = ROOT / "frontend" / "tests" / "fixtures"

CONFIG = TrainConfig(d=8, margin=0.5, lambda_s=0.05, lambda_u=0.05,
                     learning_rate=1e-3, epochs=200, negatives_per_edge=4,
                     seed=42, init_scale=0.1)


def build_client() -> TestClient:
    document = load_forest_document(str(DATA / "fixture_forest.json"))
    result = train(document.forest, document.triples, None, CONFIG)
    state = EngineState(
        forest=document.forest,
        triples=document.triples,
        table=result.table,
        config=CONFIG,
        profiles=load_profiles(str(DATA / "fixture_profiles.json")),
        templates=load_templates(str(DATA / "fixture_templates.json")),
    )
    return TestClient(create_app(Engine(state)))


def save(name: str, payload) -> None:
    path = OUT / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(ROOT)}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    client = build_client()

    save("forest.json", client.get("/forest").json())
    save("recommend_ada.json",
         client.post("/recommend", json={"user_id": "ada"}).json())
    save("recommend_newbie.json",
         client.post("/recommend", json={"user_id": "newbie"}).json())
    save("recommend_grace.json",
         client.post("/recommend", json={"user_id": "grace"}).json())
    save("simulate_zeros.json", client.post("/simulate", json={}).json())

    task = json.loads((DATA / "fixture_task.json").read_text())
    save("prompt_ada.json",
         client.post("/prompt", json={"task": task, "user_id": "ada"}).json())

    response = client.post("/recommend", json={"user_id": "bob"})
    save("error_not_found.json",
         {"status": response.status_code, "body": response.json()})

    # the step-through loop the UI replays: recommend, accept, repeat
    exchanges = []
    while True:
        recommendation = client.post("/recommend",
                                     json={"user_id": "newbie"}).json()
        if recommendation["next"] is None:
            exchanges.append({"recommend": recommendation})
            break
        update = client.post("/mastery", json={
            "user_id": "newbie", "tree": recommendation["next"],
            "delta": 0.34}).json()
        exchanges.append({"recommend": recommendation, "mastery": update})
    save("accept_loop.json", {"delta": 0.34, "exchanges": exchanges})


if __name__ == "__main__":
    main()
