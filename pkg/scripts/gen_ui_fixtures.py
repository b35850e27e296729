#!/usr/bin/env python3
"""Record the exact session-service payloads for the browser-UI tests.

Regenerating and committing these keeps the TypeScript suite honest: a
python test compares the committed fixtures against a fresh recording, so
the UI tests always run against real wire payloads.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from csptree.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"

PATHS = {
    "sce-pr-1": ("patrol", [2, 1, 1, 1, 1, 1, 1]),
    "sce-acd-1": ("chemical", [1, 9, 1, 1]),
}


def record(client: TestClient, model: str, clicks):
    doc = client.post("/sessions", json={"model": model}).json()
    sid = doc["session_id"]
    steps = []
    menu = doc["menu"]
    clicked = []
    for idx in clicks:
        ev = next(e for e in menu["events"] if e["index"] == idx)
        clicked.append(f"{ev['channel']} {ev['payload_text']}")
        menu = client.post(f"/sessions/{sid}/choice", json={"index": idx}).json()
        steps.append({"index": idx, "menu": menu})
    history = client.get(f"/sessions/{sid}/history").json()["history"]
    return {
        "model": model,
        "initial": doc["menu"],
        "steps": steps,
        "clicked_events": clicked,
        "server_history": history,
    }


def generate() -> dict:
    client = TestClient(create_app())
    return {name: record(client, model, clicks) for name, (model, clicks) in PATHS.items()}


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, doc in generate().items():
        path = FIXTURES / f"{name}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
