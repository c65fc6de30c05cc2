"""Capture HTTP API responses as test fixtures for the explorer UI.

Builds a small deterministic world (one grain grower exporting to a pig
producer who exports the meat onward), mounts the API in-process, and
saves the exact response bytes under tests/fixtures/.  The UI tests
assert against these snapshots, so every displayed number is traceable
to a real API payload.

Run from the repository root after installing the Python package:

    python3 frontend/scripts/capture_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from foodshock import (
    DemandTable,
    Registry,
    SupplyTable,
    SupplyUseTables,
    UseTable,
    calibrate,
)
from foodshock.server import ApiSession, create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def build_world():
    registry = Registry(
        countries=("ARA", "BEL", "COR"),
        products=("maize", "pig"),
        processes=("farming", "husbandry"),
        regions={"ARA": "west", "BEL": "east", "COR": "east"},
    )
    # BEL feeds pigs on 100 t of imported plus 50 t of home-grown maize, so
    # cutting the imports off costs two thirds of the pig output: the
    # fixtures carry fractional losses, not just zeros and ones.
    return SupplyUseTables(
        registry,
        SupplyTable.from_rows(registry, [
            ("ARA", "farming", "maize", 120.0),
            ("BEL", "farming", "maize", 50.0),
            ("BEL", "husbandry", "pig", 60.0),
        ]),
        UseTable.from_rows(registry, [
            ("ARA", "maize", "BEL", "husbandry", 100.0),
            ("BEL", "maize", "BEL", "husbandry", 50.0),
        ]),
        DemandTable.from_rows(registry, [
            ("ARA", "maize", "ARA", "food", 20.0),
            ("BEL", "pig", "BEL", "food", 20.0),
            ("BEL", "pig", "COR", "food", 40.0),
        ]),
    )


def save(name: str, response) -> None:
    assert response.status_code == 200, (name, response.status_code,
                                         response.text)
    path = OUT / name
    path.write_bytes(response.content)
    print(f"wrote {path.relative_to(OUT.parent.parent)} "
          f"({len(response.content)} bytes)")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    model = calibrate(build_world(), tau=6)
    client = TestClient(create_app(ApiSession(model=model)))

    save("registry.json", client.get("/api/registry"))

    # Shock the grain at the source; losses reach BEL pig two passes later
    # (one trade hop plus one conversion) and COR pig after three.
    save("simulate_chain.json", client.post("/api/simulate", json={
        "shock": [{"country": "ARA", "product": "maize"}],
        "timeseries": True,
    }))

    # No shock at all: every relative loss is zero.
    save("simulate_empty.json", client.post("/api/simulate", json={
        "shock": [],
    }))

    save("exposure_cor_pig.json", client.get("/api/exposure", params={
        "country": "COR", "product": "pig", "limit": 6,
    }))

    save("decompose_ara_maize.json", client.get("/api/decompose", params={
        "shock_country": "ARA", "input_product": "maize",
    }))

    # An error body, for the shape of the failure banner.
    bad = client.post("/api/simulate",
                      json={"shock": [{"country": "XXX", "product": "maize"}]})
    assert bad.status_code == 400
    (OUT / "error_unknown_country.json").write_bytes(bad.content)
    print("wrote frontend/tests/fixtures/error_unknown_country.json "
          f"({len(bad.content)} bytes)")

    # Record the onset steps the tests rely on, to fail loudly here rather
    # than mysteriously there if the world above ever changes.
    doc = json.loads((OUT / "simulate_chain.json").read_text())
    series = doc["series"]
    bel_pig = [step[1][1] for step in series]
    cor_pig = [step[2][1] for step in series]
    assert bel_pig[0] == 0 and bel_pig[1] == 0 and bel_pig[2] > 0, bel_pig
    assert cor_pig[2] == 0 and cor_pig[3] > 0, cor_pig


if __name__ == "__main__":
    main()
