"""Drive the HTTP API in-process, endpoint by endpoint.

The `foodshock serve` command exposes the same app over a real socket; here
we mount it on a test client so the demo runs without networking.  All
responses are plain JSON with floats printed at nine significant digits,
and identical requests always produce identical bytes.
"""

import json

from fastapi.testclient import TestClient

from foodshock import calibrate, generate_synthetic_world
from foodshock.server import ApiSession, create_app

model = calibrate(generate_synthetic_world(12, 6, 5, density=0.4, seed=404))
session = ApiSession(model=model)
client = TestClient(create_app(session))


def show(title, response, keys=None):
    doc = response.json()
    if keys:
        doc = {k: doc[k] for k in keys if k in doc}
    print(f"\n## {title}  (HTTP {response.status_code})")
    print(json.dumps(doc, indent=2)[:400])


reg = client.get("/api/registry")
show("registry", reg, keys=["model_hash", "countries", "region_names"])
countries = reg.json()["countries"]
products = reg.json()["products"]

show("simulate one shock", client.post("/api/simulate", json={
    "shock": [{"country": countries[0], "product": products[1]}],
    "timeseries": True,
}), keys=["t", "shock"])

show("exposure ranking", client.get("/api/exposure", params={
    "country": countries[2], "product": products[0], "limit": 3,
}))

show("per-layer metrics", client.get("/api/metrics/layers",
                                      params={"threshold": 5.0}))

show("channel decomposition", client.get("/api/decompose", params={
    "shock_country": countries[0], "input_product": products[1],
    "products": products[1],
}), keys=["shock_country", "input_product", "products"])

# Errors carry a machine-readable code and an explanation.
bad = client.post("/api/simulate", json={
    "shock": [{"country": "XXX", "product": products[0]}]})
show("unknown country", bad)

# Responses are deterministic: repeating a request yields identical bytes.
a = client.get("/api/sweep/loss", params={
    "shock_country": countries[0], "shock_product": products[1]})
b = client.get("/api/sweep/loss", params={
    "shock_country": countries[0], "shock_product": products[1]})
print(f"\nrepeat request byte-identical: {a.content == b.content}")
