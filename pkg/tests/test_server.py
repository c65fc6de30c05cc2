import numpy as np
import pytest
from fastapi.testclient import TestClient

from foodshock.analysis import (
    decompose_layer_effects,
    exposure_profile,
    relative_loss,
)
from foodshock.calibration import calibrate
from foodshock.engine import ShockEngine, ShockSpec
from foodshock.metrics import layer_metrics
from foodshock.server import ApiSession, create_app, render_json
from foodshock.sweep import full_sweep
from foodshock.tables import (
    DemandTable,
    Registry,
    SupplyTable,
    SupplyUseTables,
    UseTable,
    generate_synthetic_world,
)


def world(registry, supply=(), use=(), demand=()):
    return SupplyUseTables(
        registry,
        SupplyTable.from_rows(registry, supply),
        UseTable.from_rows(registry, use),
        DemandTable.from_rows(registry, demand),
    )


@pytest.fixture(scope="module")
def toy_model():
    return calibrate(generate_synthetic_world(4, 3, 3, density=0.4, seed=5))


@pytest.fixture
def client(toy_model):
    return TestClient(create_app(ApiSession(model=toy_model)))


def g9(x: float) -> float:
    return float(format(float(x), ".9g"))


# ---------------------------------------------------------------------------
# JSON rendering
# ---------------------------------------------------------------------------

def test_render_json_nine_significant_digits():
    assert render_json(1 / 3) == "0.333333333"
    assert render_json(123456789.123) == "123456789"
    assert render_json(0.25) == "0.25"
    assert render_json([1.0, 2]) == "[1,2]"


def test_render_json_sorted_keys_and_scalars():
    text = render_json({"b": True, "a": None, "c": "x", "d": np.float64(0.5)})
    assert text == '{"a":null,"b":true,"c":"x","d":0.5}'


def test_render_json_arrays():
    assert render_json(np.array([[0.5, 1.0]])) == "[[0.5,1]]"


def test_render_json_rejects_unknown_types():
    with pytest.raises(TypeError):
        render_json(object())


# ---------------------------------------------------------------------------
# Registry and error plumbing
# ---------------------------------------------------------------------------

def test_registry_endpoint(toy_model, client):
    body = client.get("/api/registry").json()
    r = toy_model.registry
    assert body["countries"] == list(r.countries)
    assert body["products"] == list(r.products)
    assert body["processes"] == list(r.processes)
    assert body["region_names"] == list(r.region_names)
    assert body["regions"][r.countries[0]] == r.region_of(r.countries[0])


def test_no_model_gives_503():
    bare = TestClient(create_app(ApiSession(model=None)))
    response = bare.get("/api/registry")
    assert response.status_code == 503
    body = response.json()
    assert set(body) == {"code", "message", "detail"}
    assert body["code"] == "no_model"


def test_query_validation_error_shape(client):
    response = client.get("/api/exposure",
                          params={"country": "c000", "product": "p000",
                                  "limit": "lots"})
    assert response.status_code == 422
    assert response.json()["code"] == "invalid_request"


# ---------------------------------------------------------------------------
# Simulate
# ---------------------------------------------------------------------------

def test_simulate_empty_shock_all_zero(client, toy_model):
    body = client.post("/api/simulate", json={"shock": []}).json()
    rl = np.array(body["rl"])
    assert rl.shape == (toy_model.registry.n_countries,
                        toy_model.registry.n_products)
    assert np.all(rl == 0.0)


def test_simulate_matches_library_values(client, toy_model):
    r = toy_model.registry
    target = {"country": r.countries[0], "product": r.products[0]}
    body = client.post("/api/simulate", json={"shock": [target]}).json()
    engine = ShockEngine(toy_model)
    report = relative_loss(
        engine.baseline(),
        engine.run(ShockSpec.single(r.countries[0], r.products[0])))
    assert body["model_hash"] == engine.model_hash
    assert body["t"] == report.t
    for c in range(r.n_countries):
        for i in range(r.n_products):
            assert body["rl"][c][i] == g9(report.rl[c, i])
    for g in range(r.n_regions):
        for i in range(r.n_products):
            assert body["rl_regional"][g][i] == g9(report.rl_regional[g, i])


def test_simulate_series_respects_chain_delay():
    r = Registry(countries=("A", "B"), products=("maize", "pig"),
                 processes=("farm", "PH"))
    tables = world(
        r,
        supply=[("A", "farm", "maize", 100.0), ("B", "PH", "pig", 50.0)],
        use=[("A", "maize", "B", "PH", 100.0)],
        demand=[("B", "pig", "B", "food", 50.0)],
    )
    session = ApiSession(model=calibrate(tables))
    client = TestClient(create_app(session))
    body = client.post("/api/simulate", json={
        "shock": [{"country": "A", "product": "maize"}],
        "timeseries": True,
    }).json()
    series = np.array(body["series"])
    b, pig = r.country_index("B"), r.product_index("pig")
    # shocked maize needs one trade pass plus one conversion pass to show up
    # in B's pig supply, so the loss series stays zero before step 2
    assert series[0, b, pig] == 0.0
    assert series[1, b, pig] == 0.0
    assert series[2, b, pig] > 0.0


def test_simulate_horizon_controls_steps(client):
    body = client.post("/api/simulate",
                       json={"shock": [], "horizon": 3,
                             "timeseries": True}).json()
    assert len(body["series"]) == 4


def test_simulate_unknown_code_400(client):
    response = client.post("/api/simulate", json={
        "shock": [{"country": "ATLANTIS", "product": "p000"}]})
    assert response.status_code == 400
    assert response.json()["code"] == "unknown_country"


def test_simulate_bad_body_400(client):
    response = client.post("/api/simulate",
                           content=b"not json",
                           headers={"content-type": "application/json"})
    assert response.status_code == 400
    assert response.json()["code"] == "bad_json"


def test_simulate_limits_give_422(toy_model):
    session = ApiSession(model=toy_model, max_targets=1, max_horizon=5)
    client = TestClient(create_app(session))
    r = toy_model.registry
    over_targets = client.post("/api/simulate", json={"shock": [
        {"country": r.countries[0], "product": r.products[0]},
        {"country": r.countries[1], "product": r.products[1]},
    ]})
    assert over_targets.status_code == 422
    assert over_targets.json()["code"] == "over_limit"
    over_horizon = client.post("/api/simulate",
                               json={"shock": [], "horizon": 9})
    assert over_horizon.status_code == 422


def test_simulate_response_cached_and_repeatable(toy_model):
    session = ApiSession(model=toy_model)
    client = TestClient(create_app(session))
    r = toy_model.registry
    payload = {"shock": [{"country": r.countries[1],
                          "product": r.products[0]}]}
    first = client.post("/api/simulate", json=payload)
    cached = len(session._cache)
    second = client.post("/api/simulate", json=payload)
    assert first.text == second.text
    assert len(session._cache) == cached


# ---------------------------------------------------------------------------
# Exposure
# ---------------------------------------------------------------------------

def test_exposure_sorted_and_paginated(client, toy_model):
    r = toy_model.registry
    params = {"country": r.countries[1], "product": r.products[1]}
    full = client.get("/api/exposure",
                      params={**params, "limit": 12}).json()
    assert full["total"] == r.n_countries * r.n_products
    values = [e["rl"] for e in full["entries"]]
    assert values == sorted(values, reverse=True)

    page1 = client.get("/api/exposure",
                       params={**params, "limit": 3, "offset": 0}).json()
    page2 = client.get("/api/exposure",
                       params={**params, "limit": 3, "offset": 3}).json()
    assert page1["entries"] + page2["entries"] == full["entries"][:6]


def test_exposure_matches_profile_values(client, toy_model):
    r = toy_model.registry
    profile = exposure_profile(toy_model, r.countries[1], r.products[1])
    body = client.get("/api/exposure",
                      params={"country": r.countries[1],
                              "product": r.products[1],
                              "limit": 12}).json()
    served = {(e["shock_country"], e["shock_product"]): e["rl"]
              for e in body["entries"]}
    for d, country in enumerate(r.countries):
        for j, product in enumerate(r.products):
            assert served[(country, product)] == g9(profile[d, j])


def test_exposure_unknown_code_404(client, toy_model):
    response = client.get("/api/exposure",
                          params={"country": toy_model.registry.countries[0],
                                  "product": "nope"})
    assert response.status_code == 404
    assert response.json()["code"] == "unknown_product"


def test_exposure_from_sweep_equals_computed(toy_model):
    sweep = full_sweep(toy_model)
    with_sweep = TestClient(create_app(ApiSession(model=toy_model,
                                                  sweep=sweep)))
    without = TestClient(create_app(ApiSession(model=toy_model)))
    r = toy_model.registry
    params = {"country": r.countries[0], "product": r.products[2],
              "limit": 12}
    assert (with_sweep.get("/api/exposure", params=params).text
            == without.get("/api/exposure", params=params).text)


# ---------------------------------------------------------------------------
# Sweep slices, metrics, decomposition, reexports
# ---------------------------------------------------------------------------

def test_sweep_loss_with_and_without_precomputed_sweep(toy_model):
    sweep = full_sweep(toy_model)
    with_sweep = TestClient(create_app(ApiSession(model=toy_model,
                                                  sweep=sweep)))
    without = TestClient(create_app(ApiSession(model=toy_model)))
    r = toy_model.registry
    params = {"shock_country": r.countries[2], "shock_product": r.products[0]}
    a = with_sweep.get("/api/sweep/loss", params=params)
    b = without.get("/api/sweep/loss", params=params)
    assert a.status_code == b.status_code == 200
    assert a.text == b.text
    rl = np.array(a.json()["rl"])
    expected = sweep.loss_of(r.countries[2], r.products[0])
    np.testing.assert_array_equal(rl, np.vectorize(g9)(expected))


def test_sweep_loss_unknown_code_404(client):
    response = client.get("/api/sweep/loss",
                          params={"shock_country": "zzz",
                                  "shock_product": "p000"})
    assert response.status_code == 404


def test_metrics_endpoint_matches_library(client, toy_model):
    body = client.get("/api/metrics/layers").json()
    expected = layer_metrics(toy_model)
    assert body["threshold"] == 1.0
    assert len(body["layers"]) == len(expected)
    for served, m in zip(body["layers"], expected):
        assert served["product"] == m.product
        assert served["links"] == m.links
        assert served["n_scc"] == m.n_scc
        assert served["n_wcc"] == m.n_wcc
        assert served["herfindahl"] == g9(m.herfindahl)


def test_decompose_endpoint_matches_library(client, toy_model):
    r = toy_model.registry
    body = client.get("/api/decompose",
                      params={"shock_country": r.countries[1],
                              "input_product": r.products[0]}).json()
    decomp = decompose_layer_effects(toy_model, r.countries[1], r.products[0])
    assert body["products"] == list(r.products)
    assert body["regions"] == list(r.region_names)
    for g in range(r.n_regions):
        for j in range(len(decomp.products)):
            assert body["cross"][g][j] == g9(decomp.cross[g, j])
            assert body["within"][g][j] == g9(decomp.within[g, j])


def test_decompose_product_subset(client, toy_model):
    r = toy_model.registry
    body = client.get("/api/decompose",
                      params={"shock_country": r.countries[1],
                              "input_product": r.products[0],
                              "products": r.products[1]}).json()
    assert body["products"] == [r.products[1]]
    assert len(body["cross"][0]) == 1


def test_reexports_endpoint_shares_sum_to_one(client, toy_model):
    body = client.get("/api/reexports").json()
    domestic = np.array(body["domestic"])
    imported = np.array(body["imported"])
    undefined = np.array(body["undefined"])
    total = domestic + imported
    assert np.allclose(total[~undefined], 1.0, atol=1e-8)
    assert np.all(total[undefined] == 0.0)
