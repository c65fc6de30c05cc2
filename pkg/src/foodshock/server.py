"""JSON-over-HTTP facade for a loaded model.

Every response is a pure function of (model fingerprint, request), so a
small LRU cache keyed on that pair fronts the compute.  Floats are rendered
with 9 significant digits by a custom JSON writer, which keeps served text
byte-stable and equal to the formatting of the underlying arrays.  Errors
use one body shape: {"code", "message", "detail"}.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from foodshock.analysis import (
    decompose_layer_effects,
    exposure_profile,
    reexport_shares,
    relative_loss,
)
from foodshock.calibration import CalibratedModel
from foodshock.engine import ShockEngine, ShockSpec
from foodshock.metrics import layer_metrics
from foodshock.sweep import SweepResult
from foodshock.tables import TableValidationError

CACHE_ENTRIES = 256


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str,
                 detail: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def render_json(value) -> str:
    """Serialize to JSON with floats at 9 significant digits, keys sorted."""
    parts: list[str] = []
    _render(value, parts)
    return "".join(parts)


def _render(value, parts: list) -> None:
    if isinstance(value, dict):
        parts.append("{")
        for n, key in enumerate(sorted(value)):
            if n:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _render(value[key], parts)
        parts.append("}")
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for n, item in enumerate(value):
            if n:
                parts.append(",")
            _render(item, parts)
        parts.append("]")
    elif isinstance(value, np.ndarray):
        _render(value.tolist(), parts)
    elif isinstance(value, bool):
        parts.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        parts.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        parts.append(format(float(value), ".9g"))
    elif isinstance(value, str):
        parts.append(json.dumps(value))
    elif value is None:
        parts.append("null")
    else:
        raise TypeError(f"cannot render {type(value)!r}")


@dataclass
class ApiSession:
    """One loaded model (optionally with a precomputed sweep) plus limits."""

    model: CalibratedModel | None = None
    sweep: SweepResult | None = None
    max_targets: int = 512
    max_horizon: int = 50
    _engine: ShockEngine | None = field(default=None, repr=False)
    _cache: OrderedDict = field(default_factory=OrderedDict, repr=False)

    def engine(self) -> ShockEngine:
        if self.model is None:
            raise ApiError(503, "no_model", "no model loaded",
                           "start the server with a calibrated model file")
        if self._engine is None:
            self._engine = ShockEngine(self.model)
        return self._engine

    def cached(self, endpoint: str, key, compute) -> str:
        cache_key = (self.engine().model_hash, endpoint,
                     json.dumps(key, sort_keys=True))
        hit = self._cache.get(cache_key)
        if hit is not None:
            self._cache.move_to_end(cache_key)
            return hit
        text = render_json(compute())
        self._cache[cache_key] = text
        if len(self._cache) > CACHE_ENTRIES:
            self._cache.popitem(last=False)
        return text


def _resolve(registry, kind: str, code: str, status: int):
    lookup = {"country": registry.country_index,
              "product": registry.product_index}[kind]
    try:
        return lookup(code)
    except TableValidationError:
        raise ApiError(status, f"unknown_{kind}",
                       f"unknown {kind} code {code!r}") from None


def create_app(session: ApiSession) -> FastAPI:
    app = FastAPI(title="foodshock API", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code,
                                     "message": exc.message,
                                     "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request,
                                exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request",
                                     "message": "request failed validation",
                                     "detail": str(exc.errors())})

    def reply(text: str) -> Response:
        return Response(content=text, media_type="application/json")

    @app.get("/api/registry")
    def get_registry():
        engine = session.engine()
        r = engine.model.registry
        return reply(session.cached("registry", None, lambda: {
            "countries": list(r.countries),
            "products": list(r.products),
            "processes": list(r.processes),
            "purposes": list(r.purposes),
            "regions": {c: r.region_of(c) for c in r.countries},
            "region_names": list(r.region_names),
            "model_hash": engine.model_hash,
        }))

    @app.post("/api/simulate")
    async def post_simulate(request: Request):
        engine = session.engine()
        r = engine.model.registry
        try:
            body = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise ApiError(400, "bad_json", "request body is not JSON",
                           str(exc)) from None
        if not isinstance(body, dict):
            raise ApiError(400, "bad_json", "request body must be an object")
        raw_targets = body.get("shock", [])
        if not isinstance(raw_targets, list):
            raise ApiError(400, "bad_shock", "shock must be a list")
        horizon = body.get("horizon")
        timeseries = bool(body.get("timeseries", False))
        if horizon is not None:
            if not isinstance(horizon, int) or horizon < 0:
                raise ApiError(400, "bad_horizon",
                               "horizon must be a nonnegative integer")
            if horizon > session.max_horizon:
                raise ApiError(422, "over_limit",
                               f"horizon {horizon} exceeds the limit "
                               f"{session.max_horizon}")
        targets = set()
        for entry in raw_targets:
            if (not isinstance(entry, dict) or "country" not in entry
                    or "product" not in entry):
                raise ApiError(400, "bad_shock",
                               "each shock entry needs country and product")
            _resolve(r, "country", entry["country"], 400)
            _resolve(r, "product", entry["product"], 400)
            targets.add((entry["country"], entry["product"]))
        if len(targets) > session.max_targets:
            raise ApiError(422, "over_limit",
                           f"{len(targets)} shock targets exceed the limit "
                           f"{session.max_targets}")
        key = {"shock": sorted(targets), "horizon": horizon,
               "timeseries": timeseries}

        def compute():
            baseline = engine.run(ShockSpec(frozenset(), horizon=horizon))
            shocked = engine.run(ShockSpec(frozenset(targets),
                                           horizon=horizon))
            report = relative_loss(baseline, shocked, series=timeseries)
            doc = {
                "model_hash": engine.model_hash,
                "t": report.t,
                "shock": [{"country": c, "product": p}
                          for c, p in sorted(targets)],
                "rl": report.rl,
                "rl_regional": report.rl_regional,
            }
            if timeseries:
                doc["series"] = report.rl_series
            return doc

        return reply(session.cached("simulate", key, compute))

    @app.get("/api/exposure")
    def get_exposure(country: str, product: str, limit: int = 50,
                     offset: int = 0):
        engine = session.engine()
        r = engine.model.registry
        _resolve(r, "country", country, 404)
        _resolve(r, "product", product, 404)
        if limit < 1 or offset < 0:
            raise ApiError(422, "over_limit",
                           "limit must be >= 1 and offset >= 0")
        key = {"country": country, "product": product, "limit": limit,
               "offset": offset}

        def compute():
            if session.sweep is not None:
                profile = session.sweep.exposure_slice(country, product)
                d_codes = session.sweep.shock_countries
                j_codes = session.sweep.shock_products
            else:
                profile = exposure_profile(engine.model, country, product,
                                           engine=engine)
                d_codes, j_codes = r.countries, r.products
            order = []
            for d in range(len(d_codes)):
                for j in range(len(j_codes)):
                    order.append((-float(profile[d, j]), d, j))
            order.sort()
            page = order[offset:offset + limit]
            return {
                "country": country,
                "product": product,
                "total": len(order),
                "offset": offset,
                "limit": limit,
                "entries": [{"shock_country": d_codes[d],
                             "shock_product": j_codes[j],
                             "rl": -neg}
                            for neg, d, j in page],
            }

        return reply(session.cached("exposure", key, compute))

    @app.get("/api/sweep/loss")
    def get_sweep_loss(shock_country: str, shock_product: str):
        engine = session.engine()
        r = engine.model.registry
        _resolve(r, "country", shock_country, 404)
        _resolve(r, "product", shock_product, 404)
        key = {"shock_country": shock_country, "shock_product": shock_product}

        def compute():
            if session.sweep is not None:
                rl = session.sweep.loss_of(shock_country, shock_product)
                regional = session.sweep.regional_of(shock_country,
                                                     shock_product)
            else:
                baseline = engine.baseline()
                shocked = engine.run(ShockSpec.single(shock_country,
                                                      shock_product))
                report = relative_loss(baseline, shocked)
                rl, regional = report.rl, report.rl_regional
            return {
                "model_hash": engine.model_hash,
                "shock_country": shock_country,
                "shock_product": shock_product,
                "rl": rl,
                "rl_regional": regional,
            }

        return reply(session.cached("sweep_loss", key, compute))

    @app.get("/api/metrics/layers")
    def get_metrics(threshold: float = 1.0):
        engine = session.engine()
        if threshold < 0:
            raise ApiError(422, "over_limit", "threshold must be >= 0")
        key = {"threshold": threshold}

        def compute():
            layers = layer_metrics(engine.model, threshold=threshold)
            return {
                "threshold": threshold,
                "layers": [{
                    "product": m.product,
                    "n_nodes": m.n_nodes,
                    "n_scc": m.n_scc,
                    "n_wcc": m.n_wcc,
                    "links": m.links,
                    "mean_degree": m.mean_degree,
                    "mean_strength": m.mean_strength,
                    "herfindahl": m.herfindahl,
                } for m in layers],
            }

        return reply(session.cached("metrics", key, compute))

    @app.get("/api/decompose")
    def get_decompose(shock_country: str, input_product: str,
                      products: str | None = None):
        engine = session.engine()
        r = engine.model.registry
        _resolve(r, "country", shock_country, 404)
        _resolve(r, "product", input_product, 404)
        observed = None
        if products is not None:
            observed = tuple(p for p in products.split(",") if p)
            for p in observed:
                _resolve(r, "product", p, 404)
            if not observed:
                raise ApiError(404, "unknown_product",
                               "products list is empty")
        key = {"shock_country": shock_country,
               "input_product": input_product,
               "products": list(observed) if observed else None}

        def compute():
            decomp = decompose_layer_effects(
                engine.model, shock_country, input_product,
                observed_products=observed, engine=engine)
            return {
                "model_hash": engine.model_hash,
                "shock_country": shock_country,
                "input_product": input_product,
                "products": list(decomp.products),
                "regions": list(r.region_names),
                "cross": decomp.cross,
                "within": decomp.within,
            }

        return reply(session.cached("decompose", key, compute))

    @app.get("/api/reexports")
    def get_reexports():
        engine = session.engine()
        r = engine.model.registry

        def compute():
            shares = reexport_shares(engine.model, engine=engine)
            return {
                "model_hash": engine.model_hash,
                "domestic": shares.domestic,
                "imported": shares.imported,
                "undefined": shares.undefined.astype(bool).tolist(),
            }

        return reply(session.cached("reexports", None, compute))

    return app
