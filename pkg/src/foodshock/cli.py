"""Command line entry points.

One executable, eight subcommands: calibrate tables into a model file,
simulate shock scenarios, run exhaustive sweeps, export layer metrics,
exposure profiles, layer decompositions and reexport shares, and serve the
HTTP API.  Exit codes: 0 success, 1 unreadable or malformed input files,
2 semantic validation failure, 3 breached internal invariant.

A JSON config file passed with --config supplies defaults for any long
option (keys use underscores, e.g. {"tau": 5, "eta_mode": "verbatim"});
values given on the command line always win.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

from foodshock.analysis import (
    TrajectoryMismatchError,
    decompose_layer_effects,
    exposure_profile,
    reexport_shares,
    relative_loss,
)
from foodshock.calibration import (
    ModelInvariantError,
    calibrate,
    load_model,
    save_model,
    validate_model,
)
from foodshock.engine import ShockEngine, ShockSpec
from foodshock.metrics import layer_metrics, metrics_to_csv
from foodshock.sweep import (
    SweepManifestError,
    full_sweep,
    load_sweep,
)
from foodshock.tables import (
    TableSchemaError,
    TableValidationError,
    load_tables,
)

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3


@dataclass
class RunConfig:
    """Merged command line options, config-file defaults already applied."""

    subcommand: str
    supply: str | None = None
    use: str | None = None
    demand: str | None = None
    registry: str | None = None
    model: str | None = None
    out_dir: str | None = None
    out: str | None = None
    shocks: list | None = None            # parsed (country, product) pairs
    shock_all_products: list | None = None
    horizon: int | None = None
    tau: int | None = None
    eta_mode: str | None = None
    threads: int | None = None
    chunk_scenarios: int | None = None
    countries: str | None = None
    products: str | None = None
    threshold: float | None = None
    country: str | None = None
    product: str | None = None
    shock_country: str | None = None
    input_product: str | None = None
    timeseries: bool | None = None
    full_states: bool | None = None
    nonzero_only: bool | None = None
    top: int | None = None
    sweep_dir: str | None = None
    host: str | None = None
    port: int | None = None
    max_targets: int | None = None
    max_horizon: int | None = None


def _parse_shock_pair(text: str) -> tuple:
    country, sep, product = text.partition(":")
    if not sep or not country or not product:
        raise TableValidationError(
            f"shock {text!r} must look like COUNTRY:PRODUCT")
    return country, product


def _split_codes(text: str | None) -> tuple | None:
    if text is None:
        return None
    codes = tuple(code for code in text.split(",") if code)
    if not codes:
        raise TableValidationError("empty code list")
    return codes


def _load_config_defaults(config: RunConfig, path: str | None) -> None:
    if path is None:
        return
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise TableSchemaError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(RunConfig)} - {"subcommand", "shocks"}
    for key, value in doc.items():
        if key not in known:
            raise TableValidationError(f"{path}: unknown config key {key!r}")
        if getattr(config, key) is None:
            setattr(config, key, value)


def _require(config: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(config, name) is None:
            flag = "--" + name.replace("_", "-")
            raise TableValidationError(
                f"{config.subcommand} needs {flag} (or a config default)")


def _load_model(config: RunConfig):
    _require(config, "model")
    model = load_model(config.model)
    validate_model(model)
    return model


def _out_dir(config: RunConfig) -> Path:
    _require(config, "out_dir")
    path = Path(config.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_calibrate(config: RunConfig) -> int:
    _require(config, "supply", "use", "demand", "registry")
    tables = load_tables(config.supply, config.use, config.demand,
                         config.registry)
    model = calibrate(tables, tau=config.tau if config.tau is not None else 10,
                      eta_mode=config.eta_mode or "unified")
    validate_model(model)
    out = _out_dir(config)
    model_path = out / "model.json"
    save_model(model, model_path)
    diag = model.diagnostics
    diag_path = out / "diagnostics.csv"
    with open(diag_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind", "country", "product", "value"])
        for product, exporter in diag.zero_trade_columns:
            writer.writerow(["zero_trade_column", exporter, product, ""])
        for country, product in diag.zero_share_cells:
            writer.writerow(["zero_share_cell", country, product, ""])
        for country, product, dev in diag.eta_closure_cells:
            writer.writerow(["eta_closure_deviation", country, product,
                             repr(dev)])
    n_flagged = (len(diag.zero_trade_columns) + len(diag.zero_share_cells)
                 + len(diag.eta_closure_cells))
    print(f"wrote {model_path} and {diag_path} ({n_flagged} diagnostics)")
    return EXIT_OK


def _shock_from_config(config: RunConfig, registry) -> ShockSpec:
    targets = set(config.shocks or [])
    for country in config.shock_all_products or []:
        targets.update((country, p) for p in registry.products)
    return ShockSpec(frozenset(targets), horizon=config.horizon)


def cmd_simulate(config: RunConfig) -> int:
    model = _load_model(config)
    out = _out_dir(config)
    shock = _shock_from_config(config, model.registry)
    full = bool(config.full_states)
    engine = ShockEngine(model)
    baseline = engine.run(ShockSpec(frozenset(), horizon=config.horizon),
                          lean=not full)
    shocked = engine.run(shock, lean=not full)
    report = relative_loss(baseline, shocked,
                           series=bool(config.timeseries))
    baseline.to_csv(out / "baseline.csv", full=full)
    shocked.to_csv(out / "shocked.csv", full=full)
    report.to_csv(out / "loss.csv", level="country")
    report.to_csv(out / "loss_regional.csv", level="region")
    print(f"simulated {len(shock.targets)} shocked cells over "
          f"{shocked.tau + 1} steps into {out}")
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    model = _load_model(config)
    out = _out_dir(config)
    started = time.perf_counter()
    result = full_sweep(
        model,
        shock_countries=_split_codes(config.countries),
        shock_products=_split_codes(config.products),
        out_dir=out,
        chunk_scenarios=config.chunk_scenarios or 256,
        workers=config.threads or 1,
    )
    elapsed = time.perf_counter() - started
    computed = len(result.timing.get("computed_chunks", {}))
    rate = result.n_scenarios / elapsed if elapsed > 0 else float("inf")
    print(f"sweep of {result.n_scenarios} scenarios in {out}: "
          f"{computed} chunks computed, "
          f"{result.timing.get('skipped_chunks', 0)} reused, "
          f"{elapsed:.1f}s ({rate:.1f} scenarios/sec)")
    return EXIT_OK


def cmd_metrics(config: RunConfig) -> int:
    model = _load_model(config)
    _require(config, "out")
    threshold = config.threshold if config.threshold is not None else 1.0
    metrics_to_csv(layer_metrics(model, threshold=threshold), config.out)
    print(f"wrote {config.out}")
    return EXIT_OK


def cmd_exposure(config: RunConfig) -> int:
    model = _load_model(config)
    _require(config, "country", "product", "out")
    r = model.registry
    if config.sweep_dir is not None:
        result = load_sweep(config.sweep_dir, registry=r)
        profile = result.exposure_slice(config.country, config.product)
        d_codes, j_codes = result.shock_countries, result.shock_products
    else:
        profile = exposure_profile(model, config.country, config.product)
        d_codes, j_codes = r.countries, r.products
    rows = [(d_codes[d], j_codes[j], float(profile[d, j]))
            for d in range(len(d_codes)) for j in range(len(j_codes))]
    if config.top is not None:
        rows.sort(key=lambda row: (-row[2], row[0], row[1]))
        rows = rows[:config.top]
    with open(config.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["shock_country", "shock_product", "rl"])
        for d_code, j_code, value in rows:
            writer.writerow([d_code, j_code, repr(value)])
    print(f"wrote {config.out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_decompose(config: RunConfig) -> int:
    model = _load_model(config)
    _require(config, "shock_country", "input_product", "out")
    decomp = decompose_layer_effects(
        model, config.shock_country, config.input_product,
        observed_products=_split_codes(config.products))
    with open(config.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["region", "product", "cross_rl", "within_rl"])
        for g, region in enumerate(decomp.registry.region_names):
            for j, product in enumerate(decomp.products):
                writer.writerow([region, product,
                                 repr(float(decomp.cross[g, j])),
                                 repr(float(decomp.within[g, j]))])
    print(f"wrote {config.out}")
    return EXIT_OK


def cmd_reexports(config: RunConfig) -> int:
    model = _load_model(config)
    _require(config, "out")
    shares = reexport_shares(model)
    r = model.registry
    with open(config.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["country", "product", "domestic_share",
                         "import_share", "undefined"])
        for c, country in enumerate(r.countries):
            for i, product in enumerate(r.products):
                writer.writerow([country, product,
                                 repr(float(shares.domestic[c, i])),
                                 repr(float(shares.imported[c, i])),
                                 int(shares.undefined[c, i])])
    print(f"wrote {config.out}")
    return EXIT_OK


def cmd_serve(config: RunConfig) -> int:
    import uvicorn

    from foodshock.server import ApiSession, create_app

    model = _load_model(config)
    sweep = None
    if config.sweep_dir is not None:
        sweep = load_sweep(config.sweep_dir, registry=model.registry)
    session = ApiSession(
        model=model,
        sweep=sweep,
        max_targets=config.max_targets or 512,
        max_horizon=config.max_horizon or 50,
    )
    app = create_app(session)
    uvicorn.run(app, host=config.host or "127.0.0.1",
                port=config.port or 8000)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "metrics": cmd_metrics,
    "exposure": cmd_exposure,
    "decompose": cmd_decompose,
    "reexports": cmd_reexports,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foodshock",
        description="Calibrate, simulate and analyze shock propagation "
                    "through the multilayer food trade network.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with default option values")
        return p

    p = add("calibrate", "derive a model from supply/use/demand tables")
    p.add_argument("--supply")
    p.add_argument("--use")
    p.add_argument("--demand")
    p.add_argument("--registry")
    p.add_argument("--tau", type=int)
    p.add_argument("--eta-mode", dest="eta_mode",
                   choices=("unified", "verbatim"))
    p.add_argument("--out-dir", dest="out_dir")

    p = add("simulate", "run one scenario and write trajectories and losses")
    p.add_argument("--model")
    p.add_argument("--shock", action="append", default=None,
                   metavar="COUNTRY:PRODUCT")
    p.add_argument("--shock-all-products", dest="shock_all_products",
                   action="append", default=None, metavar="COUNTRY")
    p.add_argument("--horizon", type=int)
    p.add_argument("--timeseries", action="store_true", default=None)
    p.add_argument("--full-states", dest="full_states", action="store_true",
                   default=None)
    p.add_argument("--out-dir", dest="out_dir")

    p = add("sweep", "run every single-cell scenario into chunked files")
    p.add_argument("--model")
    p.add_argument("--countries", metavar="A,B,...")
    p.add_argument("--products", metavar="x,y,...")
    p.add_argument("--chunk-scenarios", dest="chunk_scenarios", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out-dir", dest="out_dir")

    p = add("metrics", "per-layer trade network metrics CSV")
    p.add_argument("--model")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out")

    p = add("exposure", "loss of one cell under every single-cell shock")
    p.add_argument("--model")
    p.add_argument("--country")
    p.add_argument("--product")
    p.add_argument("--sweep-dir", dest="sweep_dir")
    p.add_argument("--top", type=int)
    p.add_argument("--out")

    p = add("decompose", "cross-layer vs within-layer regional losses")
    p.add_argument("--model")
    p.add_argument("--shock-country", dest="shock_country")
    p.add_argument("--input-product", dest="input_product")
    p.add_argument("--products", metavar="x,y,...")
    p.add_argument("--out")

    p = add("reexports", "domestic vs imported availability shares")
    p.add_argument("--model")
    p.add_argument("--out")

    p = add("serve", "serve the HTTP API for a model")
    p.add_argument("--model")
    p.add_argument("--sweep-dir", dest="sweep_dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--max-targets", dest="max_targets", type=int)
    p.add_argument("--max-horizon", dest="max_horizon", type=int)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(subcommand=args.subcommand)
    for f in fields(RunConfig):
        if f.name in ("subcommand", "shocks"):
            continue
        if hasattr(args, f.name):
            setattr(config, f.name, getattr(args, f.name))
    _load_config_defaults(config, getattr(args, "config", None))
    raw_shocks = getattr(args, "shock", None)
    if raw_shocks:
        config.shocks = [_parse_shock_pair(s) for s in raw_shocks]
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.subcommand](config)
    except (TableSchemaError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ModelInvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (TableValidationError, SweepManifestError,
            TrajectoryMismatchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
