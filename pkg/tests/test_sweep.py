import csv
import json

import numpy as np
import pytest

from foodshock.analysis import (
    decompose_layer_effects,
    exposure_profile,
    relative_loss,
)
from foodshock.calibration import calibrate
from foodshock.engine import ShockEngine, ShockSpec
from foodshock.sweep import (
    MANIFEST_NAME,
    SWEEP_CSV_HEADER,
    TIMING_NAME,
    SweepManifestError,
    full_sweep,
    load_sweep,
    sweep_to_csv,
)
from foodshock.tables import (
    DemandTable,
    Registry,
    SupplyTable,
    SupplyUseTables,
    TableValidationError,
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


def toy_model(seed=5):
    return calibrate(generate_synthetic_world(4, 3, 3, density=0.4, seed=seed))


def directory_bytes(path, skip=(TIMING_NAME,)):
    return {f.name: f.read_bytes()
            for f in sorted(path.iterdir()) if f.name not in skip}


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

def test_sweep_matches_per_scenario_runs():
    model = toy_model()
    r = model.registry
    result = full_sweep(model)
    engine = ShockEngine(model)
    baseline = engine.baseline()
    assert result.n_scenarios == r.n_countries * r.n_products
    for d in r.countries:
        for j in r.products:
            report = relative_loss(baseline,
                                   engine.run(ShockSpec.single(d, j)))
            np.testing.assert_array_equal(result.loss_of(d, j), report.rl)
            np.testing.assert_array_equal(result.regional_of(d, j),
                                          report.rl_regional)


def test_sweep_subset_axes_in_registry_order():
    model = toy_model()
    r = model.registry
    countries = (r.countries[2], r.countries[0])
    products = (r.products[1], r.products[0])
    result = full_sweep(model, shock_countries=countries,
                        shock_products=products)
    assert result.shock_countries == (r.countries[0], r.countries[2])
    assert result.shock_products == (r.products[0], r.products[1])
    assert result.n_scenarios == 4
    engine = ShockEngine(model)
    baseline = engine.baseline()
    for d in result.shock_countries:
        for j in result.shock_products:
            report = relative_loss(baseline,
                                   engine.run(ShockSpec.single(d, j)))
            np.testing.assert_array_equal(result.loss_of(d, j), report.rl)


def test_autarkic_source_loses_itself_completely():
    r = Registry(countries=("A", "B"), products=("apple",),
                 processes=("orchard",))
    tables = world(
        r,
        supply=[("A", "orchard", "apple", 30.0)],
        demand=[("A", "apple", "A", "food", 30.0)],
    )
    model = calibrate(tables)
    result = full_sweep(model)
    rl = result.loss_of("A", "apple")
    assert rl[r.country_index("A"), 0] == 1.0


def test_sweep_rejects_empty_axis():
    model = toy_model()
    with pytest.raises(TableValidationError):
        full_sweep(model, shock_countries=())


def test_sweep_refuses_oversized_in_memory():
    model = toy_model()
    import foodshock.sweep as sweep_mod
    old = sweep_mod.MEMORY_LIMIT_BYTES
    sweep_mod.MEMORY_LIMIT_BYTES = 64
    try:
        with pytest.raises(ValueError, match="out_dir"):
            full_sweep(model)
    finally:
        sweep_mod.MEMORY_LIMIT_BYTES = old


# ---------------------------------------------------------------------------
# Slice consistency with the analysis views
# ---------------------------------------------------------------------------

def test_exposure_slice_matches_exposure_profile_bitwise():
    model = toy_model(seed=8)
    r = model.registry
    result = full_sweep(model)
    engine = ShockEngine(model)
    for country, product in [(r.countries[0], r.products[0]),
                             (r.countries[3], r.products[2])]:
        profile = exposure_profile(model, country, product, engine=engine)
        view = result.exposure_slice(country, product)
        assert view.tobytes() == profile.tobytes()


def test_decomposition_matches_sweep_regional_cells_bitwise():
    model = toy_model(seed=12)
    r = model.registry
    result = full_sweep(model)
    decomp = decompose_layer_effects(model, r.countries[1], r.products[0])
    cross_from_sweep = result.regional_of(r.countries[1], r.products[0])
    assert decomp.cross.tobytes() == cross_from_sweep.tobytes()
    for j, product in enumerate(r.products):
        within_from_sweep = result.regional_of(r.countries[1], product)[:, j]
        assert decomp.within[:, j].tobytes() == within_from_sweep.tobytes()


# ---------------------------------------------------------------------------
# Disk layout, resume, determinism
# ---------------------------------------------------------------------------

def test_disk_sweep_round_trip(tmp_path):
    model = toy_model(seed=3)
    mem = full_sweep(model)
    disk = full_sweep(model, out_dir=tmp_path / "sweep", chunk_scenarios=5)
    assert (tmp_path / "sweep" / MANIFEST_NAME).exists()
    assert (tmp_path / "sweep" / TIMING_NAME).exists()
    loaded = load_sweep(tmp_path / "sweep", registry=model.registry)
    assert loaded.model_hash == mem.model_hash
    assert loaded.tau == model.tau
    for d in model.registry.countries:
        for j in model.registry.products:
            assert loaded.loss_of(d, j).tobytes() == mem.loss_of(d, j).tobytes()
            assert (loaded.regional_of(d, j).tobytes()
                    == mem.regional_of(d, j).tobytes())


def test_resume_skips_existing_chunks_and_reproduces_bytes(tmp_path):
    model = toy_model(seed=6)
    out = tmp_path / "sweep"
    full_sweep(model, out_dir=out, chunk_scenarios=4)
    complete = directory_bytes(out)

    # simulate an interrupted run by deleting two chunks
    (out / "chunk_00001.npy").unlink()
    (out / "chunk_00002_regional.npy").unlink()
    kept_mtime = (out / "chunk_00000.npy").stat().st_mtime_ns

    result = full_sweep(model, out_dir=out, chunk_scenarios=4)
    assert directory_bytes(out) == complete
    assert (out / "chunk_00000.npy").stat().st_mtime_ns == kept_mtime
    assert result.timing["skipped_chunks"] > 0


def test_completed_sweep_rerun_recomputes_nothing(tmp_path):
    model = toy_model(seed=6)
    out = tmp_path / "sweep"
    full_sweep(model, out_dir=out, chunk_scenarios=4)
    result = full_sweep(model, out_dir=out, chunk_scenarios=4)
    assert result.timing["computed_chunks"] == {}
    assert result.timing["skipped_chunks"] == result.n_chunks


def test_worker_count_does_not_change_bytes(tmp_path):
    model = toy_model(seed=10)
    serial = tmp_path / "serial"
    forked = tmp_path / "forked"
    full_sweep(model, out_dir=serial, chunk_scenarios=3, workers=1)
    full_sweep(model, out_dir=forked, chunk_scenarios=3, workers=2)
    assert directory_bytes(serial) == directory_bytes(forked)


def test_manifest_mismatch_rejected(tmp_path):
    out = tmp_path / "sweep"
    full_sweep(toy_model(seed=3), out_dir=out, chunk_scenarios=4)
    with pytest.raises(SweepManifestError):
        full_sweep(toy_model(seed=4), out_dir=out, chunk_scenarios=4)
    with pytest.raises(SweepManifestError):
        full_sweep(toy_model(seed=3), out_dir=out, chunk_scenarios=5)


def test_load_sweep_requires_completion(tmp_path):
    model = toy_model(seed=3)
    out = tmp_path / "sweep"
    full_sweep(model, out_dir=out, chunk_scenarios=4)
    (out / "chunk_00000.npy").unlink()
    with pytest.raises(SweepManifestError, match="incomplete"):
        load_sweep(out)


def test_load_sweep_without_registry_rebuilds_axes(tmp_path):
    model = toy_model(seed=3)
    out = tmp_path / "sweep"
    mem = full_sweep(model)
    full_sweep(model, out_dir=out, chunk_scenarios=4)
    loaded = load_sweep(out)
    assert loaded.registry.countries == model.registry.countries
    assert loaded.registry.region_names == model.registry.region_names
    d, j = model.registry.countries[1], model.registry.products[1]
    assert loaded.loss_of(d, j).tobytes() == mem.loss_of(d, j).tobytes()


def test_load_sweep_rejects_foreign_registry(tmp_path):
    model = toy_model(seed=3)
    out = tmp_path / "sweep"
    full_sweep(model, out_dir=out, chunk_scenarios=4)
    other = Registry(countries=("X", "Y"), products=("maize",),
                     processes=("farm",))
    with pytest.raises(SweepManifestError):
        load_sweep(out, registry=other)


def test_manifest_is_deterministic_json(tmp_path):
    model = toy_model(seed=3)
    a = tmp_path / "a"
    b = tmp_path / "b"
    full_sweep(model, out_dir=a, chunk_scenarios=4)
    full_sweep(model, out_dir=b, chunk_scenarios=4)
    assert (a / MANIFEST_NAME).read_bytes() == (b / MANIFEST_NAME).read_bytes()
    manifest = json.loads((a / MANIFEST_NAME).read_text())
    assert manifest["n_scenarios"] == model.registry.n_countries * \
        model.registry.n_products


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def test_sweep_csv_shape_and_values(tmp_path):
    r = Registry(countries=("A", "B"), products=("apple",),
                 processes=("orchard",))
    tables = world(
        r,
        supply=[("A", "orchard", "apple", 30.0)],
        demand=[("A", "apple", "A", "food", 20.0),
                ("A", "apple", "B", "food", 10.0)],
    )
    model = calibrate(tables)
    result = full_sweep(model)
    path = tmp_path / "sweep.csv"
    sweep_to_csv(result, path)
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == SWEEP_CSV_HEADER
    assert len(rows) == 1 + result.n_scenarios * r.n_countries * r.n_products
    by_key = {tuple(row[:4]): float(row[4]) for row in rows[1:]}
    assert by_key[("A", "apple", "A", "apple")] == 1.0
    assert by_key[("A", "apple", "B", "apple")] == 1.0
    assert by_key[("B", "apple", "A", "apple")] == 0.0

    nonzero = tmp_path / "nonzero.csv"
    sweep_to_csv(result, nonzero, nonzero_only=True)
    with open(nonzero, newline="") as handle:
        rows = list(csv.reader(handle))
    assert len(rows) == 1 + 2
