import numpy as np
import pytest

from foodshock.calibration import (
    ModelInvariantError,
    calibrate,
    derive_allocation_shares,
    derive_initial_state,
    derive_input_splits,
    derive_process_specs,
    derive_trade_layers,
    load_model,
    model_fingerprint,
    model_to_json,
    save_model,
    validate_model,
)
from foodshock.tables import (
    DemandTable,
    Registry,
    SupplyTable,
    SupplyUseTables,
    UseTable,
    compute_balancing,
    generate_synthetic_world,
)


def registry_abc():
    return Registry(
        countries=("A", "B", "C"),
        products=("m", "pig", "apple"),
        processes=("PH", "poultry", "orchard"),
    )


def world(registry, supply=(), use=(), demand=()):
    return SupplyUseTables(
        registry,
        SupplyTable.from_rows(registry, supply),
        UseTable.from_rows(registry, use),
        DemandTable.from_rows(registry, demand),
    )


# ---------------------------------------------------------------------------
# Trade layers
# ---------------------------------------------------------------------------

def test_trade_shares_split_between_use_and_demand():
    r = registry_abc()
    tables = world(
        r,
        use=[("A", "m", "B", "PH", 30.0)],
        demand=[("A", "m", "C", "food", 10.0)],
    )
    layers = derive_trade_layers(tables)
    t = layers[r.product_index("m")].shares.toarray()
    a, b, c = (r.country_index(x) for x in "ABC")
    assert t[b, a] == pytest.approx(0.75)
    assert t[c, a] == pytest.approx(0.25)
    assert t.sum() == pytest.approx(1.0)


def test_trade_single_buyer_gets_share_one():
    r = registry_abc()
    tables = world(r, use=[("A", "m", "B", "PH", 12.0)])
    t = derive_trade_layers(tables)[r.product_index("m")].shares.toarray()
    assert t[r.country_index("B"), r.country_index("A")] == 1.0
    assert t.sum() == 1.0


def test_trade_no_foreign_offtake_zero_column():
    r = registry_abc()
    # domestic flows only: m never leaves A
    tables = world(
        r,
        supply=[("A", "PH", "m", 5.0)],
        use=[("A", "m", "A", "PH", 5.0)],
    )
    t = derive_trade_layers(tables)[r.product_index("m")].shares.toarray()
    assert np.all(t[:, r.country_index("A")] == 0.0)


def test_trade_diagonal_zero_even_with_domestic_demand():
    r = registry_abc()
    tables = world(r, demand=[("A", "m", "A", "food", 7.0),
                              ("A", "m", "B", "food", 3.0)])
    t = derive_trade_layers(tables)[r.product_index("m")].shares.toarray()
    assert t[r.country_index("A"), r.country_index("A")] == 0.0
    assert t[r.country_index("B"), r.country_index("A")] == 1.0


# ---------------------------------------------------------------------------
# Allocation shares
# ---------------------------------------------------------------------------

def test_shares_unified_from_engineered_numerators():
    # for (A, m): prod 30, food 20, exp 40 (25 use + 15 demand), else 10
    r = registry_abc()
    tables = world(
        r,
        supply=[("A", "PH", "m", 40.0)],  # keeps B+ at zero for (A, m)
        use=[
            ("B", "m", "A", "PH", 30.0),
            ("A", "m", "B", "PH", 25.0),
        ],
        demand=[
            ("B", "m", "A", "food", 20.0),
            ("A", "m", "B", "food", 15.0),
            ("B", "m", "A", "other", 10.0),
        ],
    )
    shares = derive_allocation_shares(tables, compute_balancing(tables))
    a, m = r.country_index("A"), r.product_index("m")
    assert shares.eta_prod[a, m] == pytest.approx(0.3)
    assert shares.eta_food[a, m] == pytest.approx(0.2)
    assert shares.eta_exp[a, m] == pytest.approx(0.4)
    assert shares.eta_else[a, m] == pytest.approx(0.1)
    assert shares.closure()[a, m] == pytest.approx(1.0, abs=1e-15)


def test_shares_only_food_gives_one():
    r = registry_abc()
    tables = world(r, demand=[("B", "m", "A", "food", 9.0)])
    shares = derive_allocation_shares(tables, compute_balancing(tables))
    a, m = r.country_index("A"), r.product_index("m")
    assert shares.eta_food[a, m] == 1.0
    assert shares.eta_prod[a, m] == shares.eta_exp[a, m] == shares.eta_else[a, m] == 0.0


def test_shares_zero_availability_all_zero_with_diagnostic():
    r = registry_abc()
    # the only reference to (A, m) is a stock drawdown, so every numerator
    # and the balancing residual are zero
    tables = world(r, demand=[("A", "m", "A", "stock_addition", -5.0)])
    model = calibrate(tables)
    a, m = r.country_index("A"), r.product_index("m")
    assert model.shares.closure()[a, m] == 0.0
    assert ("A", "m") in model.diagnostics.zero_share_cells


def test_shares_balancing_surplus_goes_to_else():
    r = registry_abc()
    tables = world(r, supply=[("A", "orchard", "apple", 100.0)])
    shares = derive_allocation_shares(tables, compute_balancing(tables))
    a, i = r.country_index("A"), r.product_index("apple")
    assert shares.eta_else[a, i] == 1.0


def test_shares_verbatim_mode_can_break_closure():
    # D imports 20 of m as input and exports 50 of its own m; the two
    # verbatim denominators normalize different totals, so prod and exp both
    # come out as 1
    r = Registry(countries=("D", "E"), products=("m", "pig"),
                 processes=("k1", "k2"))
    tables = world(
        r,
        supply=[("D", "k1", "m", 50.0), ("E", "k2", "m", 20.0)],
        use=[("E", "m", "D", "k1", 20.0), ("D", "m", "E", "k1", 50.0)],
    )
    balancing = compute_balancing(tables)
    d, m = r.country_index("D"), r.product_index("m")

    unified = derive_allocation_shares(tables, balancing, mode="unified")
    assert unified.eta_prod[d, m] == pytest.approx(20 / 70)
    assert unified.eta_exp[d, m] == pytest.approx(50 / 70)
    assert unified.closure()[d, m] == pytest.approx(1.0, abs=1e-15)

    verbatim = derive_allocation_shares(tables, balancing, mode="verbatim")
    assert verbatim.eta_prod[d, m] == pytest.approx(1.0)
    assert verbatim.eta_exp[d, m] == pytest.approx(1.0)
    assert verbatim.closure()[d, m] == pytest.approx(2.0)

    model = calibrate(tables, eta_mode="verbatim")
    assert model.diagnostics.eta_closure_max_dev == pytest.approx(1.0)


def test_shares_unified_closure_random_worlds():
    for seed in range(8):
        w = generate_synthetic_world(6, 5, 4, 0.5, seed=seed)
        shares = derive_allocation_shares(w, compute_balancing(w))
        closure = shares.closure()
        defined = closure != 0
        assert np.abs(closure[defined] - 1.0).max() <= 1e-12


def test_shares_rejects_unknown_mode():
    r = registry_abc()
    tables = world(r)
    with pytest.raises(ValueError):
        derive_allocation_shares(tables, compute_balancing(tables), mode="fancy")


# ---------------------------------------------------------------------------
# Input splits
# ---------------------------------------------------------------------------

def test_input_splits_proportional():
    r = registry_abc()
    tables = world(r, use=[
        ("A", "m", "C", "PH", 40.0),
        ("B", "m", "C", "poultry", 10.0),
    ])
    splits = derive_input_splits(tables)
    got = splits.split_of("C", "m")
    assert got == {"PH": pytest.approx(0.8), "poultry": pytest.approx(0.2)}


def test_input_splits_single_process():
    r = registry_abc()
    tables = world(r, use=[("A", "m", "C", "PH", 3.0)])
    assert derive_input_splits(tables).split_of("C", "m") == {"PH": 1.0}


def test_input_splits_unused_product_empty():
    r = registry_abc()
    tables = world(r, use=[("A", "m", "C", "PH", 3.0)])
    assert derive_input_splits(tables).split_of("C", "pig") == {}


def test_input_splits_merge_origins():
    # same (user, product, process) from two origins collapses to one entry
    r = registry_abc()
    tables = world(r, use=[
        ("A", "m", "C", "PH", 30.0),
        ("B", "m", "C", "PH", 10.0),
        ("A", "m", "C", "poultry", 60.0),
    ])
    got = derive_input_splits(tables).split_of("C", "m")
    assert got == {"PH": pytest.approx(0.4), "poultry": pytest.approx(0.6)}


# ---------------------------------------------------------------------------
# Process specs
# ---------------------------------------------------------------------------

def test_process_alpha_from_pooled_inputs():
    r = registry_abc()
    tables = world(
        r,
        supply=[("B", "PH", "pig", 20.0)],
        use=[("A", "m", "B", "PH", 30.0), ("B", "apple", "B", "PH", 10.0)],
    )
    spec = derive_process_specs(tables).spec_of("B", "PH")
    assert spec.alpha == {"pig": pytest.approx(0.5)}
    assert spec.beta == {}
    assert spec.inputs == frozenset({"m", "apple"})
    assert spec.outputs == frozenset({"pig"})


def test_process_pure_source_beta():
    r = registry_abc()
    tables = world(r, supply=[("A", "orchard", "apple", 100.0)])
    spec = derive_process_specs(tables).spec_of("A", "orchard")
    assert spec.beta == {"apple": 100.0}
    assert spec.alpha == {}
    assert spec.inputs == frozenset()


def test_process_zero_supply_rows_inert():
    r = registry_abc()
    tables = world(r, supply=[("A", "orchard", "apple", 0.0)])
    spec = derive_process_specs(tables).spec_of("A", "orchard")
    assert spec.outputs == frozenset()
    assert spec.alpha == {} and spec.beta == {}


def test_process_zero_amount_use_does_not_create_input():
    r = registry_abc()
    tables = world(
        r,
        supply=[("B", "PH", "pig", 20.0)],
        use=[("A", "m", "B", "PH", 0.0)],
    )
    spec = derive_process_specs(tables).spec_of("B", "PH")
    assert spec.inputs == frozenset()
    assert spec.beta == {"pig": 20.0}


# ---------------------------------------------------------------------------
# Initial state
# ---------------------------------------------------------------------------

def test_initial_amounts_sum_use_and_demand():
    r = registry_abc()
    tables = world(
        r,
        use=[("A", "m", "B", "PH", 80.0)],
        demand=[("A", "m", "C", "food", 30.0)],
    )
    x0, correction = derive_initial_state(tables, compute_balancing(tables))
    a, m = r.country_index("A"), r.product_index("m")
    assert x0[a, m] == 110.0
    assert np.all(correction >= 0)


def test_initial_correction_from_stock_and_negative_balancing():
    r = registry_abc()
    tables = world(
        r,
        use=[("A", "m", "B", "PH", 10.0)],  # makes B(A, m) = -10
        demand=[("B", "m", "A", "stock_addition", -5.0)],
    )
    balancing = compute_balancing(tables)
    a, m = r.country_index("A"), r.product_index("m")
    assert balancing.bminus[a, m] == -10.0
    _, correction = derive_initial_state(tables, balancing)
    assert correction[a, m] == 15.0


def test_initial_state_empty_tables_zero():
    r = registry_abc()
    x0, correction = derive_initial_state(world(r), compute_balancing(world(r)))
    assert np.all(x0 == 0.0) and np.all(correction == 0.0)


def test_negative_balancing_purpose_not_in_correction():
    # only stock_addition drawdowns enter the correction, not balancing rows
    r = registry_abc()
    tables = world(r, demand=[("B", "m", "A", "balancing", -7.0)])
    _, correction = derive_initial_state(tables, compute_balancing(tables))
    a, m = r.country_index("A"), r.product_index("m")
    assert correction[a, m] == 0.0


# ---------------------------------------------------------------------------
# Full calibration, validation, serialization
# ---------------------------------------------------------------------------

def test_calibrate_validates_on_random_worlds():
    for seed in range(6):
        w = generate_synthetic_world(5, 6, 5, 0.4, seed=seed)
        model = calibrate(w)
        validate_model(model)


def test_calibrate_deterministic_bitwise():
    w = generate_synthetic_world(4, 4, 4, 0.6, seed=3)
    a = model_to_json(calibrate(w))
    b = model_to_json(calibrate(w))
    assert a == b


def test_model_json_round_trip(tmp_path):
    w = generate_synthetic_world(4, 5, 4, 0.5, seed=9)
    model = calibrate(w, tau=7)
    path = tmp_path / "model.json"
    save_model(model, path)
    again = load_model(path)
    assert model_to_json(again) == model_to_json(model)
    assert again.tau == 7
    assert model_fingerprint(again) == model_fingerprint(model)


def test_load_model_rejects_other_json(tmp_path):
    path = tmp_path / "notamodel.json"
    path.write_text('{"hello": 1}', encoding="utf-8")
    with pytest.raises(ValueError):
        load_model(path)


def test_validate_model_catches_tampering():
    w = generate_synthetic_world(4, 4, 4, 0.5, seed=5)
    model = calibrate(w)
    model.shares.eta_prod[0, 0] += 0.5
    with pytest.raises(ModelInvariantError):
        validate_model(model)


def test_validate_model_catches_bad_trade_column():
    w = generate_synthetic_world(4, 4, 4, 0.5, seed=6)
    model = calibrate(w)
    layer = model.trade_layers[0]
    dense = layer.shares.toarray()
    dense[0, 1] += 0.5  # breaks the column-sum rule for any traded column
    dense[1, 0] = 0.4   # and creates a 0.4 column if column 1 was empty
    from scipy import sparse as sp
    layer.shares = sp.csr_matrix(dense)
    with pytest.raises(ModelInvariantError):
        validate_model(model)


def test_calibrate_reports_stranded_exporters():
    r = registry_abc()
    # A has availability of m (domestic use) but no foreign off-take
    tables = world(
        r,
        supply=[("A", "PH", "m", 5.0)],
        use=[("A", "m", "A", "PH", 5.0)],
    )
    model = calibrate(tables)
    assert ("m", "A") in model.diagnostics.zero_trade_columns


def test_tau_must_be_nonnegative():
    w = generate_synthetic_world(3, 3, 3, 0.5, seed=1)
    with pytest.raises(ValueError):
        calibrate(w, tau=-1)
