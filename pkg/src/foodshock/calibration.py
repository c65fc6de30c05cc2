"""Model calibration: every free parameter is derived from the tables.

Produces per-product trade share matrices, allocation shares (production,
export, food, else), input splits across processes, linear process
coefficients (alpha for input-converting processes, beta for pure sources),
and the initial state.  The result is a :class:`CalibratedModel` that the
engine consumes unchanged.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from foodshock.tables import (
    BalancingTerms,
    Registry,
    SupplyUseTables,
    TableSchemaError,
    compute_balancing,
)

DEFAULT_TAU = 10

ETA_MODES = ("unified", "verbatim")


class ModelInvariantError(AssertionError):
    """A calibrated model violates one of its structural invariants."""


@dataclass
class TradeLayer:
    """Trade shares for one product: entry (c, d) is the share of country d's
    exports of the product that go to country c.  Columns sum to 1 or 0."""

    product: str
    shares: sparse.csr_matrix  # (C, C)


@dataclass
class AllocationShares:
    """Fractions of availability allocated per (country, product)."""

    eta_prod: np.ndarray  # (C, P)
    eta_exp: np.ndarray
    eta_food: np.ndarray
    eta_else: np.ndarray

    def closure(self) -> np.ndarray:
        return self.eta_prod + self.eta_exp + self.eta_food + self.eta_else


@dataclass
class InputSplits:
    """Sparse nu fractions: how a country's production inputs of a product
    are split among its processes.  COO-style parallel arrays."""

    registry: Registry
    country: np.ndarray  # int32
    product: np.ndarray
    process: np.ndarray
    nu: np.ndarray       # float64

    def split_of(self, country: str, product: str) -> dict[str, float]:
        r = self.registry
        mask = ((self.country == r.country_index(country))
                & (self.product == r.product_index(product)))
        return {r.processes[k]: float(v)
                for k, v in zip(self.process[mask], self.nu[mask])}


@dataclass
class ProcessSpec:
    """One (country, process) production function in friendly form."""

    country: str
    process: str
    inputs: frozenset
    outputs: frozenset
    alpha: dict
    beta: dict


@dataclass
class ProcessSpecs:
    """All process coefficients as COO-style parallel arrays.

    alpha entries exist only for processes with a nonempty input set, beta
    entries only for input-free ones; `input_*` arrays enumerate the input
    sets themselves.
    """

    registry: Registry
    alpha_country: np.ndarray
    alpha_process: np.ndarray
    alpha_product: np.ndarray
    alpha_value: np.ndarray
    beta_country: np.ndarray
    beta_process: np.ndarray
    beta_product: np.ndarray
    beta_value: np.ndarray
    input_country: np.ndarray
    input_process: np.ndarray
    input_product: np.ndarray

    def spec_of(self, country: str, process: str) -> ProcessSpec:
        r = self.registry
        c = r.country_index(country)
        k = r.process_index(process)
        am = (self.alpha_country == c) & (self.alpha_process == k)
        bm = (self.beta_country == c) & (self.beta_process == k)
        im = (self.input_country == c) & (self.input_process == k)
        alpha = {r.products[i]: float(v)
                 for i, v in zip(self.alpha_product[am], self.alpha_value[am])}
        beta = {r.products[i]: float(v)
                for i, v in zip(self.beta_product[bm], self.beta_value[bm])}
        inputs = frozenset(r.products[i] for i in self.input_product[im])
        outputs = frozenset(alpha) | frozenset(beta)
        return ProcessSpec(country, process, inputs, outputs, alpha, beta)


@dataclass
class CalibrationDiagnostics:
    """Degenerate entities found during calibration; informational only."""

    zero_trade_columns: list = field(default_factory=list)  # (product, exporter)
    zero_share_cells: list = field(default_factory=list)    # (country, product)
    eta_closure_max_dev: float = 0.0
    # (country, product, |closure - 1|) for cells off by more than 1e-9
    eta_closure_cells: list = field(default_factory=list)


@dataclass
class CalibratedModel:
    registry: Registry
    trade_layers: list            # one TradeLayer per product, registry order
    shares: AllocationShares
    splits: InputSplits
    specs: ProcessSpecs
    initial_amounts: np.ndarray   # (C, P)
    initial_correction: np.ndarray  # (C, P)
    tau: int = DEFAULT_TAU
    eta_mode: str = "unified"
    diagnostics: CalibrationDiagnostics | None = None

    def layer(self, product: str) -> TradeLayer:
        return self.trade_layers[self.registry.product_index(product)]

    def trade_share(self, product: str, to_country: str, from_country: str) -> float:
        r = self.registry
        return float(self.layer(product).shares[
            r.country_index(to_country), r.country_index(from_country)])

    def eta_of(self, country: str, product: str) -> tuple[float, float, float, float]:
        r = self.registry
        c, i = r.country_index(country), r.product_index(product)
        s = self.shares
        return (float(s.eta_prod[c, i]), float(s.eta_exp[c, i]),
                float(s.eta_food[c, i]), float(s.eta_else[c, i]))


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------

def derive_trade_layers(tables: SupplyUseTables) -> list:
    """Per-product trade shares from cross-border use and positive demand.

    For exporter d with positive foreign off-take of product i, entry (c, d)
    is c's share of that off-take; exporters without foreign off-take get an
    all-zero column.
    """
    r = tables.registry
    C, P = r.n_countries, r.n_products
    flows = np.zeros((P, C, C))

    u = tables.use
    cross = u.origin != u.user
    np.add.at(flows, (u.product[cross], u.user[cross], u.origin[cross]),
              u.amount[cross])
    y = tables.demand
    pos = (y.amount > 0) & (y.origin != y.country)
    np.add.at(flows, (y.product[pos], y.country[pos], y.origin[pos]),
              y.amount[pos])

    offtake = flows.sum(axis=1)  # (P, C): total foreign off-take per exporter
    shares = np.divide(flows, offtake[:, None, :],
                       out=np.zeros_like(flows), where=offtake[:, None, :] > 0)
    return [TradeLayer(r.products[i], sparse.csr_matrix(shares[i]))
            for i in range(P)]


def _accumulate(shape, idx, values) -> np.ndarray:
    out = np.zeros(shape)
    np.add.at(out, idx, values)
    return out


def derive_allocation_shares(tables: SupplyUseTables, balancing: BalancingTerms,
                             mode: str = "unified") -> AllocationShares:
    """Allocation shares per (country, product).

    Numerators: prod = inputs used by the country's processes (any origin);
    food = food demand satisfied in the country (any origin); exp = the
    country's own product used abroad; else = non-food demand satisfied in
    the country plus the positive balancing residual.

    mode "unified" divides all four by the sum of the numerators, so closure
    is exact.  mode "verbatim" divides prod by the inflow-side total
    (inputs + demand into c + B+) and the other three by the outflow-side
    total (c's product used anywhere + B+); with real tables the two
    denominators differ and the four shares need not sum to 1, which is why
    unified is the default.
    """
    if mode not in ETA_MODES:
        raise ValueError(f"unknown eta mode {mode!r}")
    r = tables.registry
    C, P = r.n_countries, r.n_products
    u, y = tables.use, tables.demand
    food_purpose = r.purpose_index("food")
    ypos = y.amount > 0

    num_prod = _accumulate((C, P), (u.user, u.product), u.amount)
    food_mask = ypos & (y.purpose == food_purpose)
    num_food = _accumulate((C, P), (y.country[food_mask], y.product[food_mask]),
                           y.amount[food_mask])
    ucross = u.origin != u.user
    ycross = ypos & (y.origin != y.country)
    num_exp = (_accumulate((C, P), (u.origin[ucross], u.product[ucross]),
                           u.amount[ucross])
               + _accumulate((C, P), (y.origin[ycross], y.product[ycross]),
                             y.amount[ycross]))
    nonfood = ypos & (y.purpose != food_purpose)
    num_else = (_accumulate((C, P), (y.country[nonfood], y.product[nonfood]),
                            y.amount[nonfood])
                + balancing.bplus)

    if mode == "unified":
        denom = num_prod + num_food + num_exp + num_else
        den_prod = den_rest = denom
    else:
        # inflow side: everything of product i arriving in c, plus B+
        inflow = (num_prod
                  + _accumulate((C, P), (y.country[ypos], y.product[ypos]),
                                y.amount[ypos])
                  + balancing.bplus)
        # outflow side: c's own product used anywhere (incl. domestically)
        outflow = (_accumulate((C, P), (u.origin, u.product), u.amount)
                   + _accumulate((C, P), (y.origin[ypos], y.product[ypos]),
                                 y.amount[ypos])
                   + balancing.bplus)
        den_prod, den_rest = inflow, outflow

    def ratio(num, den):
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    return AllocationShares(
        eta_prod=ratio(num_prod, den_prod),
        eta_exp=ratio(num_exp, den_rest),
        eta_food=ratio(num_food, den_rest),
        eta_else=ratio(num_else, den_rest),
    )


def derive_input_splits(tables: SupplyUseTables) -> InputSplits:
    """nu fractions: share of country c's use of product i going to process k."""
    r = tables.registry
    u = tables.use
    if len(u) == 0:
        empty = np.array([], dtype=np.int32)
        return InputSplits(r, empty, empty.copy(), empty.copy(), np.array([]))
    keys = np.stack([u.user, u.product, u.process], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    sums = np.zeros(len(uniq))
    np.add.at(sums, inv, u.amount)

    totals = _accumulate((r.n_countries, r.n_products), (u.user, u.product), u.amount)
    keep = sums > 0
    uniq = uniq[keep]
    nu = sums[keep] / totals[uniq[:, 0], uniq[:, 1]]
    return InputSplits(r, uniq[:, 0].astype(np.int32), uniq[:, 1].astype(np.int32),
                       uniq[:, 2].astype(np.int32), nu)


def derive_process_specs(tables: SupplyUseTables) -> ProcessSpecs:
    """Linear coefficients per (country, process): converting processes get
    alpha = supply / total input amount, input-free ones get beta = supply."""
    r = tables.registry
    C, K = r.n_countries, r.n_processes
    s, u = tables.supply, tables.use

    # input sets: products with positive use into (c, k)
    upos = u.amount > 0
    if upos.any():
        ikeys = np.stack([u.user[upos], u.process[upos], u.product[upos]], axis=1)
        ikeys = np.unique(ikeys, axis=0)
    else:
        ikeys = np.empty((0, 3), dtype=np.int64)
    total_input = _accumulate((C, K), (u.user, u.process), u.amount)
    has_inputs = np.zeros((C, K), dtype=bool)
    if len(ikeys):
        has_inputs[ikeys[:, 0], ikeys[:, 1]] = True

    spos = s.amount > 0
    sc, sk, si, sa = s.country[spos], s.process[spos], s.product[spos], s.amount[spos]
    conv = has_inputs[sc, sk]
    denom = total_input[sc[conv], sk[conv]]
    # membership in the input set requires positive use, so the pooled input
    # amount of a converting process cannot be zero
    assert np.all(denom > 0), "converting process with zero pooled input"
    alpha_value = sa[conv] / denom

    return ProcessSpecs(
        registry=r,
        alpha_country=sc[conv].astype(np.int32),
        alpha_process=sk[conv].astype(np.int32),
        alpha_product=si[conv].astype(np.int32),
        alpha_value=alpha_value,
        beta_country=sc[~conv].astype(np.int32),
        beta_process=sk[~conv].astype(np.int32),
        beta_product=si[~conv].astype(np.int32),
        beta_value=sa[~conv].astype(np.float64),
        input_country=ikeys[:, 0].astype(np.int32),
        input_process=ikeys[:, 1].astype(np.int32),
        input_product=ikeys[:, 2].astype(np.int32),
    )


def derive_initial_state(tables: SupplyUseTables,
                         balancing: BalancingTerms) -> tuple[np.ndarray, np.ndarray]:
    """Initial availability x(0) per origin (country, product), plus the
    first-pass correction from stock drawdowns and negative balancing."""
    r = tables.registry
    C, P = r.n_countries, r.n_products
    u, y = tables.use, tables.demand
    x0 = _accumulate((C, P), (u.origin, u.product), u.amount)
    ypos = y.amount > 0
    np.add.at(x0, (y.origin[ypos], y.product[ypos]), y.amount[ypos])

    stock = r.purpose_index("stock_addition")
    yneg = (y.amount < 0) & (y.purpose == stock)
    correction = _accumulate((C, P), (y.country[yneg], y.product[yneg]),
                             -y.amount[yneg]) - balancing.bminus
    return x0, correction


def calibrate(tables: SupplyUseTables, tau: int = DEFAULT_TAU,
              eta_mode: str = "unified") -> CalibratedModel:
    """Run the full calibration pipeline and collect diagnostics."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    balancing = compute_balancing(tables)
    layers = derive_trade_layers(tables)
    shares = derive_allocation_shares(tables, balancing, mode=eta_mode)
    splits = derive_input_splits(tables)
    specs = derive_process_specs(tables)
    x0, correction = derive_initial_state(tables, balancing)

    r = tables.registry
    diag = CalibrationDiagnostics()
    for i, layer in enumerate(layers):
        colsum = np.asarray(layer.shares.sum(axis=0)).ravel()
        dead = (colsum == 0) & (x0[:, i] > 0)
        for d in np.flatnonzero(dead):
            diag.zero_trade_columns.append((layer.product, r.countries[d]))
    # a share cell is worth flagging when the tables reference it at all but
    # its allocation denominator is zero (availability there would just sink)
    referenced = np.zeros((r.n_countries, r.n_products), dtype=bool)
    referenced[tables.supply.country, tables.supply.product] = True
    referenced[tables.use.user, tables.use.product] = True
    referenced[tables.use.origin, tables.use.product] = True
    referenced[tables.demand.country, tables.demand.product] = True
    referenced[tables.demand.origin, tables.demand.product] = True
    closure = shares.closure()
    zero_cells = closure == 0
    for c, i in zip(*np.nonzero(zero_cells & referenced)):
        diag.zero_share_cells.append((r.countries[c], r.products[i]))
    defined = ~zero_cells
    if defined.any():
        deviation = np.abs(closure - 1.0)
        diag.eta_closure_max_dev = float(deviation[defined].max())
        for c, i in zip(*np.nonzero(defined & (deviation > 1e-9))):
            diag.eta_closure_cells.append(
                (r.countries[c], r.products[i], float(deviation[c, i])))

    return CalibratedModel(r, layers, shares, splits, specs, x0, correction,
                           tau=tau, eta_mode=eta_mode, diagnostics=diag)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_model(model: CalibratedModel, rtol: float = 1e-9) -> None:
    """Check every structural invariant; raise ModelInvariantError on breach."""
    r = model.registry
    C, P = r.n_countries, r.n_products
    if len(model.trade_layers) != P:
        raise ModelInvariantError("one trade layer per product required")
    for layer in model.trade_layers:
        m = layer.shares
        if m.shape != (C, C):
            raise ModelInvariantError(f"layer {layer.product}: bad shape {m.shape}")
        if np.abs(m.diagonal()).max(initial=0.0) != 0.0:
            raise ModelInvariantError(f"layer {layer.product}: nonzero diagonal")
        data = m.data
        if data.size and (data.min() < 0 or data.max() > 1 + rtol):
            raise ModelInvariantError(f"layer {layer.product}: share outside [0, 1]")
        colsum = np.asarray(m.sum(axis=0)).ravel()
        bad = (colsum > 0) & (np.abs(colsum - 1.0) > rtol)
        if bad.any():
            d = int(np.argmax(bad))
            raise ModelInvariantError(
                f"layer {layer.product}: column {r.countries[d]} sums to {colsum[d]}"
            )
    s = model.shares
    for name, arr in [("prod", s.eta_prod), ("exp", s.eta_exp),
                      ("food", s.eta_food), ("else", s.eta_else)]:
        if arr.shape != (C, P):
            raise ModelInvariantError(f"eta_{name}: bad shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() > 1 + rtol):
            raise ModelInvariantError(f"eta_{name}: value outside [0, 1]")
    closure = s.closure()
    defined = closure != 0
    if model.eta_mode == "unified" and defined.any():
        if np.abs(closure[defined] - 1.0).max() > 1e-12:
            raise ModelInvariantError("eta closure violated")

    nu_sum = np.zeros((C, P))
    np.add.at(nu_sum, (model.splits.country, model.splits.product), model.splits.nu)
    used = np.zeros((C, P), dtype=bool)
    used[model.splits.country, model.splits.product] = True
    if used.any() and np.abs(nu_sum[used] - 1.0).max() > 1e-12:
        raise ModelInvariantError("nu closure violated")

    sp = model.specs
    alpha_ck = set(zip(sp.alpha_country.tolist(), sp.alpha_process.tolist()))
    beta_ck = set(zip(sp.beta_country.tolist(), sp.beta_process.tolist()))
    overlap = alpha_ck & beta_ck
    if overlap:
        c, k = next(iter(overlap))
        raise ModelInvariantError(
            f"process {r.processes[k]} in {r.countries[c]} has both alpha and beta"
        )
    if sp.alpha_value.size and sp.alpha_value.min() < 0:
        raise ModelInvariantError("negative alpha")
    if sp.beta_value.size and sp.beta_value.min() < 0:
        raise ModelInvariantError("negative beta")

    if model.initial_amounts.min(initial=0.0) < 0:
        raise ModelInvariantError("negative initial amount")
    if model.initial_correction.min(initial=0.0) < 0:
        raise ModelInvariantError("negative initial correction")
    if model.tau < 0:
        raise ModelInvariantError("negative horizon")


# ---------------------------------------------------------------------------
# Serialization (model.json)
# ---------------------------------------------------------------------------
# Layout: a single JSON object with fields
#   format: "foodshock-model/1"
#   tau, eta_mode
#   registry: {countries, products, processes, purposes, regions, names}
#   trade_layers: [{product, to, from, share}]      (COO triplets, int indices)
#   eta: {prod, exp, food, else}                    (dense C x P row-major)
#   nu: {country, product, process, value}          (COO)
#   alpha, beta: {country, process, product, value} (COO)
#   process_inputs: {country, process, product}     (COO membership)
#   initial_amounts, initial_correction             (dense C x P)
# Integer fields index into the registry lists. Floats are written with
# Python's shortest round-trip repr, so values survive a save/load cycle
# bit for bit.

FORMAT_TAG = "foodshock-model/1"


def model_to_dict(model: CalibratedModel) -> dict:
    r = model.registry
    layers = []
    for layer in model.trade_layers:
        coo = layer.shares.tocoo()
        order = np.lexsort((coo.col, coo.row))
        layers.append({
            "product": layer.product,
            "to": coo.row[order].tolist(),
            "from": coo.col[order].tolist(),
            "share": coo.data[order].tolist(),
        })
    sp = model.specs
    return {
        "format": FORMAT_TAG,
        "tau": int(model.tau),
        "eta_mode": model.eta_mode,
        "registry": {
            "countries": list(r.countries),
            "products": list(r.products),
            "processes": list(r.processes),
            "purposes": list(r.purposes),
            "regions": dict(sorted(r.regions.items())),
            "names": dict(sorted(r.names.items())),
        },
        "trade_layers": layers,
        "eta": {
            "prod": model.shares.eta_prod.tolist(),
            "exp": model.shares.eta_exp.tolist(),
            "food": model.shares.eta_food.tolist(),
            "else": model.shares.eta_else.tolist(),
        },
        "nu": {
            "country": model.splits.country.tolist(),
            "product": model.splits.product.tolist(),
            "process": model.splits.process.tolist(),
            "value": model.splits.nu.tolist(),
        },
        "alpha": {
            "country": sp.alpha_country.tolist(),
            "process": sp.alpha_process.tolist(),
            "product": sp.alpha_product.tolist(),
            "value": sp.alpha_value.tolist(),
        },
        "beta": {
            "country": sp.beta_country.tolist(),
            "process": sp.beta_process.tolist(),
            "product": sp.beta_product.tolist(),
            "value": sp.beta_value.tolist(),
        },
        "process_inputs": {
            "country": sp.input_country.tolist(),
            "process": sp.input_process.tolist(),
            "product": sp.input_product.tolist(),
        },
        "initial_amounts": model.initial_amounts.tolist(),
        "initial_correction": model.initial_correction.tolist(),
    }


def model_from_dict(doc: dict) -> CalibratedModel:
    if doc.get("format") != FORMAT_TAG:
        raise TableSchemaError(
            f"not a model file (format={doc.get('format')!r})")
    reg = doc["registry"]
    r = Registry(tuple(reg["countries"]), tuple(reg["products"]),
                 tuple(reg["processes"]), tuple(reg["purposes"]),
                 dict(reg["regions"]), dict(reg["names"]))
    C = r.n_countries
    layers = []
    for entry in doc["trade_layers"]:
        mat = sparse.csr_matrix(
            (np.asarray(entry["share"], dtype=np.float64),
             (np.asarray(entry["to"], dtype=np.int32),
              np.asarray(entry["from"], dtype=np.int32))),
            shape=(C, C))
        layers.append(TradeLayer(entry["product"], mat))
    eta = doc["eta"]
    shares = AllocationShares(*(np.asarray(eta[k], dtype=np.float64)
                                for k in ("prod", "exp", "food", "else")))
    nu = doc["nu"]
    splits = InputSplits(
        r,
        np.asarray(nu["country"], dtype=np.int32),
        np.asarray(nu["product"], dtype=np.int32),
        np.asarray(nu["process"], dtype=np.int32),
        np.asarray(nu["value"], dtype=np.float64),
    )
    a, b, pi = doc["alpha"], doc["beta"], doc["process_inputs"]
    specs = ProcessSpecs(
        r,
        np.asarray(a["country"], dtype=np.int32),
        np.asarray(a["process"], dtype=np.int32),
        np.asarray(a["product"], dtype=np.int32),
        np.asarray(a["value"], dtype=np.float64),
        np.asarray(b["country"], dtype=np.int32),
        np.asarray(b["process"], dtype=np.int32),
        np.asarray(b["product"], dtype=np.int32),
        np.asarray(b["value"], dtype=np.float64),
        np.asarray(pi["country"], dtype=np.int32),
        np.asarray(pi["process"], dtype=np.int32),
        np.asarray(pi["product"], dtype=np.int32),
    )
    return CalibratedModel(
        r, layers, shares, splits, specs,
        np.asarray(doc["initial_amounts"], dtype=np.float64),
        np.asarray(doc["initial_correction"], dtype=np.float64),
        tau=int(doc["tau"]),
        eta_mode=doc["eta_mode"],
    )


def model_to_json(model: CalibratedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def save_model(model: CalibratedModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> CalibratedModel:
    with open(path, encoding="utf-8") as handle:
        return model_from_dict(json.load(handle))


def model_fingerprint(model: CalibratedModel) -> str:
    """Stable content hash of a model; equal models hash equal."""
    return hashlib.sha256(model_to_json(model).encode()).hexdigest()
