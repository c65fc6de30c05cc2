"""Iterated shock dynamics: production, trade, allocation.

The state lives on (country, product) cells, flattened to one vector with
index c * P + i.  Each pass applies two sparse operators and four elementwise
share multiplications:

    o(t) = prod_op @ p(t-1) + beta     (+ correction at t = 0, then shock zeroing)
    h(t) = trade_op @ e(t-1)
    x(t) = o(t) + h(t)
    p, e, k, r = eta_prod * x, eta_exp * x, eta_food * x, eta_else * x

The pass index runs t = 0 .. tau; p(-1), e(-1) are seeded by allocating the
calibrated initial amounts.  A shock zeroes the produced amount of its
targets in every pass.  Batches of scenarios run as dense column blocks
through the same operators, so a scenario's column is bit-identical no
matter how the batch is sliced.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from foodshock.calibration import CalibratedModel, model_fingerprint
from foodshock.tables import Registry, TableValidationError


@dataclass(frozen=True)
class ShockSpec:
    """Production shock: the listed (country, product) pairs produce nothing.

    An empty target set is the baseline.  `horizon` overrides the model's
    step budget when given.
    """

    targets: frozenset = frozenset()
    horizon: int | None = None

    @classmethod
    def single(cls, country: str, product: str,
               horizon: int | None = None) -> "ShockSpec":
        return cls(frozenset({(country, product)}), horizon)

    @classmethod
    def country_wide(cls, country: str, registry: Registry,
                     horizon: int | None = None) -> "ShockSpec":
        """Shock every product of one country at once."""
        return cls(frozenset((country, p) for p in registry.products), horizon)


@dataclass
class WorldState:
    """All per-cell quantities of one pass, shaped (countries, products)."""

    t: int
    x: np.ndarray
    o: np.ndarray
    h: np.ndarray
    p: np.ndarray
    e: np.ndarray
    k: np.ndarray
    r: np.ndarray


@dataclass
class Trajectory:
    """Recorded run: availability per pass, plus optional full states.

    `x` has shape (tau + 1, countries, products).  `stranded` sums, per pass,
    availability sitting on cells whose four shares are all zero (it cannot
    be allocated anywhere); `dropped_exports` sums export reserves of cells
    without any recorded foreign buyer, which leave the system at the trade
    step.
    """

    registry: Registry
    x: np.ndarray
    states: list | None = None
    stranded: np.ndarray | None = None
    dropped_exports: np.ndarray | None = None
    model_hash: str | None = None
    shock: "ShockSpec | None" = None

    @property
    def tau(self) -> int:
        return self.x.shape[0] - 1

    def final(self) -> np.ndarray:
        return self.x[-1]

    def series(self, country: str, product: str) -> np.ndarray:
        r = self.registry
        return self.x[:, r.country_index(country), r.product_index(product)]

    def to_csv(self, path: str | Path, full: bool = False) -> None:
        r = self.registry
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            if not full:
                writer.writerow(["step", "country", "product", "amount"])
                for t in range(self.x.shape[0]):
                    for c, country in enumerate(r.countries):
                        for i, product in enumerate(r.products):
                            writer.writerow([t, country, product,
                                             repr(float(self.x[t, c, i]))])
                return
            if self.states is None:
                raise ValueError("full export needs a trajectory with states")
            writer.writerow(["step", "country", "product",
                             "x", "o", "h", "p", "e", "k", "r"])
            for st in self.states:
                for c, country in enumerate(r.countries):
                    for i, product in enumerate(r.products):
                        writer.writerow(
                            [st.t, country, product]
                            + [repr(float(q[c, i]))
                               for q in (st.x, st.o, st.h, st.p, st.e, st.k, st.r)])


@dataclass
class EngineOps:
    """Model compiled to flat operators over n = countries * products cells."""

    registry: Registry
    n: int
    prod_op: sparse.csr_matrix   # (n, n) block-diagonal per country
    trade_op: sparse.csr_matrix  # (n, n) couples same product across countries
    beta: np.ndarray
    eta_prod: np.ndarray
    eta_exp: np.ndarray
    eta_food: np.ndarray
    eta_else: np.ndarray
    x0: np.ndarray
    xtilde: np.ndarray
    tau: int
    dead_exporters: np.ndarray = field(repr=False, default=None)  # bool (n,)
    unallocatable: np.ndarray = field(repr=False, default=None)   # bool (n,)


def compile_operators(model: CalibratedModel) -> EngineOps:
    r = model.registry
    C, P, K = r.n_countries, r.n_products, r.n_processes
    n = C * P
    sp = model.specs

    arows = sp.alpha_country.astype(np.int64) * P + sp.alpha_product
    acols = sp.alpha_country.astype(np.int64) * K + sp.alpha_process
    amat = sparse.csr_matrix((sp.alpha_value, (arows, acols)), shape=(n, C * K))
    nrows = model.splits.country.astype(np.int64) * K + model.splits.process
    ncols = model.splits.country.astype(np.int64) * P + model.splits.product
    numat = sparse.csr_matrix((model.splits.nu, (nrows, ncols)), shape=(C * K, n))
    prod_op = (amat @ numat).tocsr()
    prod_op.sum_duplicates()
    prod_op.sort_indices()

    beta = np.zeros(n)
    np.add.at(beta, sp.beta_country.astype(np.int64) * P + sp.beta_product,
              sp.beta_value)

    rows, cols, vals = [], [], []
    for i, layer in enumerate(model.trade_layers):
        coo = layer.shares.tocoo()
        rows.append(coo.row.astype(np.int64) * P + i)
        cols.append(coo.col.astype(np.int64) * P + i)
        vals.append(coo.data)
    trade_op = sparse.csr_matrix(
        (np.concatenate(vals) if vals else np.array([]),
         (np.concatenate(rows) if rows else np.array([], dtype=np.int64),
          np.concatenate(cols) if cols else np.array([], dtype=np.int64))),
        shape=(n, n))
    trade_op.sum_duplicates()
    trade_op.sort_indices()

    s = model.shares
    closure = (s.eta_prod + s.eta_exp + s.eta_food + s.eta_else).ravel()
    colsum = np.asarray(trade_op.sum(axis=0)).ravel()
    return EngineOps(
        registry=r,
        n=n,
        prod_op=prod_op,
        trade_op=trade_op,
        beta=beta,
        eta_prod=s.eta_prod.ravel().copy(),
        eta_exp=s.eta_exp.ravel().copy(),
        eta_food=s.eta_food.ravel().copy(),
        eta_else=s.eta_else.ravel().copy(),
        x0=model.initial_amounts.ravel().copy(),
        xtilde=model.initial_correction.ravel().copy(),
        tau=model.tau,
        dead_exporters=colsum == 0,
        unallocatable=closure == 0,
    )


def resolve_targets(registry: Registry, shock: ShockSpec | None) -> np.ndarray:
    """Flat cell indices of the shock targets, sorted for determinism."""
    if shock is None or not shock.targets:
        return np.array([], dtype=np.int64)
    cells = []
    for country, product in shock.targets:
        cells.append(registry.country_index(country) * registry.n_products
                     + registry.product_index(product))
    return np.array(sorted(cells), dtype=np.int64)


def run_batch(ops: EngineOps, target_rows: np.ndarray, target_cols: np.ndarray,
              n_scenarios: int, tau: int | None = None,
              record_history: bool = False) -> np.ndarray:
    """Run many scenarios as columns of one dense block.

    target_rows/target_cols are parallel arrays: scenario column
    target_cols[j] has cell target_rows[j] zeroed after production, every
    pass.  Returns final availability (n, n_scenarios), or the whole history
    (tau + 1, n, n_scenarios) when record_history is set.
    """
    if tau is None:
        tau = ops.tau
    x = np.repeat(ops.x0[:, None], n_scenarios, axis=1)
    p = ops.eta_prod[:, None] * x
    e = ops.eta_exp[:, None] * x
    history = np.empty((tau + 1, ops.n, n_scenarios)) if record_history else None
    for t in range(tau + 1):
        o = ops.prod_op @ p
        o += ops.beta[:, None]
        if t == 0:
            o += ops.xtilde[:, None]
        if target_rows.size:
            o[target_rows, target_cols] = 0.0
        x = o + (ops.trade_op @ e)
        if record_history:
            history[t] = x
        p = ops.eta_prod[:, None] * x
        e = ops.eta_exp[:, None] * x
    return history if record_history else x


# ---------------------------------------------------------------------------
# Single steps (inspection-friendly views of the same arithmetic)
# ---------------------------------------------------------------------------

def production_step(model: CalibratedModel, prev_inputs: np.ndarray,
                    shock: ShockSpec | None = None, t: int = 1,
                    ops: EngineOps | None = None) -> np.ndarray:
    """Produced amounts o(t) from input reserves p(t-1), shaped (C, P)."""
    if ops is None:
        ops = compile_operators(model)
    if np.any(prev_inputs < 0):
        raise ValueError("negative input reserve")
    o = ops.prod_op @ prev_inputs.ravel() + ops.beta
    if t == 0:
        o = o + ops.xtilde
    cells = resolve_targets(model.registry, shock)
    if cells.size:
        o[cells] = 0.0
    return o.reshape(prev_inputs.shape)


def trade_step(model: CalibratedModel, prev_exports: np.ndarray,
               ops: EngineOps | None = None) -> np.ndarray:
    """Imported amounts h(t) from export reserves e(t-1), shaped (C, P)."""
    if ops is None:
        ops = compile_operators(model)
    if np.any(prev_exports < 0):
        raise ValueError("negative export reserve")
    h = ops.trade_op @ prev_exports.ravel()
    return h.reshape(prev_exports.shape)


def allocation_step(model: CalibratedModel, produced: np.ndarray,
                    imported: np.ndarray, t: int = 0) -> WorldState:
    """Split availability x = o + h into the four reserves."""
    s = model.shares
    x = produced + imported
    return WorldState(
        t=t,
        x=x,
        o=produced,
        h=imported,
        p=s.eta_prod * x,
        e=s.eta_exp * x,
        k=s.eta_food * x,
        r=s.eta_else * x,
    )


# ---------------------------------------------------------------------------
# Full scenario runs
# ---------------------------------------------------------------------------

class ShockEngine:
    """Compiled model plus run methods; reusable across many scenarios."""

    def __init__(self, model: CalibratedModel):
        self.model = model
        self.ops = compile_operators(model)
        self.model_hash = model_fingerprint(model)
        self._baseline: Trajectory | None = None

    def run(self, shock: ShockSpec | None = None, lean: bool = True) -> Trajectory:
        ops = self.ops
        r = ops.registry
        C, P = r.n_countries, r.n_products
        tau = ops.tau
        if shock is not None and shock.horizon is not None:
            if shock.horizon < 0:
                raise TableValidationError("shock horizon must be >= 0")
            tau = shock.horizon
        cells = resolve_targets(r, shock)
        cols = np.zeros(cells.size, dtype=np.int64)
        hist = run_batch(ops, cells, cols, 1, tau=tau, record_history=True)
        xs = hist[:, :, 0]  # (tau+1, n)

        # bookkeeping for availability that leaves the system
        stranded = xs[:, ops.unallocatable].sum(axis=1)
        e_seed = ops.eta_exp * ops.x0
        dead = ops.dead_exporters
        dropped = np.empty(tau + 1)
        dropped[0] = e_seed[dead].sum()
        if tau > 0:
            dropped[1:] = (xs[:-1] * ops.eta_exp)[:, dead].sum(axis=1)

        traj = Trajectory(r, xs.reshape(tau + 1, C, P), None, stranded, dropped,
                          model_hash=self.model_hash, shock=shock)
        if lean:
            return traj

        # full mode: re-derive the per-pass quantities from the recorded x
        states = []
        p_prev = (ops.eta_prod * ops.x0)
        e_prev = e_seed
        for t in range(tau + 1):
            o = ops.prod_op @ p_prev + ops.beta
            if t == 0:
                o = o + ops.xtilde
            if cells.size:
                o[cells] = 0.0
            h = ops.trade_op @ e_prev
            xt = xs[t]
            states.append(WorldState(
                t=t,
                x=xt.reshape(C, P),
                o=o.reshape(C, P),
                h=h.reshape(C, P),
                p=(ops.eta_prod * xt).reshape(C, P),
                e=(ops.eta_exp * xt).reshape(C, P),
                k=(ops.eta_food * xt).reshape(C, P),
                r=(ops.eta_else * xt).reshape(C, P),
            ))
            p_prev = ops.eta_prod * xt
            e_prev = ops.eta_exp * xt
        traj.states = states
        return traj

    def baseline(self, lean: bool = True) -> Trajectory:
        if self._baseline is None or (not lean and self._baseline.states is None):
            self._baseline = self.run(None, lean=lean)
        return self._baseline


def run_scenario(model: CalibratedModel, shock: ShockSpec | None = None,
                 lean: bool = True) -> Trajectory:
    """One-shot convenience wrapper around :class:`ShockEngine`."""
    return ShockEngine(model).run(shock, lean=lean)
