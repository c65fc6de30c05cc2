"""Loss measures built on top of scenario runs.

The central quantity is the relative loss: the fractional reduction of a
cell's availability in a shocked run against the baseline, reported at the
final step unless asked otherwise.  Regional values aggregate amounts first
and divide once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from foodshock.calibration import CalibratedModel
from foodshock.engine import (
    ShockEngine,
    ShockSpec,
    Trajectory,
    resolve_targets,
    run_batch,
)


class TrajectoryMismatchError(ValueError):
    """Baseline and shocked trajectories came from different models."""


def _loss_ratio(base: np.ndarray, shocked: np.ndarray) -> np.ndarray:
    return np.divide(base - shocked, base, out=np.zeros_like(base),
                     where=base > 0)


def regional_amounts(registry, amounts: np.ndarray) -> np.ndarray:
    """Sum (C, P) amounts into (regions, P)."""
    out = np.zeros((registry.n_regions, amounts.shape[-1]))
    np.add.at(out, registry.region_index, amounts)
    return out


@dataclass
class LossReport:
    registry: "object"
    shock: ShockSpec | None
    t: int
    rl: np.ndarray                 # (C, P)
    rl_regional: np.ndarray        # (regions, P)
    zero_baseline: np.ndarray      # bool (C, P): cells where RL defaults to 0
    rl_series: np.ndarray | None = None  # (tau+1, C, P) when requested

    def rl_of(self, country: str, product: str) -> float:
        r = self.registry
        return float(self.rl[r.country_index(country), r.product_index(product)])

    def regional_of(self, region: str, product: str) -> float:
        r = self.registry
        return float(self.rl_regional[r.region_names.index(region),
                                      r.product_index(product)])

    def to_csv(self, path: str | Path, level: str = "country") -> None:
        r = self.registry
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            if level == "country" and self.rl_series is None:
                writer.writerow(["country", "product", "rl"])
                for c, country in enumerate(r.countries):
                    for i, product in enumerate(r.products):
                        writer.writerow([country, product,
                                         repr(float(self.rl[c, i]))])
            elif level == "country":
                writer.writerow(["step", "country", "product", "rl"])
                for t in range(self.rl_series.shape[0]):
                    for c, country in enumerate(r.countries):
                        for i, product in enumerate(r.products):
                            writer.writerow([t, country, product,
                                             repr(float(self.rl_series[t, c, i]))])
            elif level == "region":
                writer.writerow(["region", "product", "rl"])
                for g, region in enumerate(r.region_names):
                    for i, product in enumerate(r.products):
                        writer.writerow([region, product,
                                         repr(float(self.rl_regional[g, i]))])
            else:
                raise ValueError(f"unknown level {level!r}")


def relative_loss(baseline: Trajectory, shocked: Trajectory,
                  t: int | None = None, series: bool = False) -> LossReport:
    """Relative losses of the shocked run against the baseline.

    Cells with zero baseline get RL = 0 and are flagged in `zero_baseline`
    (nothing was available to lose).
    """
    if (baseline.model_hash is not None and shocked.model_hash is not None
            and baseline.model_hash != shocked.model_hash):
        raise TrajectoryMismatchError(
            "baseline and shocked trajectories come from different models")
    if baseline.x.shape != shocked.x.shape:
        raise TrajectoryMismatchError(
            f"trajectory shapes differ: {baseline.x.shape} vs {shocked.x.shape}")
    if t is None:
        t = baseline.x.shape[0] - 1
    if not 0 <= t < baseline.x.shape[0]:
        raise ValueError(f"step {t} outside recorded range")
    registry = baseline.registry
    base_t = baseline.x[t]
    shock_t = shocked.x[t]
    rl = _loss_ratio(base_t, shock_t)
    base_reg = regional_amounts(registry, base_t)
    shock_reg = regional_amounts(registry, shock_t)
    rl_regional = _loss_ratio(base_reg, shock_reg)
    rl_series = None
    if series:
        rl_series = _loss_ratio(baseline.x, shocked.x)
    return LossReport(registry, shocked.shock, t, rl, rl_regional,
                      zero_baseline=base_t == 0, rl_series=rl_series)


# ---------------------------------------------------------------------------
# Reexport shares
# ---------------------------------------------------------------------------

@dataclass
class ReexportShares:
    """First-pass split of availability into domestic output vs imports."""

    registry: "object"
    domestic: np.ndarray   # (C, P)
    imported: np.ndarray   # (C, P)
    undefined: np.ndarray  # bool (C, P): cells with no availability at all

    def of(self, country: str, product: str) -> tuple[float, float]:
        r = self.registry
        c, i = r.country_index(country), r.product_index(product)
        return float(self.domestic[c, i]), float(self.imported[c, i])


def reexport_shares(model: CalibratedModel,
                    engine: ShockEngine | None = None) -> ReexportShares:
    """Domestic-vs-import composition of each cell's first-pass availability.

    Shares are taken from the first production and trade pass of the
    baseline (the allocation fractions cancel, so this is also the
    composition of exports).  Cells with zero availability get (0, 0).
    """
    if engine is None:
        engine = ShockEngine(model)
    state = engine.baseline(lean=False).states[0]
    total = state.o + state.h
    domestic = np.divide(state.o, total, out=np.zeros_like(total),
                         where=total > 0)
    imported = np.divide(state.h, total, out=np.zeros_like(total),
                         where=total > 0)
    return ReexportShares(model.registry, domestic, imported,
                          undefined=total == 0)


# ---------------------------------------------------------------------------
# Exposure profiles and layer decomposition
# ---------------------------------------------------------------------------

def _batched_final_states(engine: ShockEngine, targets: list,
                          batch_size: int = 256) -> np.ndarray:
    """Final availability for a list of per-scenario target index arrays.

    Returns (n_scenarios, n) final x, computed in bounded-size batches
    through the shared batch kernel.
    """
    ops = engine.ops
    n_scen = len(targets)
    out = np.empty((n_scen, ops.n))
    for start in range(0, n_scen, batch_size):
        chunk = targets[start:start + batch_size]
        rows = np.concatenate(chunk) if chunk else np.array([], dtype=np.int64)
        cols = np.concatenate([np.full(len(cells), j, dtype=np.int64)
                               for j, cells in enumerate(chunk)]) \
            if chunk else np.array([], dtype=np.int64)
        final = run_batch(ops, rows, cols, len(chunk))
        out[start:start + len(chunk)] = final.T
    return out


def exposure_profile(model: CalibratedModel, country: str, product: str,
                     engine: ShockEngine | None = None,
                     batch_size: int = 256) -> np.ndarray:
    """RL of one observed (country, product) cell under every single-target
    shock; returns a (shock country, shock product) matrix."""
    if engine is None:
        engine = ShockEngine(model)
    r = model.registry
    cell = r.country_index(country) * r.n_products + r.product_index(product)
    base = engine.baseline().final().ravel()[cell]
    targets = [np.array([d * r.n_products + j], dtype=np.int64)
               for d in range(r.n_countries) for j in range(r.n_products)]
    finals = _batched_final_states(engine, targets, batch_size)
    shocked = finals[:, cell].reshape(r.n_countries, r.n_products)
    if base <= 0:
        return np.zeros_like(shocked)
    return (base - shocked) / base


def top_exposures(profile: np.ndarray, registry, limit: int = 10) -> list:
    """Largest entries of an exposure matrix as (country, product, rl)."""
    flat = profile.ravel()
    order = np.argsort(-flat, kind="stable")[:limit]
    out = []
    for idx in order:
        if flat[idx] <= 0:
            break
        d, j = divmod(int(idx), registry.n_products)
        out.append((registry.countries[d], registry.products[j],
                    float(flat[idx])))
    return out


@dataclass
class LayerDecomposition:
    """Regional losses split into cross-layer and within-layer channels.

    `cross[g, i]` is the loss of product i in region g after shocking the
    fixed input product in the shock country; `within[g, i]` is the loss of
    i after shocking i itself there.  The two coincide for the input product
    by construction.
    """

    registry: "object"
    shock_country: str
    input_product: str
    products: tuple
    cross: np.ndarray   # (regions, len(products))
    within: np.ndarray  # (regions, len(products))

    def pair_of(self, region: str, product: str) -> tuple[float, float]:
        g = self.registry.region_names.index(region)
        i = self.products.index(product)
        return float(self.cross[g, i]), float(self.within[g, i])


def decompose_layer_effects(model: CalibratedModel, shock_country: str,
                            input_product: str,
                            observed_products: tuple | None = None,
                            engine: ShockEngine | None = None) -> LayerDecomposition:
    if engine is None:
        engine = ShockEngine(model)
    r = model.registry
    if observed_products is None:
        observed_products = r.products
    observed_products = tuple(observed_products)

    specs = [ShockSpec.single(shock_country, input_product)]
    specs += [ShockSpec.single(shock_country, p) for p in observed_products]
    targets = [resolve_targets(r, s) for s in specs]
    finals = _batched_final_states(engine, targets)

    base = engine.baseline().final()
    base_reg = regional_amounts(r, base)
    C, P = r.n_countries, r.n_products
    cross_all = _loss_ratio(base_reg,
                            regional_amounts(r, finals[0].reshape(C, P)))

    cols = [r.product_index(p) for p in observed_products]
    cross = cross_all[:, cols]
    within = np.empty_like(cross)
    for j, p in enumerate(observed_products):
        reg = _loss_ratio(base_reg,
                          regional_amounts(r, finals[1 + j].reshape(C, P)))
        within[:, j] = reg[:, cols[j]]
    return LayerDecomposition(r, shock_country, input_product,
                              observed_products, cross, within)
