"""Exhaustive single-cell shock sweeps with chunked, resumable storage.

A sweep runs one scenario per (shock country, shock product) pair and
records relative losses at the final step for every (country, product)
cell, plus region-aggregated losses.  Scenario chunks go through the batch
kernel as dense blocks and are written atomically (write to a temp file,
then rename), so a killed sweep resumes at the next missing chunk and the
output bytes do not depend on the worker count.  Timing lives in a separate
file because it is the only non-deterministic output.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from foodshock.analysis import _loss_ratio, regional_amounts
from foodshock.calibration import CalibratedModel
from foodshock.engine import EngineOps, ShockEngine, run_batch
from foodshock.tables import Registry, TableValidationError

FORMAT_TAG = "foodshock-sweep/1"
MANIFEST_NAME = "manifest.json"
TIMING_NAME = "timing.json"
MEMORY_LIMIT_BYTES = 1 << 30


class SweepManifestError(ValueError):
    """Sweep directory contents do not match the requested sweep."""


def _chunk_name(k: int) -> str:
    return f"chunk_{k:05d}.npy"


def _regional_name(k: int) -> str:
    return f"chunk_{k:05d}_regional.npy"


def _atomic_save(path: Path, arr: np.ndarray) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with open(tmp, "wb") as handle:
        np.save(handle, arr)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _axis_indices(codes, lookup, n: int, what: str) -> np.ndarray:
    """Registry indices of the requested codes, in registry order."""
    if codes is None:
        return np.arange(n, dtype=np.int64)
    idx = sorted({lookup(code) for code in codes})
    if not idx:
        raise TableValidationError(f"empty {what} selection for sweep")
    return np.array(idx, dtype=np.int64)


@dataclass
class _SweepPlan:
    ops: EngineOps
    registry: Registry
    base: np.ndarray          # (C, P) baseline final availability
    base_regional: np.ndarray
    scen_rows: np.ndarray     # flat target cell per scenario
    chunk_scenarios: int
    n_scenarios: int
    directory: Path | None = None

    @property
    def n_chunks(self) -> int:
        return -(-self.n_scenarios // self.chunk_scenarios)


def _compute_block(plan: _SweepPlan, k: int) -> tuple[np.ndarray, np.ndarray]:
    r = plan.registry
    C, P = r.n_countries, r.n_products
    start = k * plan.chunk_scenarios
    count = min(plan.chunk_scenarios, plan.n_scenarios - start)
    rows = plan.scen_rows[start:start + count]
    cols = np.arange(count, dtype=np.int64)
    finals = run_batch(plan.ops, rows, cols, count).T.reshape(count, C, P)
    rl = _loss_ratio(np.broadcast_to(plan.base, finals.shape), finals)
    regional = np.empty((count, r.n_regions, P))
    for s in range(count):
        regional[s] = _loss_ratio(plan.base_regional,
                                  regional_amounts(r, finals[s]))
    return rl, regional


def _compute_and_write(plan: _SweepPlan, k: int) -> float:
    started = time.perf_counter()
    rl, regional = _compute_block(plan, k)
    _atomic_save(plan.directory / _chunk_name(k), rl)
    _atomic_save(plan.directory / _regional_name(k), regional)
    return time.perf_counter() - started


_PLAN: _SweepPlan | None = None


def _worker(k: int) -> tuple[int, float]:
    return k, _compute_and_write(_PLAN, k)


@dataclass
class SweepResult:
    """Relative losses for every scenario of a sweep, memory- or disk-backed.

    Scenarios are ordered shock-country-major over the two shock axes, both
    in registry order.  `rl` blocks have shape (scenarios, C, P) and
    `rl_regional` (scenarios, regions, P), at the final step.
    """

    registry: Registry
    model_hash: str
    tau: int
    shock_countries: tuple
    shock_products: tuple
    chunk_scenarios: int
    directory: Path | None = None
    rl: np.ndarray | None = None
    rl_regional: np.ndarray | None = None
    timing: dict | None = None

    @property
    def n_scenarios(self) -> int:
        return len(self.shock_countries) * len(self.shock_products)

    @property
    def n_chunks(self) -> int:
        return -(-self.n_scenarios // self.chunk_scenarios)

    def scenario_index(self, shock_country: str, shock_product: str) -> int:
        try:
            d = self.shock_countries.index(shock_country)
            j = self.shock_products.index(shock_product)
        except ValueError:
            raise TableValidationError(
                f"scenario ({shock_country!r}, {shock_product!r}) "
                "is not part of this sweep") from None
        return d * len(self.shock_products) + j

    def scenario_codes(self, s: int) -> tuple:
        d, j = divmod(s, len(self.shock_products))
        return self.shock_countries[d], self.shock_products[j]

    def _block(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if self.rl is not None:
            sel = slice(k * self.chunk_scenarios, (k + 1) * self.chunk_scenarios)
            return self.rl[sel], self.rl_regional[sel]
        rl = np.load(self.directory / _chunk_name(k))
        regional = np.load(self.directory / _regional_name(k))
        return rl, regional

    def iter_blocks(self):
        """Yield (first scenario index, rl block, regional block) per chunk."""
        for k in range(self.n_chunks):
            rl, regional = self._block(k)
            yield k * self.chunk_scenarios, rl, regional

    def loss_of(self, shock_country: str, shock_product: str) -> np.ndarray:
        s = self.scenario_index(shock_country, shock_product)
        k, offset = divmod(s, self.chunk_scenarios)
        return self._block(k)[0][offset]

    def regional_of(self, shock_country: str, shock_product: str) -> np.ndarray:
        s = self.scenario_index(shock_country, shock_product)
        k, offset = divmod(s, self.chunk_scenarios)
        return self._block(k)[1][offset]

    def exposure_slice(self, country: str, product: str) -> np.ndarray:
        """RL of one observed cell across all scenarios, shaped (D, J)."""
        r = self.registry
        c = r.country_index(country)
        i = r.product_index(product)
        out = np.empty(self.n_scenarios)
        for start, rl, _ in self.iter_blocks():
            out[start:start + rl.shape[0]] = rl[:, c, i]
        return out.reshape(len(self.shock_countries), len(self.shock_products))


def full_sweep(model: CalibratedModel, shock_countries=None,
               shock_products=None, out_dir: str | Path | None = None,
               chunk_scenarios: int = 256, workers: int = 1) -> SweepResult:
    """Run one scenario per (shock country, shock product) pair.

    With `out_dir` the result is chunked onto disk and an interrupted sweep
    resumes there (existing chunks are never recomputed or rewritten);
    without it everything stays in memory, which is refused for sweeps
    beyond about a gigabyte.  `workers` forks that many processes over
    pending chunks; outputs are byte-identical for any worker count.
    """
    if chunk_scenarios < 1:
        raise ValueError("chunk_scenarios must be positive")
    if workers < 1:
        raise ValueError("workers must be positive")
    engine = ShockEngine(model)
    r = model.registry
    d_idx = _axis_indices(shock_countries, r.country_index, r.n_countries,
                          "shock country")
    j_idx = _axis_indices(shock_products, r.product_index, r.n_products,
                          "shock product")
    scen_rows = (np.repeat(d_idx, j_idx.size) * r.n_products
                 + np.tile(j_idx, d_idx.size))
    base = engine.baseline().final()
    plan = _SweepPlan(
        ops=engine.ops,
        registry=r,
        base=base,
        base_regional=regional_amounts(r, base),
        scen_rows=scen_rows,
        chunk_scenarios=chunk_scenarios,
        n_scenarios=scen_rows.size,
    )
    result = SweepResult(
        registry=r,
        model_hash=engine.model_hash,
        tau=model.tau,
        shock_countries=tuple(r.countries[d] for d in d_idx),
        shock_products=tuple(r.products[j] for j in j_idx),
        chunk_scenarios=chunk_scenarios,
    )

    if out_dir is None:
        footprint = plan.n_scenarios * r.n_countries * r.n_products * 8
        if footprint > MEMORY_LIMIT_BYTES:
            raise ValueError(
                f"in-memory sweep would need {footprint} bytes; "
                "pass out_dir to stream chunks to disk")
        started = time.perf_counter()
        rl = np.empty((plan.n_scenarios, r.n_countries, r.n_products))
        regional = np.empty((plan.n_scenarios, r.n_regions, r.n_products))
        for k in range(plan.n_chunks):
            block_rl, block_reg = _compute_block(plan, k)
            start = k * chunk_scenarios
            rl[start:start + block_rl.shape[0]] = block_rl
            regional[start:start + block_reg.shape[0]] = block_reg
        result.rl = rl
        result.rl_regional = regional
        result.timing = {"workers": 1,
                         "total_seconds": time.perf_counter() - started}
        return result

    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    plan.directory = directory
    manifest = _manifest_dict(result)
    manifest_path = directory / MANIFEST_NAME
    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text(encoding="utf-8"))
        if existing != manifest:
            raise SweepManifestError(
                f"{manifest_path} belongs to a different sweep; "
                "use a fresh directory")
    _atomic_write_text(manifest_path, _manifest_json(manifest))

    pending = [k for k in range(plan.n_chunks)
               if not ((directory / _chunk_name(k)).exists()
                       and (directory / _regional_name(k)).exists())]
    started = time.perf_counter()
    chunk_seconds: dict[str, float] = {}
    if workers > 1 and len(pending) > 1:
        global _PLAN
        _PLAN = plan
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(processes=min(workers, len(pending))) as pool:
                for k, seconds in pool.imap_unordered(_worker, pending):
                    chunk_seconds[_chunk_name(k)] = seconds
        finally:
            _PLAN = None
    else:
        for k in pending:
            chunk_seconds[_chunk_name(k)] = _compute_and_write(plan, k)
    result.timing = {
        "workers": workers,
        "total_seconds": time.perf_counter() - started,
        "computed_chunks": dict(sorted(chunk_seconds.items())),
        "skipped_chunks": plan.n_chunks - len(pending),
    }
    _atomic_write_text(directory / TIMING_NAME,
                       json.dumps(result.timing, indent=2) + "\n")
    result.directory = directory
    return result


def _manifest_dict(result: SweepResult) -> dict:
    r = result.registry
    return {
        "format": FORMAT_TAG,
        "model_hash": result.model_hash,
        "tau": result.tau,
        "chunk_scenarios": result.chunk_scenarios,
        "n_scenarios": result.n_scenarios,
        "n_chunks": result.n_chunks,
        "shock_countries": list(result.shock_countries),
        "shock_products": list(result.shock_products),
        "countries": list(r.countries),
        "products": list(r.products),
        "region_names": list(r.region_names),
        "regions": {c: r.regions[c] for c in sorted(r.regions)},
    }


def _manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n"


def load_sweep(directory: str | Path,
               registry: Registry | None = None) -> SweepResult:
    """Open a completed sweep directory written by full_sweep."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise SweepManifestError(f"no {MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != FORMAT_TAG:
        raise SweepManifestError(
            f"{manifest_path} is not a sweep manifest (format "
            f"{manifest.get('format')!r})")
    if registry is None:
        registry = Registry(
            countries=tuple(manifest["countries"]),
            products=tuple(manifest["products"]),
            processes=(),
            regions=dict(manifest["regions"]),
        )
    else:
        if (list(registry.countries) != manifest["countries"]
                or list(registry.products) != manifest["products"]):
            raise SweepManifestError(
                "registry does not match the sweep manifest")
    missing = [k for k in range(manifest["n_chunks"])
               if not ((directory / _chunk_name(k)).exists()
                       and (directory / _regional_name(k)).exists())]
    if missing:
        raise SweepManifestError(
            f"sweep in {directory} is incomplete ({len(missing)} of "
            f"{manifest['n_chunks']} chunks missing); rerun full_sweep "
            "with the same arguments to finish it")
    return SweepResult(
        registry=registry,
        model_hash=manifest["model_hash"],
        tau=manifest["tau"],
        shock_countries=tuple(manifest["shock_countries"]),
        shock_products=tuple(manifest["shock_products"]),
        chunk_scenarios=manifest["chunk_scenarios"],
        directory=directory,
    )


SWEEP_CSV_HEADER = ["shock_country", "shock_product", "country", "product",
                    "rl"]


def sweep_to_csv(result: SweepResult, path: str | Path,
                 nonzero_only: bool = False) -> None:
    """Flatten a sweep to CSV rows, one per (scenario, affected cell)."""
    r = result.registry
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SWEEP_CSV_HEADER)
        for start, rl, _ in result.iter_blocks():
            for offset in range(rl.shape[0]):
                shock_country, shock_product = result.scenario_codes(
                    start + offset)
                block = rl[offset]
                if nonzero_only:
                    cells = zip(*np.nonzero(block))
                else:
                    cells = ((c, i) for c in range(r.n_countries)
                             for i in range(r.n_products))
                for c, i in cells:
                    writer.writerow([shock_country, shock_product,
                                     r.countries[c], r.products[i],
                                     repr(float(block[c, i]))])
