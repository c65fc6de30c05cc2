"""Supply, use and demand tables plus the entity registry.

The tables are the raw material for everything else: per-country supply of
each product by each production process, use of products (by origin) as
production inputs, and final demand split by purpose.  Entries are stored as
parallel integer-index arrays against an immutable :class:`Registry`, which
keeps full-scale worlds (hundreds of thousands of entries) cheap to hold and
to aggregate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

#: Purposes whose demand entries may be negative (stock drawdown, balancing).
NEGATIVE_OK_PURPOSES = frozenset({"stock_addition", "balancing"})

#: The canonical purpose set; registries may add further purposes, which are
#: treated like "other" in the allocation.
DEFAULT_PURPOSES = ("food", "losses", "stock_addition", "other", "unspecified", "balancing")

REGISTRY_KINDS = ("country", "product", "process", "purpose")


class TableSchemaError(ValueError):
    """Malformed input file: wrong columns, non-numeric amount, bad kind."""


class TableValidationError(ValueError):
    """Semantically invalid data: unknown codes, sign violations, duplicates."""


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _index_map(codes: Sequence[str], what: str) -> dict[str, int]:
    mapping = {code: i for i, code in enumerate(codes)}
    if len(mapping) != len(codes):
        seen: set[str] = set()
        for code in codes:
            if code in seen:
                raise TableValidationError(f"duplicate {what} code {code!r} in registry")
            seen.add(code)
    return mapping


@dataclass(frozen=True)
class Registry:
    """Ordered code lists for countries, products, processes and purposes.

    `regions` maps country code to region name; `names` optionally maps any
    code to a display name.  Instances are immutable and shared freely.
    """

    countries: tuple[str, ...]
    products: tuple[str, ...]
    processes: tuple[str, ...]
    purposes: tuple[str, ...] = DEFAULT_PURPOSES
    regions: dict[str, str] = field(default_factory=dict)
    names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "processes", tuple(self.processes))
        object.__setattr__(self, "purposes", tuple(self.purposes))
        object.__setattr__(self, "_country_idx", _index_map(self.countries, "country"))
        object.__setattr__(self, "_product_idx", _index_map(self.products, "product"))
        object.__setattr__(self, "_process_idx", _index_map(self.processes, "process"))
        object.__setattr__(self, "_purpose_idx", _index_map(self.purposes, "purpose"))
        if "food" not in self._purpose_idx:
            raise TableValidationError('registry purposes must contain "food"')
        for code in self.regions:
            if code not in self._country_idx:
                raise TableValidationError(
                    f"region mapping references unknown country {code!r}"
                )
        # Region order = first occurrence over the country list; countries
        # without an explicit region fall into "unassigned".
        region_names: list[str] = []
        for code in self.countries:
            region = self.regions.get(code, "unassigned")
            if region not in region_names:
                region_names.append(region)
        object.__setattr__(self, "region_names", tuple(region_names))
        region_idx = {name: i for i, name in enumerate(region_names)}
        object.__setattr__(
            self,
            "region_index",
            np.array(
                [region_idx[self.regions.get(c, "unassigned")] for c in self.countries],
                dtype=np.int32,
            ),
        )

    # -- sizes ---------------------------------------------------------------
    @property
    def n_countries(self) -> int:
        return len(self.countries)

    @property
    def n_products(self) -> int:
        return len(self.products)

    @property
    def n_processes(self) -> int:
        return len(self.processes)

    @property
    def n_regions(self) -> int:
        return len(self.region_names)

    # -- lookups -------------------------------------------------------------
    def country_index(self, code: str) -> int:
        try:
            return self._country_idx[code]
        except KeyError:
            raise TableValidationError(f"unknown country code {code!r}") from None

    def product_index(self, code: str) -> int:
        try:
            return self._product_idx[code]
        except KeyError:
            raise TableValidationError(f"unknown product code {code!r}") from None

    def process_index(self, code: str) -> int:
        try:
            return self._process_idx[code]
        except KeyError:
            raise TableValidationError(f"unknown process code {code!r}") from None

    def purpose_index(self, code: str) -> int:
        try:
            return self._purpose_idx[code]
        except KeyError:
            raise TableValidationError(f"unknown purpose code {code!r}") from None

    def region_of(self, country: str) -> str:
        self.country_index(country)
        return self.regions.get(country, "unassigned")


# ---------------------------------------------------------------------------
# Entry tables
# ---------------------------------------------------------------------------

def _as_index_array(values: Iterable[int]) -> np.ndarray:
    return np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                      dtype=np.int32)


def _check_no_duplicates(keys: tuple[np.ndarray, ...], what: str) -> None:
    if keys[0].size == 0:
        return
    stacked = np.stack(keys, axis=1)
    _, counts = np.unique(stacked, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise TableValidationError(
            f"{int((counts > 1).sum())} duplicate {what} key(s); duplicate rows are "
            "rejected, not summed"
        )


def _check_amounts(amount: np.ndarray, what: str) -> None:
    if amount.size and not np.all(np.isfinite(amount)):
        raise TableValidationError(f"non-finite amount in {what} table")
    if amount.size and np.any(amount < 0):
        raise TableValidationError(f"negative amount in {what} table")


class SupplyTable:
    """Sparse (country, process, product) -> amount supplied.

    Country-block-diagonal by construction: the supplying process and the
    receiving product always belong to the same country.
    """

    def __init__(self, registry: Registry, country, process, product, amount):
        self.registry = registry
        self.country = _as_index_array(country)
        self.process = _as_index_array(process)
        self.product = _as_index_array(product)
        self.amount = np.asarray(amount, dtype=np.float64)
        _check_amounts(self.amount, "supply")
        _check_no_duplicates((self.country, self.process, self.product), "supply")

    @classmethod
    def from_rows(cls, registry: Registry,
                  rows: Iterable[tuple[str, str, str, float]]) -> "SupplyTable":
        c, k, i, a = [], [], [], []
        for country, process, product, amount in rows:
            c.append(registry.country_index(country))
            k.append(registry.process_index(process))
            i.append(registry.product_index(product))
            a.append(float(amount))
        return cls(registry, c, k, i, a)

    def __len__(self) -> int:
        return int(self.amount.size)

    def amount_of(self, country: str, process: str, product: str) -> float:
        r = self.registry
        mask = ((self.country == r.country_index(country))
                & (self.process == r.process_index(process))
                & (self.product == r.product_index(product)))
        return float(self.amount[mask].sum())

    def rows(self) -> Iterator[tuple[str, str, str, float]]:
        r = self.registry
        for c, k, i, a in zip(self.country, self.process, self.product, self.amount):
            yield r.countries[c], r.processes[k], r.products[i], float(a)


class UseTable:
    """Sparse (origin, product, user country, process) -> amount used as input."""

    def __init__(self, registry: Registry, origin, product, user, process, amount):
        self.registry = registry
        self.origin = _as_index_array(origin)
        self.product = _as_index_array(product)
        self.user = _as_index_array(user)
        self.process = _as_index_array(process)
        self.amount = np.asarray(amount, dtype=np.float64)
        _check_amounts(self.amount, "use")
        _check_no_duplicates((self.origin, self.product, self.user, self.process), "use")

    @classmethod
    def from_rows(cls, registry: Registry,
                  rows: Iterable[tuple[str, str, str, str, float]]) -> "UseTable":
        d, i, c, k, a = [], [], [], [], []
        for origin, product, user, process, amount in rows:
            d.append(registry.country_index(origin))
            i.append(registry.product_index(product))
            c.append(registry.country_index(user))
            k.append(registry.process_index(process))
            a.append(float(amount))
        return cls(registry, d, i, c, k, a)

    def __len__(self) -> int:
        return int(self.amount.size)

    def amount_of(self, origin: str, product: str, user: str, process: str) -> float:
        r = self.registry
        mask = ((self.origin == r.country_index(origin))
                & (self.product == r.product_index(product))
                & (self.user == r.country_index(user))
                & (self.process == r.process_index(process)))
        return float(self.amount[mask].sum())

    def rows(self) -> Iterator[tuple[str, str, str, str, float]]:
        r = self.registry
        for d, i, c, k, a in zip(self.origin, self.product, self.user,
                                 self.process, self.amount):
            yield r.countries[d], r.products[i], r.countries[c], r.processes[k], float(a)


class DemandTable:
    """Sparse (origin, product, demand country, purpose) -> amount.

    Negative amounts are only allowed for stock_addition and balancing; the
    positive/negative split Y = Y+ + Y- is exact and exposed via
    :meth:`positive` / :meth:`negative`.
    """

    def __init__(self, registry: Registry, origin, product, country, purpose, amount):
        self.registry = registry
        self.origin = _as_index_array(origin)
        self.product = _as_index_array(product)
        self.country = _as_index_array(country)
        self.purpose = _as_index_array(purpose)
        self.amount = np.asarray(amount, dtype=np.float64)
        if self.amount.size and not np.all(np.isfinite(self.amount)):
            raise TableValidationError("non-finite amount in demand table")
        negative = self.amount < 0
        if np.any(negative):
            allowed = np.array(
                [p in NEGATIVE_OK_PURPOSES for p in registry.purposes], dtype=bool
            )
            bad = negative & ~allowed[self.purpose]
            if np.any(bad):
                j = int(np.argmax(bad))
                raise TableValidationError(
                    "negative demand only allowed for purposes "
                    f"{sorted(NEGATIVE_OK_PURPOSES)}; got {self.amount[j]} for "
                    f"purpose {registry.purposes[self.purpose[j]]!r}"
                )
        _check_no_duplicates(
            (self.origin, self.product, self.country, self.purpose), "demand"
        )

    @classmethod
    def from_rows(cls, registry: Registry,
                  rows: Iterable[tuple[str, str, str, str, float]]) -> "DemandTable":
        d, i, c, l, a = [], [], [], [], []
        for origin, product, country, purpose, amount in rows:
            d.append(registry.country_index(origin))
            i.append(registry.product_index(product))
            c.append(registry.country_index(country))
            l.append(registry.purpose_index(purpose))
            a.append(float(amount))
        return cls(registry, d, i, c, l, a)

    def __len__(self) -> int:
        return int(self.amount.size)

    def amount_of(self, origin: str, product: str, country: str, purpose: str) -> float:
        r = self.registry
        mask = ((self.origin == r.country_index(origin))
                & (self.product == r.product_index(product))
                & (self.country == r.country_index(country))
                & (self.purpose == r.purpose_index(purpose)))
        return float(self.amount[mask].sum())

    def positive(self) -> "DemandTable":
        """The Y+ part: entries with amount > 0 (exact sign split)."""
        mask = self.amount > 0
        return DemandTable(self.registry, self.origin[mask], self.product[mask],
                           self.country[mask], self.purpose[mask], self.amount[mask])

    def negative(self) -> "DemandTable":
        """The Y- part: entries with amount < 0."""
        mask = self.amount < 0
        return DemandTable(self.registry, self.origin[mask], self.product[mask],
                           self.country[mask], self.purpose[mask], self.amount[mask])

    def rows(self) -> Iterator[tuple[str, str, str, str, float]]:
        r = self.registry
        for d, i, c, l, a in zip(self.origin, self.product, self.country,
                                 self.purpose, self.amount):
            yield r.countries[d], r.products[i], r.countries[c], r.purposes[l], float(a)


@dataclass
class SupplyUseTables:
    """The full raw-data bundle: registry plus the three entry tables."""

    registry: Registry
    supply: SupplyTable
    use: UseTable
    demand: DemandTable


# ---------------------------------------------------------------------------
# Balancing
# ---------------------------------------------------------------------------

@dataclass
class BalancingTerms:
    """Per-(country, product) residual B closing supply minus uses minus Y+.

    b = bplus + bminus exactly, with bplus = max(B, 0), bminus = min(B, 0).
    """

    registry: Registry
    b: np.ndarray       # (C, P)
    bplus: np.ndarray   # (C, P)
    bminus: np.ndarray  # (C, P)

    def of(self, country: str, product: str) -> float:
        r = self.registry
        return float(self.b[r.country_index(country), r.product_index(product)])


def compute_balancing(tables: SupplyUseTables) -> BalancingTerms:
    """Residual per (country, product): local supply minus any-country use of
    the country's product minus any-country positive demand for it."""
    r = tables.registry
    b = np.zeros((r.n_countries, r.n_products))
    s = tables.supply
    np.add.at(b, (s.country, s.product), s.amount)
    u = tables.use
    np.subtract.at(b, (u.origin, u.product), u.amount)
    y = tables.demand
    pos = y.amount > 0
    np.subtract.at(b, (y.origin[pos], y.product[pos]), y.amount[pos])
    return BalancingTerms(r, b, np.maximum(b, 0.0), np.minimum(b, 0.0))


# ---------------------------------------------------------------------------
# CSV input / output
# ---------------------------------------------------------------------------

SUPPLY_HEADER = ["country", "process", "product", "amount"]
USE_HEADER = ["origin_country", "product", "user_country", "process", "amount"]
DEMAND_HEADER = ["origin_country", "product", "demand_country", "purpose", "amount"]
REGISTRY_HEADER = ["kind", "code", "name", "region"]


def _read_csv(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    rows: list[tuple[int, list[str]]] = []
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise TableSchemaError(f"{path}: cannot open: {exc}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            first = next(reader)
        except StopIteration:
            raise TableSchemaError(f"{path}:1: missing header row") from None
        if first != header:
            raise TableSchemaError(
                f"{path}:1: expected header {','.join(header)!r}, got {','.join(first)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise TableSchemaError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            rows.append((lineno, row))
    return rows


def _parse_amount(path: Path, lineno: int, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TableSchemaError(f"{path}:{lineno}: non-numeric amount {text!r}") from None


def load_registry(path: str | Path) -> Registry:
    path = Path(path)
    countries: list[str] = []
    products: list[str] = []
    processes: list[str] = []
    purposes: list[str] = []
    regions: dict[str, str] = {}
    names: dict[str, str] = {}
    for lineno, (kind, code, name, region) in _read_csv(path, REGISTRY_HEADER):
        if kind not in REGISTRY_KINDS:
            raise TableSchemaError(f"{path}:{lineno}: unknown registry kind {kind!r}")
        if kind != "country" and region:
            raise TableValidationError(
                f"{path}:{lineno}: region only allowed for kind=country"
            )
        if kind == "country":
            countries.append(code)
            if region:
                regions[code] = region
        elif kind == "product":
            products.append(code)
        elif kind == "process":
            processes.append(code)
        else:
            purposes.append(code)
        if name:
            names[code] = name
    try:
        return Registry(tuple(countries), tuple(products), tuple(processes),
                        tuple(purposes) or DEFAULT_PURPOSES, regions, names)
    except TableValidationError as exc:
        raise TableValidationError(f"{path}: {exc}") from None


def load_tables(supply_path: str | Path, use_path: str | Path,
                demand_path: str | Path, registry_path: str | Path) -> SupplyUseTables:
    """Load and validate the four CSV files into a :class:`SupplyUseTables`."""
    registry = load_registry(registry_path)

    def resolve(path, lineno, kind, code):
        try:
            if kind == "country":
                return registry.country_index(code)
            if kind == "product":
                return registry.product_index(code)
            if kind == "process":
                return registry.process_index(code)
            return registry.purpose_index(code)
        except TableValidationError as exc:
            raise TableValidationError(f"{path}:{lineno}: {exc}") from None

    supply_path = Path(supply_path)
    c, k, i, a = [], [], [], []
    for lineno, row in _read_csv(supply_path, SUPPLY_HEADER):
        c.append(resolve(supply_path, lineno, "country", row[0]))
        k.append(resolve(supply_path, lineno, "process", row[1]))
        i.append(resolve(supply_path, lineno, "product", row[2]))
        a.append(_parse_amount(supply_path, lineno, row[3]))
    try:
        supply = SupplyTable(registry, c, k, i, a)
    except TableValidationError as exc:
        raise TableValidationError(f"{supply_path}: {exc}") from None

    use_path = Path(use_path)
    d, i2, c2, k2, a2 = [], [], [], [], []
    for lineno, row in _read_csv(use_path, USE_HEADER):
        d.append(resolve(use_path, lineno, "country", row[0]))
        i2.append(resolve(use_path, lineno, "product", row[1]))
        c2.append(resolve(use_path, lineno, "country", row[2]))
        k2.append(resolve(use_path, lineno, "process", row[3]))
        a2.append(_parse_amount(use_path, lineno, row[4]))
    try:
        use = UseTable(registry, d, i2, c2, k2, a2)
    except TableValidationError as exc:
        raise TableValidationError(f"{use_path}: {exc}") from None

    demand_path = Path(demand_path)
    d3, i3, c3, l3, a3 = [], [], [], [], []
    for lineno, row in _read_csv(demand_path, DEMAND_HEADER):
        d3.append(resolve(demand_path, lineno, "country", row[0]))
        i3.append(resolve(demand_path, lineno, "product", row[1]))
        c3.append(resolve(demand_path, lineno, "country", row[2]))
        l3.append(resolve(demand_path, lineno, "purpose", row[3]))
        a3.append(_parse_amount(demand_path, lineno, row[4]))
    try:
        demand = DemandTable(registry, d3, i3, c3, l3, a3)
    except TableValidationError as exc:
        raise TableValidationError(f"{demand_path}: {exc}") from None

    return SupplyUseTables(registry, supply, use, demand)


def write_tables(tables: SupplyUseTables, supply_path: str | Path, use_path: str | Path,
                 demand_path: str | Path, registry_path: str | Path) -> None:
    """Write the bundle back to the four CSV files (lossless float text)."""
    r = tables.registry
    with open(registry_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(REGISTRY_HEADER)
        for code in r.countries:
            writer.writerow(["country", code, r.names.get(code, ""),
                             r.regions.get(code, "")])
        for code in r.products:
            writer.writerow(["product", code, r.names.get(code, ""), ""])
        for code in r.processes:
            writer.writerow(["process", code, r.names.get(code, ""), ""])
        for code in r.purposes:
            writer.writerow(["purpose", code, r.names.get(code, ""), ""])
    with open(supply_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUPPLY_HEADER)
        for row in tables.supply.rows():
            writer.writerow([*row[:3], repr(row[3])])
    with open(use_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(USE_HEADER)
        for row in tables.use.rows():
            writer.writerow([*row[:4], repr(row[4])])
    with open(demand_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(DEMAND_HEADER)
        for row in tables.demand.rows():
            writer.writerow([*row[:4], repr(row[4])])


# ---------------------------------------------------------------------------
# Synthetic worlds
# ---------------------------------------------------------------------------

def _country_codes(n: int) -> list[str]:
    codes = []
    for i in range(n):
        a, rem = divmod(i, 26 * 26)
        b, c = divmod(rem, 26)
        codes.append(chr(65 + a) + chr(65 + b) + chr(65 + c))
    return codes


def generate_synthetic_world(countries: int, products: int, processes: int,
                             density: float, seed: int) -> SupplyUseTables:
    """Generate a random but valid world for tests and benchmarks.

    `density` steers how many products feed each converting process and how
    many foreign partners each flow has; 0 produces a world of pure source
    processes with no use entries, 1 a maximally connected one.  Fixed seed,
    fixed output: every draw comes from one `default_rng(seed)` in a fixed
    order.  Guarantees: every product is supplied by at least one process
    somewhere, and at least one process is a pure source (no inputs anywhere).
    """
    if countries < 1 or products < 1 or processes < 1:
        raise ValueError("counts must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must be in [0, 1]")
    rng = np.random.default_rng(seed)
    C, P, K = countries, products, processes

    registry = Registry(
        countries=tuple(_country_codes(C)),
        products=tuple(f"p{i:03d}" for i in range(P)),
        processes=tuple(f"k{i:03d}" for i in range(K)),
        purposes=DEFAULT_PURPOSES,
        regions={code: f"region_{i % max(1, min(14, C)):02d}"
                 for i, code in enumerate(_country_codes(C))},
    )

    # Process types: which are pure sources, what they output, what they eat.
    if density == 0.0:
        source = np.ones(K, dtype=bool)
    else:
        n_sources = max(1, int(round(K * 0.3)))
        source = np.zeros(K, dtype=bool)
        source[rng.choice(K, size=n_sources, replace=False)] = True

    outputs: list[list[int]] = [[] for _ in range(K)]
    for i in range(P):
        outputs[i % K].append(i)
    extra = rng.random(K) < 0.3
    extra_prod = rng.integers(0, P, size=K)
    for k in range(K):
        if extra[k] and extra_prod[k] not in outputs[k]:
            outputs[k].append(int(extra_prod[k]))

    inputs: list[list[int]] = []
    for k in range(K):
        if source[k] or density == 0.0:
            inputs.append([])
            continue
        mask = rng.random(P) < density
        picked = np.flatnonzero(mask)
        if picked.size == 0:
            picked = rng.integers(0, P, size=1)
        inputs.append([int(j) for j in picked])

    # Product scales: keeps alpha coefficients O(1) so trajectories stay tame.
    scale = 10.0 ** rng.uniform(1.0, 3.0, size=P)

    # Per-country process activity; every product keeps >= 1 active supplier.
    active = rng.random((C, K)) < 0.85
    for i in range(P):
        k = i % K
        if not active[:, k].any():
            active[int(rng.integers(0, C)), k] = True

    sup_c: list[int] = []
    sup_k: list[int] = []
    sup_i: list[int] = []
    sup_a: list[float] = []
    for c in range(C):
        for k in range(K):
            if not active[c, k]:
                continue
            for i in outputs[k]:
                sup_c.append(c)
                sup_k.append(k)
                sup_i.append(i)
                sup_a.append(float(scale[i] * rng.uniform(0.5, 1.5)))
    supply = SupplyTable(registry, sup_c, sup_k, sup_i, sup_a)

    # Origin mixes are drawn once per (user country, product): a country's
    # import partners for a product are shared by all its processes.
    def origin_mix(c: int) -> tuple[np.ndarray, np.ndarray]:
        if C == 1 or density == 0.0:
            return np.array([c]), np.array([1.0])
        foreign = rng.random(C) < density * 0.6
        foreign[c] = False
        partners = np.concatenate(([c], np.flatnonzero(foreign)))
        weights = rng.dirichlet(np.ones(partners.size))
        weights[0] += 2.0  # domestic share dominates
        weights /= weights.sum()
        return partners, weights

    use_d: list[int] = []
    use_i: list[int] = []
    use_c: list[int] = []
    use_k: list[int] = []
    use_a: list[float] = []
    for c in range(C):
        used_products = sorted({j for k in range(K) if active[c, k] for j in inputs[k]})
        mixes = {j: origin_mix(c) for j in used_products}
        for k in range(K):
            if not active[c, k] or not inputs[k]:
                continue
            for j in inputs[k]:
                total = float(scale[j] * rng.uniform(0.2, 0.8))
                partners, weights = mixes[j]
                for d, w in zip(partners, weights):
                    use_d.append(int(d))
                    use_i.append(j)
                    use_c.append(c)
                    use_k.append(k)
                    use_a.append(total * float(w))
    use = UseTable(registry, use_d, use_i, use_c, use_k, use_a)

    dem_d: list[int] = []
    dem_i: list[int] = []
    dem_c: list[int] = []
    dem_l: list[int] = []
    dem_a: list[float] = []
    p_food = registry.purpose_index("food")
    p_other = registry.purpose_index("other")
    p_stock = registry.purpose_index("stock_addition")
    supplied = np.zeros((C, P), dtype=bool)
    supplied[supply.country, supply.product] = True

    def add(d: int, i: int, c: int, l: int, a: float) -> None:
        dem_d.append(d)
        dem_i.append(i)
        dem_c.append(c)
        dem_l.append(l)
        dem_a.append(a)

    for c in range(C):
        for i in range(P):
            if rng.random() >= 0.7:
                continue
            total = float(scale[i] * rng.uniform(0.2, 1.0))
            if density > 0.0 and C > 1:
                foreign = rng.random(C) < density * 0.3
                foreign[c] = False
                origins = np.flatnonzero(foreign)
            else:
                origins = np.array([], dtype=int)
            if supplied[c, i]:
                origins = np.concatenate(([c], origins))
            if origins.size == 0:
                continue
            weights = rng.dirichlet(np.ones(origins.size))
            for d, w in zip(origins, weights):
                add(int(d), i, c, p_food, total * float(w))
            if rng.random() < 0.3 and supplied[c, i]:
                add(c, i, c, p_other, float(scale[i] * rng.uniform(0.05, 0.2)))
            if rng.random() < 0.15 and supplied[c, i]:
                add(c, i, c, p_stock, -float(scale[i] * rng.uniform(0.01, 0.1)))
    demand = DemandTable(registry, dem_d, dem_i, dem_c, dem_l, dem_a)

    return SupplyUseTables(registry, supply, use, demand)
