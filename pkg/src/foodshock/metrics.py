"""Per-layer trade network metrics.

The weighted network of a product has edge d -> c with weight equal to the
first-step export volume, trade share times the exporter's allocated export
reserve.  Links below a weight threshold (1 tonne by default) are discarded
before anything is measured.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from foodshock.calibration import CalibratedModel


@dataclass
class LayerMetrics:
    product: str
    n_nodes: int
    n_scc: int        # size of the largest strongly connected component
    n_wcc: int        # size of the largest weakly connected component
    links: int
    mean_degree: float
    mean_strength: float
    herfindahl: float


def herfindahl(strengths) -> float:
    """Concentration of a nonnegative strength vector: sum of squared shares.

    Zero total gives 0 (no market to concentrate).
    """
    s = np.asarray(strengths, dtype=np.float64)
    total = s.sum()
    if total <= 0:
        return 0.0
    shares = s / total
    return float(np.dot(shares, shares))


def _successor_lists(adj: sparse.csr_matrix) -> list:
    """adj[c, d] nonzero means edge d -> c; returns out-neighbors per node."""
    csc = adj.tocsc()
    n = adj.shape[0]
    return [csc.indices[csc.indptr[d]:csc.indptr[d + 1]].tolist()
            for d in range(n)]


def strongly_connected_components(successors: list) -> list:
    """All SCCs of a directed graph given as successor lists (iterative)."""
    n = len(successors)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            u, pi = work.pop()
            if pi == 0:
                index[u] = low[u] = counter
                counter += 1
                stack.append(u)
                on_stack[u] = True
            descended = False
            nbrs = successors[u]
            while pi < len(nbrs):
                v = nbrs[pi]
                pi += 1
                if index[v] == -1:
                    work.append((u, pi))
                    work.append((v, 0))
                    descended = True
                    break
                if on_stack[v]:
                    low[u] = min(low[u], index[v])
            if descended:
                continue
            if low[u] == index[u]:
                component = []
                while True:
                    v = stack.pop()
                    on_stack[v] = False
                    component.append(v)
                    if v == u:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[u])
    return components


def weakly_connected_components(successors: list) -> list:
    """Connected components ignoring edge direction (iterative BFS)."""
    n = len(successors)
    undirected: list[set] = [set() for _ in range(n)]
    for u, nbrs in enumerate(successors):
        for v in nbrs:
            undirected[u].add(v)
            undirected[v].add(u)
    seen = [False] * n
    components = []
    for root in range(n):
        if seen[root]:
            continue
        queue = [root]
        seen[root] = True
        component = []
        while queue:
            u = queue.pop()
            component.append(u)
            for v in undirected[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        components.append(component)
    return components


def layer_weights(model: CalibratedModel, product: str,
                  threshold: float = 1.0) -> sparse.csr_matrix:
    """Thresholded first-step export volumes of one layer, entry (c, d)."""
    r = model.registry
    i = r.product_index(product)
    outflow = model.shares.eta_exp[:, i] * model.initial_amounts[:, i]
    weighted = model.trade_layers[i].shares @ sparse.diags(outflow)
    weighted = weighted.tocsr()
    if weighted.nnz:
        weighted.data[weighted.data < threshold] = 0.0
        weighted.eliminate_zeros()
    return weighted


def layer_metrics(model: CalibratedModel, threshold: float = 1.0,
                  products: tuple | None = None) -> list:
    """Network metrics for every (or the given) product layer.

    Node count is always the full country list; nodes without links count as
    their own single-node components.
    """
    r = model.registry
    if products is None:
        products = r.products
    out = []
    n = r.n_countries
    for product in products:
        weighted = layer_weights(model, product, threshold)
        successors = _successor_lists(weighted)
        links = weighted.nnz
        strengths = np.asarray(weighted.sum(axis=0)).ravel()
        sccs = strongly_connected_components(successors)
        wccs = weakly_connected_components(successors)
        out.append(LayerMetrics(
            product=product,
            n_nodes=n,
            n_scc=max((len(c) for c in sccs), default=0),
            n_wcc=max((len(c) for c in wccs), default=0),
            links=int(links),
            mean_degree=links / n if n else 0.0,
            mean_strength=float(strengths.sum()) / n if n else 0.0,
            herfindahl=herfindahl(strengths),
        ))
    return out


METRICS_HEADER = ["product", "N", "N_scc", "N_wcc", "L",
                  "mean_degree", "mean_strength", "herfindahl"]


def metrics_to_csv(metrics: list, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow([m.product, m.n_nodes, m.n_scc, m.n_wcc, m.links,
                             repr(m.mean_degree), repr(m.mean_strength),
                             repr(m.herfindahl)])
