"""Outlier injection for benchmarking, plus a synthetic community graph.

Structural outliers are planted as cliques; attribute outliers by copying
the features of the most distant node out of a random candidate pool.
Both injectors are pure functions of ``(graph, parameters, seed)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .graph import Graph, from_edges


@dataclass(frozen=True, eq=False)
class InjectionResult:
    graph: Graph
    y: np.ndarray
    kind: str

    def __iter__(self):
        # allows ``g, y = gen_attribute_outliers(...)``
        yield self.graph
        yield self.y


def gen_structural_outliers(g, m, n, seed=0):
    """Plant ``n`` cliques of ``m`` distinct uniformly sampled nodes.

    Missing intra-clique edges are added in both directions; features are
    untouched, as are any labels stored on ``g``. ``y`` flags all ``m * n``
    chosen nodes, including members of pairs that were already connected.
    """
    if n < 0 or m < 0:
        raise ContractError("m and n must be non-negative")
    if n and m < 2:
        raise ContractError(f"clique size m must be >= 2, got {m}")
    if m * n > g.num_nodes:
        raise ContractError(
            f"m * n = {m * n} exceeds the {g.num_nodes} available nodes")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(g.num_nodes, size=m * n, replace=False)
    y = np.zeros(g.num_nodes, dtype=np.int64)
    y[chosen] = 1
    if not n:
        return InjectionResult(g, y, "structural")
    new_edges = []
    for group in chosen.reshape(n, m):
        iu, ju = np.triu_indices(m, k=1)
        new_edges.append(np.column_stack([group[iu], group[ju]]))
    edges = np.vstack([g.edges()] + new_edges)
    out = from_edges(g.num_nodes, edges, g.features, g.labels)
    return InjectionResult(out, y, "structural")


def gen_attribute_outliers(g, n, k=50, seed=0):
    """Overwrite the features of ``n`` random targets.

    Each target draws ``k`` candidates from the other nodes and takes the
    features of the one farthest from it in Euclidean distance (lowest id
    wins a tie). Distances always use the original features, so the result
    does not depend on target order.
    """
    if n < 0:
        raise ContractError("n must be non-negative")
    if n > g.num_nodes:
        raise ContractError(f"n = {n} exceeds the {g.num_nodes} nodes")
    if k < 1:
        raise ContractError(f"candidate pool size k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    targets = rng.choice(g.num_nodes, size=n, replace=False)
    x = g.features
    new_x = x.copy()
    pool_size = min(k, g.num_nodes - 1)
    for i in targets:
        if pool_size < 1:
            break
        others = rng.choice(g.num_nodes - 1, size=pool_size, replace=False)
        cands = np.sort(others + (others >= i))
        dist = np.linalg.norm(x[cands] - x[i], axis=1)
        j = cands[np.argmax(dist)]
        new_x[i] = x[j]
    y = np.zeros(g.num_nodes, dtype=np.int64)
    y[targets] = 1
    out = Graph(g.adjacency, new_x, g.labels)
    return InjectionResult(out, y, "attribute")


def community_graph(num_nodes=300, num_communities=5, p_in=0.1, p_out=0.01,
                    feature_dim=16, center_scale=1.0, noise_scale=1.0, seed=0):
    """Stochastic block model with Gaussian community features.

    Nodes are split into near-equal consecutive blocks. Each block gets a
    centre drawn from ``N(0, center_scale^2 I)``; node features are the
    centre plus ``N(0, noise_scale^2 I)`` noise.
    """
    rng = np.random.default_rng(seed)
    block = np.arange(num_nodes) * num_communities // num_nodes
    iu, ju = np.triu_indices(num_nodes, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    centers = rng.normal(0.0, center_scale, size=(num_communities, feature_dim))
    x = centers[block] + rng.normal(0.0, noise_scale, size=(num_nodes, feature_dim))
    return from_edges(num_nodes, np.column_stack([iu[keep], ju[keep]]), x)


def benchmark_graph(seed=0, num_nodes=300, num_structural_cliques=3,
                    clique_size=5, num_attribute=15, k=50):
    """Community graph with planted structural and attribute outliers.

    Returns ``(graph, y_structural, y_attribute)``; the graph's ``labels``
    hold their union.
    """
    g = community_graph(num_nodes=num_nodes, seed=seed)
    s = gen_structural_outliers(g, clique_size, num_structural_cliques, seed=seed + 1)
    a = gen_attribute_outliers(s.graph, num_attribute, k=k, seed=seed + 2)
    return a.graph.with_labels(np.maximum(s.y, a.y)), s.y, a.y
