"""Per-algorithm extraction of the graph artifacts a detector trains on."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import gcn_normalize

ALGORITHMS = ("mlpae", "gcnae", "dominant", "ocgnn", "done")

# dense n x n structure targets are only materialised up to this size
DENSE_CAP = 5000


@dataclass(frozen=True, eq=False)
class ProcessedInputs:
    algorithm: str
    features: np.ndarray
    norm_adj: Optional[sp.csr_matrix] = None
    dense_adj: Optional[np.ndarray] = None
    adjacency: Optional[sp.csr_matrix] = None
    neighbors: Optional[list] = None
    neighbor_mean: Optional[sp.csr_matrix] = None

    @property
    def num_nodes(self):
        return self.features.shape[0]


def structure_target(adjacency, rows=None):
    """Dense ``A + I`` restricted to ``rows`` (all rows by default)."""
    n = adjacency.shape[0]
    if rows is None:
        rows = np.arange(n)
    block = adjacency[rows].toarray()
    block[np.arange(len(rows)), rows] = 1.0
    return block


def neighbor_mean_operator(adjacency):
    """Row-normalised adjacency; rows of isolated nodes stay zero."""
    deg = np.diff(adjacency.indptr).astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.diags(inv).dot(adjacency).tocsr()


def process_graph(g, algorithm):
    """Return only what ``algorithm`` consumes.

    * ``mlpae``: features.
    * ``gcnae``, ``ocgnn``: features and the GCN-normalised adjacency.
    * ``dominant``: as above plus the dense ``A + I`` structure target
      (omitted above ``DENSE_CAP`` nodes).
    * ``done``: features, raw adjacency, neighbour lists and the
      neighbour-averaging operator.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    x = g.features
    if algorithm == "mlpae":
        return ProcessedInputs(algorithm, x)
    if algorithm in ("gcnae", "ocgnn"):
        return ProcessedInputs(algorithm, x, norm_adj=gcn_normalize(g))
    if algorithm == "dominant":
        dense = structure_target(g.adjacency) if g.num_nodes <= DENSE_CAP else None
        return ProcessedInputs(algorithm, x, norm_adj=gcn_normalize(g),
                               dense_adj=dense)
    adj = g.adjacency
    neighbors = [adj.indices[adj.indptr[i]:adj.indptr[i + 1]].copy()
                 for i in range(g.num_nodes)]
    return ProcessedInputs(algorithm, x, adjacency=adj, neighbors=neighbors,
                           neighbor_mean=neighbor_mean_operator(adj))
