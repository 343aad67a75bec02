"""Mini-batching by random node-induced subgraphs.

Each epoch draws a fresh permutation from ``(seed, epoch)`` and cuts it into
consecutive chunks. Node ids inside a chunk are re-sorted ascending, so a
single chunk covering every node is exactly the full graph.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ContractError
from .graph import Graph, induced_subgraph


@dataclass(frozen=True, eq=False)
class Batch:
    """One mini-batch: global ids plus, for GNN paths, the induced subgraph
    with local ids ``0..len(nodes)-1`` in the order of ``nodes``."""

    nodes: np.ndarray
    subgraph: Optional[Graph] = None

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True, eq=False)
class BatchPlan:
    epoch: int
    batch_size: int
    permutation: np.ndarray
    batches: list

    def __iter__(self):
        return iter(self.batches)

    def __len__(self):
        return len(self.batches)


def epoch_permutation(num_nodes, seed, epoch):
    rng = np.random.default_rng([int(seed), int(epoch)])
    return rng.permutation(num_nodes)


def node_batches(g, batch_size, seed, epoch, induced=True):
    """Partition the nodes of ``g`` into seeded batches for one epoch.

    With ``induced=False`` only the id arrays are produced (row batching for
    edge-blind models).
    """
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    perm = epoch_permutation(g.num_nodes, seed, epoch)
    batches = []
    for start in range(0, g.num_nodes, batch_size):
        nodes = np.sort(perm[start:start + batch_size])
        sub = induced_subgraph(g, nodes) if induced else None
        batches.append(Batch(nodes, sub))
    return BatchPlan(epoch, batch_size, perm, batches)
