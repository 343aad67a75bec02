"""Attributed graph container, file I/O and the GCN propagation operator.

Graphs are undirected and unweighted. The adjacency is kept as a
``scipy.sparse.csr_matrix`` with sorted column indices, unit data and no
stored self-loops; features are a dense float64 matrix.
"""

import json
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import GraphBoundsError, GraphFormatError, ShapeError

ONE_HOT_CAP = 128

_SPLIT = re.compile(r"[,\s]+")
_NUM_NODES_HEADER = re.compile(r"^#\s*num_nodes\s*[:=]\s*(\d+)\s*$")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph.

    Parameters
    ----------
    adjacency : scipy.sparse.csr_matrix
        Symmetric binary adjacency, ``num_nodes x num_nodes``, no diagonal.
    features : numpy.ndarray
        Node attribute matrix, ``num_nodes x feature_dim``.
    labels : numpy.ndarray, optional
        Ground-truth outlier labels (1 = outlier).

    Use :func:`from_edges` rather than building one by hand; the
    constructor only validates.
    """

    adjacency: sp.csr_matrix
    features: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        adj = self.adjacency
        n = adj.shape[0]
        if adj.shape != (n, n):
            raise ShapeError(f"adjacency must be square, got {adj.shape}")
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ShapeError(
                f"features must have {n} rows, got shape {self.features.shape}")
        if self.labels is not None and self.labels.shape != (n,):
            raise ShapeError(f"labels must have shape ({n},)")
        if not adj.has_sorted_indices:
            raise GraphFormatError("adjacency column indices must be sorted")
        if adj.diagonal().any():
            raise GraphFormatError("self-loops must not be stored")
        if (adj != adj.T).nnz:
            raise GraphFormatError("adjacency must be symmetric")
        for arr in (adj.data, adj.indices, adj.indptr, self.features):
            arr.setflags(write=False)
        if self.labels is not None:
            self.labels.setflags(write=False)

    @property
    def num_nodes(self):
        return self.adjacency.shape[0]

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def degrees(self):
        return np.diff(self.adjacency.indptr)

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def edges(self):
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)

    def with_features(self, features):
        return Graph(self.adjacency, np.array(features, dtype=np.float64),
                     self.labels)

    def with_labels(self, labels):
        labels = None if labels is None else np.asarray(labels, dtype=np.int64).copy()
        return Graph(self.adjacency, self.features, labels)

    def same_as(self, other):
        """Exact structural, feature and label equality."""
        if self.num_nodes != other.num_nodes:
            return False
        a, b = self.adjacency, other.adjacency
        if not (np.array_equal(a.indptr, b.indptr)
                and np.array_equal(a.indices, b.indices)):
            return False
        if not np.array_equal(self.features, other.features):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


def _build_adjacency(num_nodes, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    u, v = edges[:, 0], edges[:, 1]
    keep = u != v
    u, v = u[keep], v[keep]
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)),
                        shape=(num_nodes, num_nodes))
    # coo -> csr sums duplicates; collapse back to a binary matrix
    adj.sum_duplicates()
    adj.data[:] = 1.0
    adj.sort_indices()
    return adj


def one_hot_features(num_nodes, cap=ONE_HOT_CAP):
    """Identity-like placeholder features of width ``min(num_nodes, cap)``.

    Node ``i`` gets a one in column ``i % width``.
    """
    width = max(1, min(num_nodes, cap))
    x = np.zeros((num_nodes, width))
    x[np.arange(num_nodes), np.arange(num_nodes) % width] = 1.0
    return x


def from_edges(num_nodes, edges, features=None, labels=None,
               one_hot_cap=ONE_HOT_CAP):
    """Build a :class:`Graph`, symmetrizing and deduplicating ``edges``.

    Self-loops are dropped. Missing features fall back to
    :func:`one_hot_features`.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
        raise GraphBoundsError(
            f"edge endpoint out of range for {num_nodes} nodes")
    if features is None:
        features = one_hot_features(num_nodes, one_hot_cap)
    features = np.array(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(num_nodes, -1)
    if labels is not None:
        labels = np.array(labels, dtype=np.int64)
    return Graph(_build_adjacency(num_nodes, edges), features, labels)


def _read_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line:
                yield lineno, line


def _parse_edges(path):
    edges = []
    declared = None
    for lineno, line in _read_lines(path):
        if line.startswith("#"):
            m = _NUM_NODES_HEADER.match(line)
            if m:
                declared = int(m.group(1))
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) != 2:
            raise GraphFormatError(
                f"expected 2 node ids, got {len(parts)} fields", lineno, path)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("node ids must be integers", lineno, path)
        if u < 0 or v < 0:
            raise GraphFormatError("node ids must be non-negative", lineno, path)
        edges.append((u, v, lineno))
    return edges, declared


def _parse_features(path):
    rows = []
    for lineno, line in _read_lines(path):
        if line.startswith("#"):
            continue
        try:
            row = [float(p) for p in _SPLIT.split(line) if p]
        except ValueError:
            raise GraphFormatError("non-numeric feature value", lineno, path)
        if rows and len(row) != len(rows[0]):
            raise GraphFormatError(
                f"expected {len(rows[0])} features, got {len(row)}", lineno, path)
        rows.append(row)
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def load_labels(path):
    """Read a label file: one 0/1 integer per line."""
    labels = []
    for lineno, line in _read_lines(path):
        if line.startswith("#"):
            continue
        try:
            value = int(line)
        except ValueError:
            raise GraphFormatError("label must be an integer", lineno, path)
        if value not in (0, 1):
            raise GraphFormatError("label must be 0 or 1", lineno, path)
        labels.append(value)
    return np.array(labels, dtype=np.int64)


def load_edge_list(path, num_features=None, *, feature_path=None,
                   label_path=None, num_nodes=None):
    """Load a graph from an edge-list file plus optional companions.

    Parameters
    ----------
    path : str or os.PathLike
        One ``u v`` pair per line, separated by whitespace or a comma.
        ``#`` starts a comment; ``# num_nodes: N`` declares the node count.
    num_features : int, optional
        Width cap for the one-hot fallback used when no feature file is
        given (default 128). With a feature file it must match the file.
    feature_path, label_path : str or os.PathLike, optional
    num_nodes : int, optional
        Overrides any header declaration.

    Reverse and duplicate edges collapse and self-loops are dropped.
    """
    edges, declared = _parse_edges(path)
    if num_nodes is None:
        num_nodes = declared
    features = _parse_features(feature_path) if feature_path else None
    labels = load_labels(label_path) if label_path else None

    max_id = max((max(u, v) for u, v, _ in edges), default=-1)
    if num_nodes is not None:
        for u, v, lineno in edges:
            if max(u, v) >= num_nodes:
                raise GraphBoundsError(
                    f"node id {max(u, v)} >= declared count {num_nodes}",
                    lineno, path)
    else:
        num_nodes = max_id + 1
        for extra in (features, labels):
            if extra is not None:
                num_nodes = max(num_nodes, extra.shape[0])

    if features is not None:
        if features.shape[0] != num_nodes:
            raise GraphFormatError(
                f"feature file has {features.shape[0]} rows, expected {num_nodes}",
                path=feature_path)
        if num_features is not None and features.shape[1] != num_features:
            raise GraphFormatError(
                f"feature file has {features.shape[1]} columns, expected "
                f"{num_features}", path=feature_path)
    if labels is not None and labels.shape[0] != num_nodes:
        raise GraphFormatError(
            f"label file has {labels.shape[0]} rows, expected {num_nodes}",
            path=label_path)

    cap = ONE_HOT_CAP if num_features is None else num_features
    pairs = [(u, v) for u, v, _ in edges]
    return from_edges(num_nodes, pairs, features, labels, one_hot_cap=cap)


def _write_atomic(path, text):
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def labels_to_text(labels):
    return "".join(f"{int(v)}\n" for v in labels)


def save_labels(labels, path):
    _write_atomic(path, labels_to_text(labels))


def save_edge_list(g, path, feature_path=None, label_path=None):
    """Write ``g`` in the edge-list format read by :func:`load_edge_list`."""
    lines = [f"# num_nodes: {g.num_nodes}\n"]
    lines += [f"{u} {v}\n" for u, v in g.edges()]
    _write_atomic(path, "".join(lines))
    if feature_path is not None:
        rows = (" ".join(repr(float(x)) for x in row) for row in g.features)
        _write_atomic(feature_path, "".join(r + "\n" for r in rows))
    if label_path is not None and g.labels is not None:
        save_labels(g.labels, label_path)


def to_json_dict(g):
    return {
        "num_nodes": int(g.num_nodes),
        "edges": g.edges().tolist(),
        "features": g.features.tolist(),
        "labels": None if g.labels is None else g.labels.tolist(),
    }


def from_json_dict(doc, one_hot_cap=ONE_HOT_CAP):
    try:
        n = int(doc["num_nodes"])
    except (KeyError, TypeError, ValueError):
        raise GraphFormatError("JSON graph needs an integer 'num_nodes'")
    edges = doc.get("edges") or []
    for e in edges:
        if len(e) != 2:
            raise GraphFormatError(f"bad edge entry {e!r}")
    features = doc.get("features")
    if features is not None:
        features = np.array(features, dtype=np.float64).reshape(len(features), -1)
        if features.shape[0] != n:
            raise GraphFormatError(
                f"'features' has {features.shape[0]} rows, expected {n}")
    labels = doc.get("labels")
    if labels is not None and len(labels) != n:
        raise GraphFormatError(f"'labels' has {len(labels)} entries, expected {n}")
    return from_edges(n, edges, features, labels, one_hot_cap=one_hot_cap)


def save_json(g, path):
    _write_atomic(path, json.dumps(to_json_dict(g)))


def load_json(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(str(exc), exc.lineno, path)
    return from_json_dict(doc)


def load_graph(path, feature_path=None, label_path=None):
    """Load a JSON container (``.json``) or an edge-list file."""
    if os.fspath(path).endswith(".json"):
        return load_json(path)
    return load_edge_list(path, feature_path=feature_path, label_path=label_path)


def gcn_normalize(g):
    """Symmetric GCN operator ``D^-1/2 (A + I) D^-1/2`` as a CSR matrix.

    Entry ``(i, j)`` is ``1 / sqrt(d_i * d_j)`` with ``d = 1 + degree``;
    the product form keeps the result exactly symmetric.
    """
    n = g.num_nodes
    a_hat = (g.adjacency + sp.identity(n, format="csr")).tocsr()
    a_hat.sort_indices()
    d = 1.0 + g.degrees().astype(np.float64)
    rows = np.repeat(np.arange(n), np.diff(a_hat.indptr))
    a_hat.data = 1.0 / np.sqrt(d[rows] * d[a_hat.indices])
    return a_hat


def spmm(adj, dense):
    """Sparse-dense product ``adj @ dense``.

    Each output row is accumulated over ascending column index (CSR order),
    so results are reproducible bit for bit.
    """
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2 or adj.shape[1] != dense.shape[0]:
        raise ShapeError(
            f"cannot multiply {adj.shape} sparse by {dense.shape} dense")
    if dense.shape[1] == 0:
        return np.zeros((adj.shape[0], 0))
    return np.asarray(adj @ dense)


def induced_subgraph(g, nodes):
    """Subgraph on ``nodes`` (kept in the given order) and its edges."""
    nodes = np.asarray(nodes, dtype=np.int64)
    sub = g.adjacency[nodes][:, nodes].tocsr()
    sub.sort_indices()
    labels = None if g.labels is None else g.labels[nodes].copy()
    return Graph(sub, g.features[nodes].copy(), labels)
