"""Evaluation metrics for outlier scores.

Top-k selections sort by descending score and break ties by ascending
node id, so results are deterministic.
"""

import numpy as np
from scipy.stats import rankdata

from .exceptions import ContractError


def _prepare(y, scores):
    y = np.asarray(y).astype(np.int64).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != scores.shape:
        raise ContractError(f"{y.size} labels vs {scores.size} scores")
    return y, scores


def top_k(scores, k):
    """Indices of the ``k`` highest scores, ties to the lower index."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return order[:k]


def _hits(y, scores, k):
    y, scores = _prepare(y, scores)
    pos = int(y.sum())
    if k is None:
        if pos == 0:
            raise ContractError("k defaults to the number of positives, which is 0")
        k = pos
    if k < 1 or k > y.size:
        raise ContractError(f"k must be in [1, {y.size}], got {k}")
    return int(y[top_k(scores, k)].sum()), k, pos


def eval_precision_at_k(y, scores, k=None):
    """Fraction of the top ``k`` that are true outliers.

    ``k`` defaults to the number of true outliers.
    """
    hits, k, _ = _hits(y, scores, k)
    return hits / k


def eval_recall_at_k(y, scores, k=None):
    """Fraction of the true outliers found in the top ``k``."""
    hits, _, pos = _hits(y, scores, k)
    if pos == 0:
        raise ContractError("recall is undefined without positives")
    return hits / pos


def eval_roc_auc(y, scores):
    """Mann-Whitney ROC-AUC with average ranks for ties."""
    y, scores = _prepare(y, scores)
    pos = int(y.sum())
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise ContractError("ROC-AUC needs both classes")
    ranks = rankdata(scores)
    return (ranks[y == 1].sum() - pos * (pos + 1) / 2.0) / (pos * neg)


def eval_average_precision(y, scores):
    """Step-wise area under the precision-recall curve, with tied scores
    entering the curve together."""
    y, scores = _prepare(y, scores)
    pos = int(y.sum())
    if pos == 0:
        raise ContractError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    s, t = scores[order], y[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(t)[last_of_group]
    seen = (np.arange(1, y.size + 1))[last_of_group]
    precision = tp / seen
    recall = tp / pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def metric_report(y, scores, k=None):
    """Metric JSON payload used by the command line."""
    y, scores = _prepare(y, scores)
    if k is None:
        k = int(y.sum())
    return {
        "roc_auc": float(eval_roc_auc(y, scores)),
        "precision_at_k": float(eval_precision_at_k(y, scores, k)),
        "recall_at_k": float(eval_recall_at_k(y, scores, k)),
        "k": int(k),
        "average_precision": float(eval_average_precision(y, scores)),
    }
