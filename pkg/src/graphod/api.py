"""Detector lifecycle: fit, raw scores, labels, probabilities, confidence.

Scoring is transductive. ``decision_function`` and friends take the graph
the detector was fitted on and recompute scores with the trained weights.
All calibration uses statistics of the training scores.
"""

import csv
import functools
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import autograd as ag
from .config import DetectorConfig
from .detectors import DETECTORS, ceil_index
from .exceptions import ContractError
from .processing import process_graph

WEIGHTS_FORMAT_VERSION = 1


class CalibrationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class FittedDetector:
    config: DetectorConfig
    model: object
    train_scores: np.ndarray
    threshold: float
    score_mean: float
    score_std: float
    sorted_train_scores: np.ndarray
    processed: object
    trace: list
    num_nodes: int
    feature_dim: int
    extras: dict = field(default_factory=dict)

    @property
    def train_labels(self):
        return (self.train_scores > self.threshold).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ScoreReport:
    scores: np.ndarray
    labels: np.ndarray
    proba: np.ndarray
    confidence: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["node_id", "score", "label", "proba", "confidence"])
        for i, (s, y, p, c) in enumerate(zip(self.scores, self.labels,
                                             self.proba, self.confidence)):
            writer.writerow([i, repr(float(s)), int(y), repr(float(p)),
                             repr(float(c))])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "scores": [float(v) for v in self.scores],
            "labels": [int(v) for v in self.labels],
            "proba": [float(v) for v in self.proba],
            "confidence": [float(v) for v in self.confidence],
        })


def read_scores_csv(path):
    """Read the ``score`` column of a :meth:`ScoreReport.to_csv` file."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and "score" not in rows[0]:
        raise ContractError(f"{path}: no 'score' column")
    rows.sort(key=lambda r: int(r["node_id"]))
    return np.array([float(r["score"]) for r in rows])


def threshold_index(n, contamination):
    """1-based rank of the train score used as decision threshold."""
    return min(n, max(1, ceil_index((1.0 - contamination) * n)))


def fit(config, g, verbose=False):
    """Train ``config.algorithm`` on ``g`` and collect score statistics."""
    if g.num_nodes == 0:
        raise ContractError("cannot fit on an empty graph")
    processed = process_graph(g, config.algorithm)
    model = DETECTORS[config.algorithm](config, g, processed,
                                        ag.seeded_rng(config.seed))
    trace = model.train()
    if verbose:
        for t in trace:
            print(f"epoch {t.epoch:4d}  loss {t.loss:.6f}", file=sys.stderr)
    scores, extras = model.score(g, processed)
    sorted_scores = np.sort(scores)
    k = threshold_index(g.num_nodes, config.contamination)
    return FittedDetector(
        config=config,
        model=model,
        train_scores=scores,
        threshold=float(sorted_scores[k - 1]),
        score_mean=float(np.mean(scores)),
        score_std=float(np.std(scores)),
        sorted_train_scores=sorted_scores,
        processed=processed,
        trace=trace,
        num_nodes=g.num_nodes,
        feature_dim=g.feature_dim,
        extras=extras,
    )


def _check_graph(f, g):
    if g.num_nodes != f.num_nodes or g.feature_dim != f.feature_dim:
        raise ContractError(
            f"graph has {g.num_nodes} nodes x {g.feature_dim} features, detector "
            f"was fitted on {f.num_nodes} x {f.feature_dim} (scoring is "
            "transductive)")


def decision_function(f, g):
    """Raw outlier scores; higher is more outlying."""
    _check_graph(f, g)
    processed = process_graph(g, f.config.algorithm)
    scores, _ = f.model.score(g, processed)
    return scores


def predict(f, g):
    return labels_from_scores(decision_function(f, g), f.threshold)


def labels_from_scores(scores, threshold):
    """1 where the score is strictly above ``threshold``."""
    return (np.asarray(scores) > threshold).astype(np.int64)


def linear_proba(scores, train_scores):
    lo, hi = float(np.min(train_scores)), float(np.max(train_scores))
    scores = np.asarray(scores, dtype=np.float64)
    if hi == lo:
        return np.zeros_like(scores)
    return np.clip((scores - lo) / (hi - lo), 0.0, 1.0)


def unify_proba(scores, mean, std):
    """Gaussian-erf unification ``max(0, erf((s - mean) / (std * sqrt 2)))``."""
    scores = np.asarray(scores, dtype=np.float64)
    if std == 0:
        warnings.warn("train scores have zero spread; probabilities set to 0",
                      CalibrationWarning, stacklevel=2)
        return np.zeros_like(scores)
    return np.maximum(0.0, erf((scores - mean) / (std * math.sqrt(2.0))))


def predict_proba(f, g, method=None):
    method = method or f.config.proba_method
    scores = decision_function(f, g)
    if method == "linear":
        return linear_proba(scores, f.train_scores)
    if method == "unify":
        return unify_proba(scores, f.score_mean, f.score_std)
    raise ContractError(f"unknown probability method {method!r}")


def binomial_tail(n, p, t):
    """``P(Y >= t)`` for ``Y ~ Binomial(n, p)`` by direct summation of the
    mass function (evaluated in log space to avoid under/overflow)."""
    if t <= 0:
        return 1.0
    if t > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lf = _log_factorials(n)
    k = np.arange(t, n + 1)
    log_terms = (lf[n] - lf[k] - lf[n - k]
                 + k * math.log(p) + (n - k) * math.log1p(-p))
    return min(1.0, math.fsum(np.exp(log_terms)))


@functools.lru_cache(maxsize=8)
def _log_factorials(n):
    return np.array([math.lgamma(i + 1) for i in range(n + 1)])


def outlier_confidence(scores, sorted_train_scores, contamination):
    """Outlier-side confidence ``P(Y >= t)`` per score.

    ``p_s = (1 + #{train <= s}) / (n + 2)`` and ``t = ceil(n (1 - gamma))``.
    """
    n = len(sorted_train_scores)
    counts = np.searchsorted(sorted_train_scores, scores, side="right")
    t = ceil_index(n * (1.0 - contamination))
    cache = {}
    out = np.empty(len(counts))
    for i, c in enumerate(counts):
        c = int(c)
        if c not in cache:
            cache[c] = binomial_tail(n, (1 + c) / (n + 2), t)
        out[i] = cache[c]
    return out


def predict_confidence(f, g):
    """Confidence in each predicted label: ``C`` for predicted outliers,
    ``1 - C`` for predicted inliers."""
    scores = decision_function(f, g)
    c = outlier_confidence(scores, f.sorted_train_scores, f.config.contamination)
    labels = labels_from_scores(scores, f.threshold)
    return np.where(labels == 1, c, 1.0 - c)


def score_report(f, g, method=None):
    scores = decision_function(f, g)
    labels = labels_from_scores(scores, f.threshold)
    method = method or f.config.proba_method
    if method == "linear":
        proba = linear_proba(scores, f.train_scores)
    else:
        proba = unify_proba(scores, f.score_mean, f.score_std)
    c = outlier_confidence(scores, f.sorted_train_scores, f.config.contamination)
    return ScoreReport(scores, labels, proba, np.where(labels == 1, c, 1.0 - c))


def save_weights(f, path):
    """Versioned ``.npz`` dump of the trained parameters and score stats."""
    arrays = dict(f.model.state_arrays())
    arrays.update(
        format_version=np.array(WEIGHTS_FORMAT_VERSION),
        algorithm=np.array(f.config.algorithm),
        config=np.array(json.dumps(f.config.to_dict(), sort_keys=True)),
        threshold=np.array(f.threshold),
        score_mean=np.array(f.score_mean),
        score_std=np.array(f.score_std),
        train_scores=f.train_scores,
    )
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def load_weights(path):
    with np.load(path) as data:
        out = {k: data[k] for k in data.files}
    version = int(out["format_version"])
    if version != WEIGHTS_FORMAT_VERSION:
        raise ContractError(f"unsupported weight dump version {version}")
    return out
