"""Estimator-style wrappers around :mod:`graphod.api`.

>>> from graphod.models import DOMINANT
>>> model = DOMINANT(num_layers=2, epochs=50)
>>> model.fit(g)                          # doctest: +SKIP
>>> labels = model.predict(g)             # doctest: +SKIP
"""

from . import api
from .config import DetectorConfig


class GraphDetector:
    """Base estimator; keyword arguments are :class:`DetectorConfig` fields.

    After :meth:`fit`, ``decision_score_``, ``threshold_`` and ``label_``
    hold the training-graph results.
    """

    algorithm = None

    def __init__(self, **params):
        self.config = DetectorConfig(algorithm=self.algorithm, **params)
        self.fitted_ = None

    def __repr__(self):
        return f"{type(self).__name__}({self.config})"

    def fit(self, g, verbose=False):
        self.fitted_ = api.fit(self.config, g, verbose=verbose)
        self.decision_score_ = self.fitted_.train_scores
        self.threshold_ = self.fitted_.threshold
        self.label_ = self.fitted_.train_labels
        return self

    def _require_fit(self):
        if self.fitted_ is None:
            raise RuntimeError(f"{type(self).__name__} is not fitted yet")
        return self.fitted_

    def decision_function(self, g):
        return api.decision_function(self._require_fit(), g)

    def predict(self, g):
        return api.predict(self._require_fit(), g)

    def predict_proba(self, g, method=None):
        return api.predict_proba(self._require_fit(), g, method)

    def predict_confidence(self, g):
        return api.predict_confidence(self._require_fit(), g)


class MLPAE(GraphDetector):
    """Multilayer-perceptron autoencoder on node features alone."""

    algorithm = "mlpae"


class GCNAE(GraphDetector):
    """Graph-convolutional autoencoder reconstructing node features."""

    algorithm = "gcnae"


class DOMINANT(GraphDetector):
    """GCN autoencoder with joint attribute and structure reconstruction."""

    algorithm = "dominant"


class OCGNN(GraphDetector):
    """One-class GCN: distance beyond a hypersphere around the embedding
    centre."""

    algorithm = "ocgnn"


class DONE(GraphDetector):
    algorithm = "done"
