"""
From raw scores to probabilities and confidence
===============================================

Raw scores are only comparable within one model. ``predict_proba`` maps
them to [0, 1]; ``predict_confidence`` says how stable each binary
decision is.
"""

import numpy as np

from graphod import DetectorConfig, benchmark_graph, fit
from graphod import predict, predict_confidence, predict_proba

g, _, _ = benchmark_graph(seed=3)
f = fit(DetectorConfig(algorithm="gcnae", seed=0, contamination=0.1), g)

linear = predict_proba(f, g, method="linear")
unify = predict_proba(f, g, method="unify")
labels = predict(f, g)
conf = predict_confidence(f, g)

order = np.argsort(-f.train_scores)
print(" node   score  linear   unify  label  conf")
for i in np.r_[order[:5], order[28:33], order[-3:]]:
    print(f"{i:5d} {f.train_scores[i]:7.3f} {linear[i]:7.3f} {unify[i]:7.3f} "
          f"{labels[i]:6d} {conf[i]:5.3f}")

# decisions right at the threshold are the least certain
near = np.argsort(np.abs(f.train_scores - f.threshold))[:5]
print("mean confidence near threshold:", conf[near].mean().round(3))
print("mean confidence overall:      ", conf.mean().round(3))
