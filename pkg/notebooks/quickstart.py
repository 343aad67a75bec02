"""
Detecting planted outliers with DOMINANT
========================================

Build a small attributed graph, plant outliers, train a detector and
look at how well it ranks them.
"""

import numpy as np

from graphod import DOMINANT, community_graph, gen_attribute_outliers
from graphod import eval_precision_at_k, eval_recall_at_k, eval_roc_auc

# 300 nodes in 5 communities, 16 features per node
g = community_graph(num_nodes=300, seed=0)
print(g.num_nodes, "nodes,", g.num_edges, "edges")

# copy far-away features onto 15 random nodes
g, y = gen_attribute_outliers(g, n=15, k=50, seed=1)

model = DOMINANT(epochs=100, seed=0).fit(g)
scores = model.decision_function(g)

print("roc auc     ", round(eval_roc_auc(y, scores), 3))
print("precision@k ", round(eval_precision_at_k(y, scores), 3))
print("recall@k    ", round(eval_recall_at_k(y, scores), 3))

# binary labels use the contamination threshold (10% by default)
labels = model.predict(g)
print("flagged", labels.sum(), "nodes, threshold", round(model.threshold_, 4))
print("top 5 nodes:", np.argsort(-scores)[:5])
