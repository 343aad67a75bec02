"""
The autodiff engine underneath
==============================

Every model is built from a handful of differentiable ops on 2-D arrays.
Here we fit a one-layer GCN by hand and check a gradient numerically.
"""

import numpy as np

from graphod import autograd as ag
from graphod import from_edges, gcn_normalize

g = from_edges(4, [(0, 1), (1, 2), (2, 3)], np.eye(4))
adj = gcn_normalize(g)
print(np.round(adj.toarray(), 3))

rng = ag.seeded_rng(0)
W = ag.parameter(ag.glorot_uniform(4, 2, rng))
target = ag.constant([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
x = ag.constant(g.features)

state = ag.AdamState.for_params([W], learning_rate=0.05)
for step in range(201):
    ag.zero_grad([W])
    out = ag.sigmoid(ag.spmm_ad(adj, ag.matmul(x, W)))
    loss = ag.mean_all(ag.square(ag.sub(out, target)))
    ag.backward(loss)
    ag.adam_step(state, [W])
    if step % 50 == 0:
        print(step, round(loss.item(), 5))

# compare one gradient entry with a central difference
def f(w):
    h = adj @ (g.features @ w)
    return np.mean((1 / (1 + np.exp(-h)) - target.value) ** 2)

ag.zero_grad([W])
ag.backward(ag.mean_all(ag.square(ag.sub(ag.sigmoid(ag.spmm_ad(adj, ag.matmul(x, W))), target))))
e = np.zeros_like(W.value)
e[0, 1] = 1e-5
numeric = (f(W.value + e) - f(W.value - e)) / 2e-5
print("autodiff", W.grad[0, 1], "numeric", numeric)
