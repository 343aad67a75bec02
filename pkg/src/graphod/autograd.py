"""Reverse-mode automatic differentiation over dense 2-D float64 arrays.

Every op builds a new :class:`Tensor` that remembers its parents and a
closure mapping the output gradient to one gradient per parent. The sparse
operand of :func:`spmm_ad` is treated as a constant.

Conventions:

* the ReLU derivative at exactly 0 is 0;
* the only broadcasting is the row-wise bias in :func:`add_bias`;
* ``backward`` accumulates into ``.grad``; call :func:`zero_grad` between
  optimisation steps.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import ContractError, ShapeError

__all__ = [
    "Tensor", "constant", "parameter",
    "matmul", "spmm_ad", "add", "add_bias", "relu", "sigmoid", "tanh", "sub",
    "square", "row_sum", "mean_all", "scalar_mul", "frobenius_sq", "transpose",
    "backward", "zero_grad", "AdamState", "adam_step",
    "seeded_rng", "glorot_uniform",
]


class Tensor:
    """A node in the computation graph.

    ``value`` is a 2-D float64 array. ``grad`` has the same shape and reads
    as zeros until a backward pass writes to it.
    """

    __slots__ = ("value", "requires_grad", "op", "parents", "_backward", "_grad")

    def __init__(self, value, requires_grad=False, op="leaf", parents=(),
                 backward_fn=None):
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        if value.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got ndim={value.ndim}")
        self.value = value
        self.requires_grad = requires_grad
        self.op = op
        self.parents = tuple(parents)
        self._backward = backward_fn
        self._grad = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def is_leaf(self):
        return not self.parents

    @property
    def grad(self):
        if self._grad is None:
            self._grad = np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, g):
        self._grad = g

    def item(self):
        return float(self.value[0, 0])

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __mul__(self, c):
        return scalar_mul(self, c)

    __rmul__ = __mul__


def constant(value):
    return Tensor(value, requires_grad=False)


def parameter(value):
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True)


def _make(value, op, parents, backward_fn):
    needs = any(p.requires_grad for p in parents)
    return Tensor(value, requires_grad=needs, op=op, parents=parents,
                  backward_fn=backward_fn if needs else None)


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    return _make(a.value @ b.value, "matmul", (a, b),
                 lambda g: (g @ b.value.T, a.value.T @ g))


def spmm_ad(adj, h):
    """``adj @ h`` for a constant scipy sparse ``adj``."""
    if adj.shape[1] != h.shape[0]:
        raise ShapeError(f"spmm: {adj.shape} @ {h.shape}")
    adj_t = adj.T.tocsr()
    return _make(np.asarray(adj @ h.value), "spmm", (h,),
                 lambda g: (np.asarray(adj_t @ g),))


def add(a, b):
    _same_shape(a, b, "add")
    return _make(a.value + b.value, "add", (a, b), lambda g: (g, g))


def sub(a, b):
    _same_shape(a, b, "sub")
    return _make(a.value - b.value, "sub", (a, b), lambda g: (g, -g))


def add_bias(x, b):
    """``x + b`` with ``b`` of shape ``(1, cols)`` broadcast over rows."""
    if b.shape != (1, x.shape[1]):
        raise ShapeError(f"add_bias: bias {b.shape} for input {x.shape}")
    return _make(x.value + b.value, "add_bias", (x, b),
                 lambda g: (g, g.sum(axis=0, keepdims=True)))


def relu(x):
    mask = x.value > 0
    return _make(np.where(mask, x.value, 0.0), "relu", (x,),
                 lambda g: (g * mask,))


def sigmoid(x):
    s = expit(x.value)
    return _make(s, "sigmoid", (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x):
    t = np.tanh(x.value)
    return _make(t, "tanh", (x,), lambda g: (g * (1.0 - t * t),))


def square(x):
    return _make(x.value * x.value, "square", (x,),
                 lambda g: (2.0 * x.value * g,))


def row_sum(x):
    """Sum each row: ``(n, d) -> (n, 1)``."""
    cols = x.shape[1]
    return _make(x.value.sum(axis=1, keepdims=True), "row_sum", (x,),
                 lambda g: (np.repeat(g, cols, axis=1),))


def mean_all(x):
    size = x.value.size
    shape = x.shape
    return _make(np.array([[x.value.mean()]]), "mean_all", (x,),
                 lambda g: (np.full(shape, g[0, 0] / size),))


def scalar_mul(x, c):
    c = float(c)
    return _make(c * x.value, "scalar_mul", (x,), lambda g: (c * g,))


def frobenius_sq(x):
    v = x.value
    return _make(np.array([[np.sum(v * v)]]), "frobenius_sq", (x,),
                 lambda g: (2.0 * g[0, 0] * v,))


def transpose(x):
    return _make(x.value.T.copy(), "transpose", (x,), lambda g: (g.T,))


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate ``d loss / d t`` into ``t.grad`` for every reachable tensor
    that requires a gradient."""
    if loss.shape != (1, 1):
        raise ContractError(f"backward needs a 1x1 loss, got {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topological(loss)
    grads = {id(loss): np.ones((1, 1))}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        node.grad = node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node.parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            prev = grads.get(id(parent))
            grads[id(parent)] = pg if prev is None else prev + pg


def zero_grad(params):
    for p in params:
        p.grad = None


@dataclass
class AdamState:
    """Adam moments for an ordered list of parameters."""

    m: list
    v: list
    t: int = 0
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, learning_rate=0.005, beta1=0.9, beta2=0.999,
                   eps=1e-8):
        return cls(m=[np.zeros_like(p.value) for p in params],
                   v=[np.zeros_like(p.value) for p in params],
                   learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                   eps=eps)


def adam_step(state, params):
    """One bias-corrected Adam update of ``params`` in order."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for i, p in enumerate(params):
        g = p.grad
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        p.value = p.value - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


def seeded_rng(seed):
    """PCG64 stream; identical seeds give identical draws on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def glorot_uniform(rows, cols, rng):
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))
