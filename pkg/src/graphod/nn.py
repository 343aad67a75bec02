"""Dense and graph-convolution layers and encoder/decoder stacks."""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .exceptions import ConfigError, ShapeError

ACTIVATIONS = {
    "relu": ag.relu,
    "sigmoid": ag.sigmoid,
    "tanh": ag.tanh,
    "none": None,
}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int
    out_dim: int
    activation: str = "none"

    def __post_init__(self):
        if self.kind not in ("dense", "gcn"):
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(
                f"layer dims must be >= 1, got {self.in_dim}->{self.out_dim}")


def _activate(name, t):
    fn = ACTIVATIONS[name]
    return t if fn is None else fn(t)


def dense_layer_forward(h, weight, bias, activation="none"):
    return _activate(activation, ag.add_bias(ag.matmul(h, weight), bias))


def gcn_layer_forward(adj, h, weight, bias, activation="none"):
    """``activation(adj @ (h @ W) + b)``."""
    if adj.shape[1] != h.shape[0]:
        raise ShapeError(f"adjacency {adj.shape} does not match input {h.shape}")
    z = ag.spmm_ad(adj, ag.matmul(h, weight))
    return _activate(activation, ag.add_bias(z, bias))


class Layer:
    def __init__(self, spec, rng):
        self.spec = spec
        self.weight = ag.parameter(ag.glorot_uniform(spec.in_dim, spec.out_dim, rng))
        self.bias = ag.parameter(np.zeros((1, spec.out_dim)))

    def __call__(self, h, adj=None):
        if self.spec.kind == "gcn":
            if adj is None:
                raise ShapeError("gcn layer needs an adjacency operator")
            return gcn_layer_forward(adj, h, self.weight, self.bias,
                                     self.spec.activation)
        return dense_layer_forward(h, self.weight, self.bias, self.spec.activation)


class Network:
    """A chain of layers. GCN layers use the ``adj`` passed to ``__call__``."""

    def __init__(self, specs, rng):
        specs = list(specs)
        if not specs:
            raise ConfigError("a network needs at least one layer")
        for prev, nxt in zip(specs, specs[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ConfigError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        self.layers = [Layer(s, rng) for s in specs]

    @property
    def in_dim(self):
        return self.layers[0].spec.in_dim

    @property
    def out_dim(self):
        return self.layers[-1].spec.out_dim

    def __call__(self, h, adj=None):
        for layer in self.layers:
            h = layer(h, adj)
        return h

    def parameters(self):
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def num_parameters(self):
        return sum(p.value.size for p in self.parameters())


def stack_specs(kind, dims, hidden_activation="relu", out_activation="none"):
    """Layer specs for ``dims[0] -> dims[1] -> ... -> dims[-1]``."""
    specs = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        last = i == len(dims) - 2
        specs.append(LayerSpec(kind, a, b, out_activation if last else hidden_activation))
    return specs


def encoder_dims(in_dim, hidden_dim, embed_dim, num_layers):
    """Widths of an encoder of depth ``num_layers``.

    ``num_layers`` counts encoder layers only; the decoder mirrors it.
    """
    if num_layers < 1:
        raise ConfigError("num_layers must be >= 1")
    return [in_dim] + [hidden_dim] * (num_layers - 1) + [embed_dim]


def build_autoencoder(encoder_specs, decoder_specs, rng):
    """Glorot-initialised ``(encoder, decoder)``; encoder weights are drawn
    first."""
    encoder_specs, decoder_specs = list(encoder_specs), list(decoder_specs)
    if encoder_specs and decoder_specs and \
            encoder_specs[-1].out_dim != decoder_specs[0].in_dim:
        raise ConfigError(
            f"encoder output {encoder_specs[-1].out_dim} != decoder input "
            f"{decoder_specs[0].in_dim}")
    return Network(encoder_specs, rng), Network(decoder_specs, rng)


def mirrored_autoencoder(kind, in_dim, hidden_dim, embed_dim, num_layers, rng,
                         out_dim=None, out_activation="none"):
    """Encoder ``in -> hidden... -> embed`` and the mirrored decoder."""
    dims = encoder_dims(in_dim, hidden_dim, embed_dim, num_layers)
    dec_dims = dims[::-1]
    if out_dim is not None:
        dec_dims[-1] = out_dim
    return build_autoencoder(stack_specs(kind, dims),
                             stack_specs(kind, dec_dims, out_activation=out_activation),
                             rng)
