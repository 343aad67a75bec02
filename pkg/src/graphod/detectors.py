"""Training and scoring for the five node-level detectors.

Each detector class owns its networks and knows how to build a loss for a
batch (``None`` meaning the whole graph) and how to score every node with
its current weights. :func:`training_loop` drives them.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from . import autograd as ag
from .exceptions import ContractError, TrainingDivergedError
from .nn import Network, mirrored_autoencoder, stack_specs, encoder_dims
from .processing import DENSE_CAP, process_graph, structure_target
from .sampling import node_batches

SCORE_CHUNK = 1024
O_FLOOR = 1e-6


@dataclass
class EpochTrace:
    epoch: int
    loss: float
    terms: Optional[dict] = field(default=None)


def traces_to_csv(traces):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "loss"])
    for t in traces:
        writer.writerow([t.epoch, repr(float(t.loss))])
    return buf.getvalue()


def training_loop(loss_builder, params, config, sampler=None,
                  on_epoch_start=None, on_epoch_end=None):
    """Run ``config.epochs`` epochs of forward, backward and Adam steps.

    ``loss_builder(batch)`` returns ``(loss_tensor, terms)``. ``sampler(epoch)``
    yields the epoch's batches; without one every epoch is a single
    full-graph step with ``batch=None``. The epoch loss is the mean of its
    batch losses.
    """
    state = ag.AdamState.for_params(params, learning_rate=config.learning_rate)
    traces = []
    for epoch in range(config.epochs):
        if on_epoch_start is not None:
            on_epoch_start(epoch)
        batches = [None] if sampler is None else list(sampler(epoch))
        losses = []
        term_sums = {}
        for batch in batches:
            ag.zero_grad(params)
            loss, terms = loss_builder(batch)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, value)
            ag.backward(loss)
            ag.adam_step(state, params)
            losses.append(value)
            for k, v in (terms or {}).items():
                term_sums[k] = term_sums.get(k, 0.0) + v
        nb = len(batches)
        trace = EpochTrace(epoch, sum(losses) / nb,
                           {k: v / nb for k, v in term_sums.items()} or None)
        traces.append(trace)
        if on_epoch_end is not None:
            on_epoch_end(epoch, trace)
    return traces


def _row_norms(diff):
    return np.sqrt(np.sum(diff * diff, axis=1))


def ceil_index(x):
    # guard against products like 0.9 * 10 landing a hair above an integer
    return math.ceil(round(x, 9))


class BaseModel:
    """Shared plumbing. Subclasses set ``name`` and ``induced_batches`` and
    implement ``parameters``, ``batch_loss`` and ``score``."""

    name = None
    induced_batches = True

    def __init__(self, config, g, processed, rng):
        self.config = config
        self.graph = g
        self.processed = processed
        self.rng = rng
        self.num_nodes = g.num_nodes
        self.feature_dim = g.feature_dim

    def parameters(self):
        raise NotImplementedError

    def batch_loss(self, batch):
        raise NotImplementedError

    def score(self, g, processed):
        """Return ``(scores, extras)`` for every node of ``g``."""
        raise NotImplementedError

    def setup(self):
        pass

    def begin_epoch(self, epoch):
        pass

    def end_epoch(self, epoch, trace):
        pass

    def _batch_inputs(self, batch):
        if batch is None:
            return self.processed
        return process_graph(batch.subgraph, self.name)

    def _sampler(self):
        bs = self.config.batch_size
        if not bs:
            return None
        return lambda epoch: node_batches(self.graph, bs, self.config.seed, epoch,
                                          induced=self.induced_batches)

    def train(self):
        self.setup()
        return training_loop(self.batch_loss, self.parameters(), self.config,
                             sampler=self._sampler(),
                             on_epoch_start=self.begin_epoch,
                             on_epoch_end=self.end_epoch)

    def state_arrays(self):
        return {f"param_{i}": p.value for i, p in enumerate(self.parameters())}


class AutoencoderModel(BaseModel):
    """Feature autoencoder scored by per-node reconstruction error.

    ``kind="dense"`` is MLPAE (edges ignored), ``kind="gcn"`` is GCNAE.
    """

    kind = "dense"

    def __init__(self, config, g, processed, rng):
        super().__init__(config, g, processed, rng)
        self.encoder, self.decoder = mirrored_autoencoder(
            self.kind, g.feature_dim, config.hidden_dim, config.embed_dim,
            config.num_layers, rng)

    def parameters(self):
        return self.encoder.parameters() + self.decoder.parameters()

    def _reconstruct(self, x, adj):
        return self.decoder(self.encoder(x, adj), adj)

    def _inputs(self, batch):
        if self.kind == "dense":
            x = self.processed.features
            return (x if batch is None else x[batch.nodes]), None
        p = self._batch_inputs(batch)
        return p.features, p.norm_adj

    def batch_loss(self, batch):
        x, adj = self._inputs(batch)
        xt = ag.constant(x)
        diff = ag.sub(xt, self._reconstruct(xt, adj))
        loss = ag.scalar_mul(ag.frobenius_sq(diff), 1.0 / x.shape[0])
        return loss, None

    def score(self, g, processed):
        x = ag.constant(processed.features)
        recon = self._reconstruct(x, processed.norm_adj).value
        return _row_norms(processed.features - recon), {}


class MLPAEModel(AutoencoderModel):
    name = "mlpae"
    kind = "dense"
    induced_batches = False


class GCNAEModel(AutoencoderModel):
    name = "gcnae"
    kind = "gcn"


def combine_dominant_errors(attr_error, struct_error, alpha):
    return alpha * np.asarray(attr_error) + (1.0 - alpha) * np.asarray(struct_error)


class DominantModel(BaseModel):
    """Shared GCN encoder, GCN attribute decoder and inner-product
    structure decoder ``sigmoid(Z Z^T)`` against the target ``A + I``."""

    name = "dominant"

    def __init__(self, config, g, processed, rng):
        super().__init__(config, g, processed, rng)
        if not config.batch_size and g.num_nodes > DENSE_CAP:
            raise ContractError(
                f"dominant needs batch_size > 0 above {DENSE_CAP} nodes")
        self.encoder, self.attr_decoder = mirrored_autoencoder(
            "gcn", g.feature_dim, config.hidden_dim, config.embed_dim,
            config.num_layers, rng)

    def parameters(self):
        return self.encoder.parameters() + self.attr_decoder.parameters()

    def batch_loss(self, batch):
        p = self._batch_inputs(batch)
        n = p.num_nodes
        alpha = self.config.alpha
        x = ag.constant(p.features)
        z = self.encoder(x, p.norm_adj)
        x_hat = self.attr_decoder(z, p.norm_adj)
        a_hat = ag.sigmoid(ag.matmul(z, ag.transpose(z)))
        attr = ag.scalar_mul(ag.frobenius_sq(ag.sub(x, x_hat)), 1.0 / n)
        struct = ag.scalar_mul(
            ag.frobenius_sq(ag.sub(ag.constant(p.dense_adj), a_hat)), 1.0 / n)
        loss = ag.add(ag.scalar_mul(attr, alpha), ag.scalar_mul(struct, 1.0 - alpha))
        return loss, {"attribute": attr.item(), "structure": struct.item()}

    def components(self, g, processed):
        """Per-node attribute and structure reconstruction errors."""
        x = ag.constant(processed.features)
        z = self.encoder(x, processed.norm_adj)
        x_hat = self.attr_decoder(z, processed.norm_adj).value
        attr = _row_norms(processed.features - x_hat)
        zv = z.value
        n = zv.shape[0]
        struct = np.empty(n)
        for start in range(0, n, SCORE_CHUNK):
            rows = np.arange(start, min(start + SCORE_CHUNK, n))
            s_hat = expit(zv[rows] @ zv.T)
            struct[rows] = _row_norms(structure_target(g.adjacency, rows) - s_hat)
        return attr, struct

    def score(self, g, processed):
        attr, struct = self.components(g, processed)
        scores = combine_dominant_errors(attr, struct, self.config.alpha)
        return scores, {"attribute_error": attr, "structure_error": struct}


def ocgnn_radius(sq_dist, beta):
    """Squared radius leaving exactly ``ceil(beta * n)`` nodes strictly
    outside when distances are distinct."""
    d = np.sort(np.asarray(sq_dist, dtype=np.float64))
    n = d.size
    k = n - ceil_index(beta * n)
    return float(d[k - 1]) if k >= 1 else 0.0


def ocgnn_objective(sq_dist, radius_sq, beta):
    """Loss and per-node scores of the one-class hypersphere objective."""
    sq_dist = np.asarray(sq_dist, dtype=np.float64)
    scores = sq_dist - radius_sq
    loss = radius_sq + np.sum(np.maximum(scores, 0.0)) / (beta * sq_dist.size)
    return float(loss), scores


class OCGNNModel(BaseModel):
    """GCN embedding pulled inside a hypersphere of frozen centre."""

    name = "ocgnn"

    def __init__(self, config, g, processed, rng):
        super().__init__(config, g, processed, rng)
        dims = encoder_dims(g.feature_dim, config.hidden_dim, config.embed_dim,
                            config.num_layers)
        self.encoder = Network(stack_specs("gcn", dims), rng)
        self.center = None
        self.radius_sq = 0.0

    def parameters(self):
        return self.encoder.parameters()

    def embed(self, processed):
        return self.encoder(ag.constant(processed.features), processed.norm_adj).value

    def squared_distances(self, processed):
        diff = self.embed(processed) - self.center
        return np.sum(diff * diff, axis=1)

    def refresh_radius(self):
        self.radius_sq = ocgnn_radius(self.squared_distances(self.processed),
                                      self.config.beta)

    def setup(self):
        self.center = self.embed(self.processed).mean(axis=0, keepdims=True)
        self.refresh_radius()

    def begin_epoch(self, epoch):
        if epoch > 0 and epoch % self.config.radius_refresh == 0:
            self.refresh_radius()

    def batch_loss(self, batch):
        return self._loss(self._batch_inputs(batch)), None

    def _loss(self, p):
        n = p.num_nodes
        z = self.encoder(ag.constant(p.features), p.norm_adj)
        sq = ag.row_sum(ag.square(ag.add_bias(z, ag.constant(-self.center))))
        hinge = ag.relu(ag.add_bias(sq, ag.constant([[-self.radius_sq]])))
        total = ag.matmul(ag.constant(np.ones((1, n))), hinge)
        return ag.add(ag.scalar_mul(total, 1.0 / (self.config.beta * n)),
                      ag.constant([[self.radius_sq]]))

    def score(self, g, processed):
        sq = self.squared_distances(processed)
        _, scores = ocgnn_objective(sq, self.radius_sq, self.config.beta)
        final_loss = self._loss(processed).item()
        return scores, {"radius_sq": self.radius_sq, "final_loss": final_loss,
                        "squared_distance": sq}

    def state_arrays(self):
        out = super().state_arrays()
        out["center"] = self.center
        out["radius_sq"] = np.array(self.radius_sq)
        return out


def normalize_outlierness(errors):
    """Closed-form outlierness update: values proportional to ``errors``,
    summing to one; uniform when every error is zero."""
    errors = np.asarray(errors, dtype=np.float64)
    total = errors.sum()
    if total <= 0:
        return np.full(errors.shape, 1.0 / errors.size)
    return errors / total


class DONEModel(BaseModel):
    """Structure and attribute autoencoders with outlierness-weighted
    reconstruction, homophily and alignment losses."""

    name = "done"

    def __init__(self, config, g, processed, rng):
        super().__init__(config, g, processed, rng)
        n = g.num_nodes
        if not config.batch_size and n > DENSE_CAP:
            raise ContractError(f"done needs batch_size > 0 above {DENSE_CAP} nodes")
        self.struct_encoder, self.struct_decoder = mirrored_autoencoder(
            "dense", n, config.hidden_dim, config.embed_dim, config.num_layers,
            rng, out_activation="sigmoid")
        self.attr_encoder, self.attr_decoder = mirrored_autoencoder(
            "dense", g.feature_dim, config.hidden_dim, config.embed_dim,
            config.num_layers, rng)
        uniform = np.full(n, 1.0 / n)
        self.o_struct = uniform.copy()
        self.o_attr = uniform.copy()
        self.o_comb = uniform.copy()
        self.o_history = []
        self._epoch_errors = None

    def parameters(self):
        return (self.struct_encoder.parameters() + self.struct_decoder.parameters()
                + self.attr_encoder.parameters() + self.attr_decoder.parameters())

    def _forward(self, a_rows, x, mean_op):
        """Return loss-ready per-node error tensors (each ``n x 1``)."""
        a = ag.constant(a_rows)
        xt = ag.constant(x)
        hs = self.struct_encoder(a)
        ha = self.attr_encoder(xt)
        a_hat = self.struct_decoder(hs)
        x_hat = self.attr_decoder(ha)
        return {
            "struct_recon": ag.row_sum(ag.square(ag.sub(a, a_hat))),
            "attr_recon": ag.row_sum(ag.square(ag.sub(xt, x_hat))),
            "struct_homophily": ag.row_sum(ag.square(ag.sub(hs, ag.spmm_ad(mean_op, hs)))),
            "attr_homophily": ag.row_sum(ag.square(ag.sub(ha, ag.spmm_ad(mean_op, ha)))),
            "alignment": ag.row_sum(ag.square(ag.sub(hs, ha))),
        }

    def _weights(self, nodes):
        ws, wa, wc = (np.log(1.0 / np.maximum(o[nodes], O_FLOOR))
                      for o in (self.o_struct, self.o_attr, self.o_comb))
        return {"struct_recon": ws, "attr_recon": wa, "struct_homophily": ws,
                "attr_homophily": wa, "alignment": wc}

    def _inputs(self, batch):
        g = self.graph
        if batch is None:
            nodes = np.arange(g.num_nodes)
            mean_op = self.processed.neighbor_mean
            deg = g.degrees()
        else:
            nodes = batch.nodes
            p = self._batch_inputs(batch)
            mean_op = p.neighbor_mean
            deg = batch.subgraph.degrees()
        a_rows = g.adjacency[nodes].toarray()
        x = g.features[nodes]
        return nodes, a_rows, x, mean_op, (deg > 0).astype(np.float64)

    def batch_loss(self, batch):
        nodes, a_rows, x, mean_op, mask = self._inputs(batch)
        n = len(nodes)
        err = self._forward(a_rows, x, mean_op)
        weights = self._weights(nodes)
        loss = None
        terms = {}
        for name, e in err.items():
            w = weights[name]
            if name.endswith("homophily"):
                w = w * mask
                e_val = e.value[:, 0] * mask
            else:
                e_val = e.value[:, 0]
            term = ag.scalar_mul(ag.matmul(ag.constant(w[None, :]), e), 1.0 / n)
            terms[name] = term.item()
            loss = term if loss is None else ag.add(loss, term)
            self._stash_errors(name, nodes, e_val)
        return loss, terms

    def _stash_errors(self, name, nodes, values):
        if self._epoch_errors is None:
            self._epoch_errors = {k: np.zeros(self.num_nodes) for k in (
                "struct_recon", "attr_recon", "struct_homophily",
                "attr_homophily", "alignment")}
        self._epoch_errors[name][nodes] = values

    @staticmethod
    def outlierness(errors):
        """Closed-form ``(o_struct, o_attr, o_comb)`` from per-node errors."""
        return (normalize_outlierness(errors["struct_recon"] + errors["struct_homophily"]),
                normalize_outlierness(errors["attr_recon"] + errors["attr_homophily"]),
                normalize_outlierness(errors["alignment"]))

    def end_epoch(self, epoch, trace):
        self.o_struct, self.o_attr, self.o_comb = self.outlierness(self._epoch_errors)
        self._epoch_errors = None
        self.o_history.append((self.o_struct.sum(), self.o_attr.sum(),
                               self.o_comb.sum()))

    def node_errors(self, g, processed):
        """Per-node error terms of every node under the current weights."""
        n = g.num_nodes
        mask = (g.degrees() > 0).astype(np.float64)
        parts = {}
        hs_all = np.empty((n, self.struct_encoder.out_dim))
        a_hat_err = np.empty(n)
        for start in range(0, n, SCORE_CHUNK):
            rows = np.arange(start, min(start + SCORE_CHUNK, n))
            a_rows = g.adjacency[rows].toarray()
            hs = self.struct_encoder(ag.constant(a_rows)).value
            a_hat = self.struct_decoder(ag.constant(hs)).value
            hs_all[rows] = hs
            a_hat_err[rows] = np.sum((a_rows - a_hat) ** 2, axis=1)
        x = processed.features
        ha = self.attr_encoder(ag.constant(x)).value
        x_hat = self.attr_decoder(ag.constant(ha)).value
        mean_op = processed.neighbor_mean
        parts["struct_recon"] = a_hat_err
        parts["attr_recon"] = np.sum((x - x_hat) ** 2, axis=1)
        parts["struct_homophily"] = np.sum((hs_all - mean_op @ hs_all) ** 2, axis=1) * mask
        parts["attr_homophily"] = np.sum((ha - mean_op @ ha) ** 2, axis=1) * mask
        parts["alignment"] = np.sum((hs_all - ha) ** 2, axis=1)
        return parts

    def score(self, g, processed):
        o_s, o_a, o_c = self.outlierness(self.node_errors(g, processed))
        scores = (o_s + o_a + o_c) / 3.0
        return scores, {"o_struct": o_s, "o_attr": o_a, "o_comb": o_c,
                        "o_history": list(self.o_history)}


DETECTORS = {cls.name: cls for cls in (
    MLPAEModel, GCNAEModel, DominantModel, OCGNNModel, DONEModel)}


def _run(algorithm, g, config):
    processed = process_graph(g, algorithm)
    det = DETECTORS[algorithm](config, g, processed, ag.seeded_rng(config.seed))
    traces = det.train()
    scores, _ = det.score(g, processed)
    return scores, traces


def mlpae_train_score(g, config):
    return _run("mlpae", g, config)[0]


def gcnae_train_score(g, config):
    return _run("gcnae", g, config)[0]


def dominant_train_score(g, config):
    return _run("dominant", g, config)[0]


def ocgnn_train_score(g, config):
    return _run("ocgnn", g, config)[0]


def done_train_score(g, config):
    return _run("done", g, config)[0]
