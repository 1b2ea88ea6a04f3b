"""Candidate-node classifier: mean-aggregating GraphSAGE encoder plus a small sigmoid MLP head.

The head sees each node's embedding concatenated with the mean embedding of its graph.
Training labels come from :func:`aimkit.centrality.label_candidates`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .centrality import candidate_count
from .errors import ConfigError
from .graph import Graph
from .nn import (AdamState, DenseLayer, adam_step, bce_logits, init_dense, load_params,
                 mlp_backward, mlp_forward, save_params)
from .sage import NUM_FEATURES, SageLayer, SageParams, compute_features, encode_backward, encode_forward

__all__ = ["ClassifierParams", "ClassifierConfig", "init_classifier", "classifier_forward",
           "classifier_loss_and_grad", "train_classifier", "predict_scores", "predict_candidates",
           "evaluate_classifier", "save_classifier", "load_classifier"]

log = logging.getLogger(__name__)

ENCODER_WIDTHS = (64, 32)
HEAD_WIDTHS = (12, 8, 1)


@dataclass
class ClassifierParams:
    sage: SageParams
    head: list

    def params(self) -> list[np.ndarray]:
        out = self.sage.params()
        for layer in self.head:
            out += layer.params
        return out

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(self.sage.copy(), [DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
                                                   for l in self.head])


@dataclass
class ClassifierConfig:
    epochs: int = 1000
    lr: float = 1e-4
    pos_weight: float = 4.0
    seed: int = 0
    log_every: int = 0
    history: list = field(default_factory=list)


def init_classifier(rng: np.random.Generator, in_dim: int = NUM_FEATURES,
                    widths=ENCODER_WIDTHS, head_widths=HEAD_WIDTHS) -> ClassifierParams:
    sage = SageParams.init(rng, in_dim, widths, "mean")
    head, d = [], 2 * widths[-1]
    for i, w in enumerate(head_widths):
        head.append(init_dense(rng, d, w, "sigmoid" if i == len(head_widths) - 1 else "relu"))
        d = w
    return ClassifierParams(sage, head)


def classifier_forward(g: Graph, params: ClassifierParams, feats=None):
    """Return ``(logits[n], cache)``; probabilities are ``sigmoid(logits)``."""
    feats = compute_features(g) if feats is None else feats
    H, enc_cache = encode_forward(g, feats, params.sage)
    z = H.mean(axis=0)
    X = np.hstack([H, np.broadcast_to(z, H.shape)])
    _, head_cache = mlp_forward(params.head, X)
    return head_cache.pre[-1][:, 0], (enc_cache, head_cache, H.shape)


def classifier_loss_and_grad(g: Graph, labels, params: ClassifierParams, pos_weight: float = 4.0, feats=None):
    logits, (enc_cache, head_cache, shape) = classifier_forward(g, params, feats)
    loss, g_logits = bce_logits(logits, np.asarray(labels, dtype=np.float64), pos_weight)
    head_grads, gX = mlp_backward(params.head, head_cache, g_logits[:, None], preactivation=True)
    d = shape[1]
    gH = gX[:, :d] + gX[:, d:].sum(axis=0) / shape[0]
    enc_grads, _ = encode_backward(g, params.sage, enc_cache, gH)
    grads = list(enc_grads)
    for gw, gb in head_grads:
        grads += [gw, gb]
    return loss, grads


def predict_scores(g: Graph, params: ClassifierParams) -> np.ndarray:
    logits, _ = classifier_forward(g, params)
    return 0.5 * (1.0 + np.tanh(0.5 * logits))


def _accuracy(g, labels, params):
    return float(np.mean((predict_scores(g, params) >= 0.5) == (np.asarray(labels) == 1)))


def train_classifier(dataset, config: ClassifierConfig | None = None, validation=None) -> ClassifierParams:
    """Full-batch Adam over each training graph in turn, one pass over all graphs per epoch.

    ``dataset`` and ``validation`` are lists of ``(graph, labels)``.  The parameters with
    the lowest validation loss (training loss when no validation set) are returned.
    """
    cfg = config or ClassifierConfig()
    if not dataset:
        raise ConfigError("classifier training needs at least one graph")
    all_labels = np.concatenate([np.asarray(l) for _, l in dataset])
    if all_labels.min() == all_labels.max():
        raise ConfigError("training labels are all one class")
    rng = np.random.default_rng(cfg.seed)
    params = init_classifier(rng)
    state = AdamState.for_params(params.params(), lr=cfg.lr)
    feats = [compute_features(g) for g, _ in dataset]
    monitor = validation or dataset
    best, best_loss = params.copy(), np.inf
    for epoch in range(cfg.epochs):
        train_loss = 0.0
        for (g, labels), f in zip(dataset, feats):
            loss, grads = classifier_loss_and_grad(g, labels, params, cfg.pos_weight, f)
            adam_step(params.params(), grads, state)
            train_loss += loss / len(dataset)
        val_loss = float(np.mean([classifier_forward_loss(g, l, params, cfg.pos_weight) for g, l in monitor]))
        cfg.history.append((epoch, train_loss, val_loss))
        if val_loss < best_loss:
            best_loss, best = val_loss, params.copy()
        if cfg.log_every and epoch % cfg.log_every == 0:
            log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
    return best


def classifier_forward_loss(g, labels, params, pos_weight=4.0) -> float:
    logits, _ = classifier_forward(g, params)
    return bce_logits(logits, np.asarray(labels, dtype=np.float64), pos_weight)[0]


def predict_candidates(g: Graph, params: ClassifierParams, threshold: float = 0.5,
                       fallback_fraction: float = 0.2) -> np.ndarray:
    """Nodes scoring at least ``threshold``; if none do, the top ``ceil(0.2 n)`` by score."""
    scores = predict_scores(g, params)
    chosen = np.flatnonzero(scores >= threshold)
    if chosen.size == 0:
        order = np.lexsort((np.arange(g.node_count), -scores))
        chosen = np.sort(order[:candidate_count(g.node_count, fallback_fraction)])
    return chosen


def evaluate_classifier(pred, truth) -> dict:
    """Accuracy, and recall/precision/F1 of the candidate (positive) class."""
    p = np.asarray(pred).astype(bool)
    t = np.asarray(truth).astype(bool)
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    accuracy = float(np.mean(p == t)) if p.size else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": accuracy, "recall": recall, "precision": precision, "f1": f1}


def _tensors(params: ClassifierParams) -> dict:
    out = {}
    for i, l in enumerate(params.sage.layers):
        out[f"sage{i}.w_self"], out[f"sage{i}.w_neigh"], out[f"sage{i}.bias"] = l.w_self, l.w_neigh, l.bias
    for i, l in enumerate(params.head):
        out[f"head{i}.weights"], out[f"head{i}.bias"] = l.weights, l.bias
    return out


def save_classifier(path, params: ClassifierParams, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta.update(kind="classifier", aggregator=params.sage.aggregator,
                head_activations=[l.activation for l in params.head])
    save_params(path, _tensors(params), meta)


def load_classifier(path) -> ClassifierParams:
    t, meta = load_params(path)
    if meta.get("kind") != "classifier":
        raise ConfigError(f"{path} is not a classifier checkpoint")
    return _from_tensors(t, meta)


def _from_tensors(t: dict, meta: dict) -> ClassifierParams:
    n_sage = len([k for k in t if k.endswith(".w_self")])
    sage = SageParams([SageLayer(t[f"sage{i}.w_self"], t[f"sage{i}.w_neigh"], t[f"sage{i}.bias"])
                       for i in range(n_sage)], meta["aggregator"])
    head = [DenseLayer(t[f"head{i}.weights"], t[f"head{i}.bias"], act)
            for i, act in enumerate(meta["head_activations"])]
    return ClassifierParams(sage, head)
