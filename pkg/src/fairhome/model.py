"""Trainable classifiers (logistic regression, feed-forward net) and reweighting.

Both models are trained by seeded mini-batch gradient descent on weighted
cross-entropy with an L2 penalty on weights (not biases), so training is
deterministic given (data, config). Loss/gradient functions are exposed for
finite-difference checking.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import (
    Dataset,
    EncodingMap,
    Instance,
    ProtectedDomains,
    Schema,
    build_encoding,
    encode,
    encode_matrix,
)
from .errors import ShapeError, TrainingError, UsageError

DEFAULT_HIDDEN_LAYERS = (64, 32, 16, 8, 4)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int | None = 32  # None means full batch
    l2_penalty: float = 1e-4
    seed: int = 0
    instance_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise UsageError("learning_rate must be positive")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise UsageError("batch_size must be >= 1 or None")
        if self.l2_penalty < 0:
            raise UsageError("l2_penalty must be non-negative")
        if self.instance_weights is not None:
            w = np.asarray(self.instance_weights, dtype=float)
            if (w <= 0).any():
                raise UsageError("instance_weights must be positive")
            self.instance_weights = w


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _check_trainable(train: Dataset, config: TrainConfig):
    if len(train) < 2:
        raise TrainingError("need at least 2 training rows")
    if len(set(train.labels)) < 2:
        raise TrainingError("training data contains a single label class")
    if config.instance_weights is not None and len(config.instance_weights) != len(train):
        raise UsageError("instance_weights length must equal the training size")


def _sample_weights(n: int, config: TrainConfig) -> np.ndarray:
    if config.instance_weights is None:
        return np.ones(n)
    return np.asarray(config.instance_weights, dtype=float)


def logistic_loss_grad(w, b, X, y, sample_w, l2):
    """Weighted-mean cross-entropy + 0.5*l2*||w||^2, with analytic gradients."""
    z = X @ w + b
    sw = sample_w / sample_w.sum()
    # log(1+e^z) - y*z is the cross-entropy of sigmoid(z), stable via logaddexp
    loss = float(np.sum(sw * (np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * np.dot(w, w))
    g = sw * (sigmoid(z) - y)
    return loss, X.T @ g + l2 * w, float(g.sum())


def mlp_forward(weights, biases, X):
    """ReLU hidden layers, sigmoid output; returns (probabilities, activations, logits)."""
    h = X
    activations = [X]
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(0.0, h @ W + b)
        activations.append(h)
    z = (h @ weights[-1] + biases[-1]).ravel()
    return sigmoid(z), activations, z


def mlp_loss_grad(weights, biases, X, y, sample_w, l2):
    """Loss and per-layer gradients for the feed-forward net."""
    sw = sample_w / sample_w.sum()
    p, activations, z = mlp_forward(weights, biases, X)
    penalty = 0.5 * l2 * sum(float(np.sum(W * W)) for W in weights)
    loss = float(np.sum(sw * (np.logaddexp(0.0, z) - y * z)) + penalty)

    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    delta = (sw * (p - y))[:, None]
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta + l2 * weights[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (activations[layer] > 0)
    return loss, grads_w, grads_b


def _batches(n, batch_size, rng):
    if batch_size is None or batch_size >= n:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    encoding: EncodingMap
    schema: Schema
    meta: dict = field(default_factory=dict)

    def proba_matrix(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.weights + self.bias)

    def predict_proba(self, instance: Instance) -> float:
        return float(self.proba_matrix(encode(instance, self.schema, self.encoding)))

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.weights.tobytes())
        h.update(np.float64(self.bias).tobytes())
        return h.hexdigest()[:16]

    def params_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}


@dataclass
class MlpModel:
    layer_weights: list
    layer_biases: list
    encoding: EncodingMap
    schema: Schema
    meta: dict = field(default_factory=dict)

    def proba_matrix(self, X: np.ndarray) -> np.ndarray:
        return mlp_forward(self.layer_weights, self.layer_biases, np.atleast_2d(X))[0]

    def predict_proba(self, instance: Instance) -> float:
        return float(self.proba_matrix(encode(instance, self.schema, self.encoding))[0])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for W, b in zip(self.layer_weights, self.layer_biases):
            h.update(W.tobytes())
            h.update(b.tobytes())
        return h.hexdigest()[:16]

    def params_dict(self) -> dict:
        return {
            "layer_weights": [W.tolist() for W in self.layer_weights],
            "layer_biases": [b.tolist() for b in self.layer_biases],
        }


def fit_logistic(train: Dataset, config: TrainConfig) -> LogisticModel:
    """Weighted logistic regression via gradient descent; zero-initialized."""
    _check_trainable(train, config)
    encoding = build_encoding(train)
    X = encode_matrix(train.instances(), train.schema, encoding)
    y = np.asarray(train.labels, dtype=float)
    sample_w = _sample_weights(len(train), config)

    w = np.zeros(encoding.dim)
    b = 0.0
    rng = np.random.default_rng(config.seed)
    loss_history = []
    for _ in range(config.epochs):
        for idx in _batches(len(train), config.batch_size, rng):
            _, gw, gb = logistic_loss_grad(w, b, X[idx], y[idx], sample_w[idx], config.l2_penalty)
            w -= config.learning_rate * gw
            b -= config.learning_rate * gb
        loss_history.append(logistic_loss_grad(w, b, X, y, sample_w, config.l2_penalty)[0])

    meta = {"kind": "logistic", "seed": config.seed, "n_train": len(train),
            "loss_history": loss_history}
    return LogisticModel(weights=w, bias=b, encoding=encoding, schema=train.schema, meta=meta)


def init_mlp_params(dim_in: int, hidden_layers, seed: int):
    """Uniform[-r, r] with r = sqrt(6/(fan_in+fan_out)); biases start at zero."""
    rng = np.random.default_rng(seed)
    sizes = [dim_in, *hidden_layers, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def fit_mlp(train: Dataset, config: TrainConfig, hidden_layers=DEFAULT_HIDDEN_LAYERS) -> MlpModel:
    """Fully-connected net with ReLU hidden layers and a sigmoid output unit."""
    _check_trainable(train, config)
    encoding = build_encoding(train)
    X = encode_matrix(train.instances(), train.schema, encoding)
    y = np.asarray(train.labels, dtype=float)
    sample_w = _sample_weights(len(train), config)

    weights, biases = init_mlp_params(encoding.dim, hidden_layers, config.seed)
    rng = np.random.default_rng(config.seed)
    loss_history = []
    for _ in range(config.epochs):
        for idx in _batches(len(train), config.batch_size, rng):
            _, gw, gb = mlp_loss_grad(weights, biases, X[idx], y[idx], sample_w[idx],
                                      config.l2_penalty)
            for layer in range(len(weights)):
                weights[layer] -= config.learning_rate * gw[layer]
                biases[layer] -= config.learning_rate * gb[layer]
        loss_history.append(
            mlp_loss_grad(weights, biases, X, y, sample_w, config.l2_penalty)[0]
        )

    meta = {"kind": "mlp", "seed": config.seed, "n_train": len(train),
            "hidden_layers": tuple(hidden_layers), "loss_history": loss_history}
    return MlpModel(layer_weights=weights, layer_biases=biases, encoding=encoding,
                    schema=train.schema, meta=meta)


def predict_proba(classifier, instance: Instance) -> float:
    """Favorable-class probability; the decision is favorable iff p >= 0.5."""
    if len(instance.values) != len(classifier.schema.attributes):
        raise ShapeError(
            f"instance has {len(instance.values)} attributes, "
            f"classifier expects {len(classifier.schema.attributes)}"
        )
    return classifier.predict_proba(instance)


def decide(p: float) -> int:
    return 1 if p >= 0.5 else 0


def decisions_matrix(classifier, X: np.ndarray) -> np.ndarray:
    return (classifier.proba_matrix(X) >= 0.5).astype(int)


def reweighting_weights(train: Dataset, domains: ProtectedDomains) -> np.ndarray:
    """Per-row weights (N_s * N_y) / (N * N_sy) equalizing (subgroup, label) mass."""
    idx = train.schema.protected_indices
    combos = [tuple(row[i] for i in idx) for row in train.rows]
    n = len(train)
    n_s: dict = {}
    n_y = {0: 0, 1: 0}
    n_sy: dict = {}
    for combo, y in zip(combos, train.labels):
        n_s[combo] = n_s.get(combo, 0) + 1
        n_y[y] += 1
        n_sy[(combo, y)] = n_sy.get((combo, y), 0) + 1
    return np.array(
        [n_s[c] * n_y[y] / (n * n_sy[(c, y)]) for c, y in zip(combos, train.labels)]
    )


_FORMAT = "fairhome-model/1"


def save_model(model, path) -> None:
    """JSON dump of parameters, encoding, and schema; predictions round-trip exactly."""
    from .data import CategoricalBlock

    blocks = []
    for blk in model.encoding.blocks:
        if isinstance(blk, CategoricalBlock):
            blocks.append({"name": blk.name, "kind": "categorical", "levels": list(blk.levels)})
        else:
            blocks.append({"name": blk.name, "kind": "numeric", "lo": blk.lo, "hi": blk.hi})
    doc = {
        "format": _FORMAT,
        "kind": model.meta.get("kind"),
        "schema": model.schema.to_dict(),
        "encoding": blocks,
        "params": model.params_dict(),
        "meta": {k: v for k, v in model.meta.items() if k != "loss_history"},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    from .data import CategoricalBlock, NumericBlock

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise UsageError(f"unsupported model file format {doc.get('format')!r}")
    schema = Schema.from_dict(doc["schema"])
    blocks = []
    dim = 0
    for blk in doc["encoding"]:
        if blk["kind"] == "categorical":
            levels = tuple(blk["levels"])
            blocks.append(CategoricalBlock(blk["name"], levels,
                                           {v: j for j, v in enumerate(levels)}))
            dim += len(levels)
        else:
            blocks.append(NumericBlock(blk["name"], blk["lo"], blk["hi"]))
            dim += 1
    encoding = EncodingMap(blocks=tuple(blocks), dim=dim)
    params = doc["params"]
    meta = dict(doc.get("meta", {}))
    if doc["kind"] == "logistic":
        return LogisticModel(weights=np.asarray(params["weights"]), bias=params["bias"],
                             encoding=encoding, schema=schema, meta=meta)
    if doc["kind"] == "mlp":
        return MlpModel(
            layer_weights=[np.asarray(W) for W in params["layer_weights"]],
            layer_biases=[np.asarray(b) for b in params["layer_biases"]],
            encoding=encoding, schema=schema, meta=meta,
        )
    raise UsageError(f"unknown model kind {doc['kind']!r}")
