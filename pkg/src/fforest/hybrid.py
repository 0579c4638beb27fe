"""Dense refinement heads appended to forest layers.

A head is a chain of linear maps (identity activation) ending in 8
outputs. During training an auxiliary linear layer (8 -> 2 logits,
softmax, cross-entropy) is stacked on top to give the refiner a learning
signal; the auxiliary part is discarded afterwards and never used at
inference. Training is plain full-batch gradient descent at the
configured learning rate; gradients are computed by hand against the
augmented rows, which are constants here — nothing propagates back into
the forests.

Strategies:
  h1: a single head on the final layer's augmented features; its refined
      output is renormalized pairwise to form the prediction.
  h2: one head per layer on that layer's 8-dim augmentation; the refined
      8 dims replace the augmentation fed to the next layer.
  h3: as h2, but from the second layer on the head also sees the
      previous layer's refined output (16 inputs).
"""

import numpy as np

from . import probcheck
from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    RangeError,
    SingleClassError,
    TooFewSamplesError,
)

STRATEGIES = ("h1", "h2", "h3")
HEAD_OUT = 8


class HybridConfig:
    def __init__(self, strategy="h3", head_dims=(8,), lr=0.01, epochs=100):
        if strategy not in STRATEGIES:
            raise RangeError(f"strategy {strategy!r} not in {STRATEGIES}")
        head_dims = tuple(int(d) for d in head_dims)
        if not head_dims or head_dims[-1] != HEAD_OUT:
            raise RangeError(f"head dims must end in {HEAD_OUT}, got {head_dims}")
        if any(d < 1 for d in head_dims):
            raise RangeError(f"head dims must be positive, got {head_dims}")
        if lr <= 0:
            raise RangeError("learning rate must be positive")
        if epochs < 1:
            raise RangeError("epochs must be at least 1")
        self.strategy = strategy
        self.head_dims = head_dims
        self.lr = lr
        self.epochs = epochs


class DenseHead:
    """A chain of linear maps; weights[i] is (out_i, in_i)."""

    def __init__(self, weights, biases):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.initial_loss = None
        self.final_loss = None

    @property
    def in_dim(self):
        return self.weights[0].shape[1]

    @property
    def out_dim(self):
        return self.weights[-1].shape[0]

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.in_dim:
            raise DimensionMismatchError(f"head expects {self.in_dim} inputs, got {h.shape[1]}")
        for w, b in zip(self.weights, self.biases):
            h = h @ w.T + b
        return h[0] if single else h

    def to_record(self):
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_record(cls, record):
        return cls(record["weights"], record["biases"])


def init_params(in_dim, head_dims, rng):
    """Refiner chain plus the auxiliary (2-logit) layer, small random init."""
    dims = [in_dim] + list(head_dims)
    weights = [rng.normal(0.0, 0.1, size=(dims[i + 1], dims[i])) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    weights.append(rng.normal(0.0, 0.1, size=(2, head_dims[-1])))
    biases.append(np.zeros(2))
    return weights, biases


def loss_and_grads(weights, biases, X, y):
    """Cross-entropy of softmax(aux(refiners(X))) and its exact gradients.

    The last (weights, biases) pair is the auxiliary layer. Returns
    (loss, weight_grads, bias_grads) with grads aligned to the inputs.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    activations = [X]
    h = X
    for w, b in zip(weights, biases):
        h = h @ w.T + b
        activations.append(h)
    logits = activations[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    eps = 1e-12
    loss = -float(np.mean(np.log(probs[np.arange(n), y] + eps)))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    w_grads = [None] * len(weights)
    b_grads = [None] * len(biases)
    delta = dlogits
    for i in range(len(weights) - 1, -1, -1):
        w_grads[i] = delta.T @ activations[i]
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i]
    return loss, w_grads, b_grads


def train_head_pair(aug_rows, labels, cfg, rng):
    """Fit refiner + auxiliary by full-batch descent; return the refiner.

    The returned head keeps initial_loss/final_loss for inspection. A
    non-finite loss or parameter aborts with NonFiniteError rather than
    returning a diverged head.
    """
    X = np.asarray(aug_rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] < 2:
        raise TooFewSamplesError("head training needs at least 2 samples")
    if np.unique(y).size < 2:
        raise SingleClassError("head training needs both labels")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    weights, biases = init_params(X.shape[1], cfg.head_dims, rng)
    initial = None
    loss = None
    for _ in range(cfg.epochs):
        loss, w_grads, b_grads = loss_and_grads(weights, biases, X, y)
        if initial is None:
            initial = loss
        if not np.isfinite(loss):
            raise NonFiniteError("head training diverged")
        for i in range(len(weights)):
            weights[i] -= cfg.lr * w_grads[i]
            biases[i] -= cfg.lr * b_grads[i]
    final = loss_and_grads(weights, biases, X, y)[0]
    if not np.isfinite(final):
        raise NonFiniteError("head training diverged")
    for w, b in zip(weights, biases):
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NonFiniteError("head training diverged")
    head = DenseHead(weights[:-1], biases[:-1])
    head.initial_loss = initial
    head.final_loss = final
    return head


def head_input(strategy, layer_index, aug, prev_refined):
    """Assemble a layer head's input per strategy (batch form)."""
    if strategy == "h2" or layer_index == 0 or prev_refined is None:
        return aug
    return np.hstack([prev_refined, aug])


def renormalize_pairs(refined):
    """Map a refined 8-vector (or batch) back to 4 probability pairs.

    Negative components clamp to zero; each pair then divides by its sum,
    with an uninformative (0.5, 0.5) fallback for all-zero pairs.
    """
    arr = np.asarray(refined, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] % 2 != 0:
        raise DimensionMismatchError(f"refined width {arr.shape[1]} is not a pair multiple")
    pairs = np.clip(arr.reshape(arr.shape[0], -1, 2), 0.0, None)
    sums = pairs.sum(axis=2, keepdims=True)
    flat = np.where(sums > 0, pairs / np.where(sums > 0, sums, 1.0), 0.5)
    out = flat.reshape(arr.shape)
    probcheck.check_batch(out)
    return out[0] if single else out
