"""The hierarchical cascade forest.

Layers are grown one at a time. Layer j consumes patch (j mod N)'s
feature matrix; from the second layer on, the previous layer's 8-dim
augmented output is appended, so blocks of N layers sweep the patches
repeatedly. Optional extra columns (cross-scale augmentations or, for
one ensemble scheme, raw whole-image features) join only the very first
layer. Each layer holds 2 random + 2 completely random forests trained
with shared k-fold splits; its score is the out-of-fold accuracy of the
averaged four-forest prediction. Growth stops at max_layers or after
`patience` consecutive layers without a new best score, and the model is
trimmed back to the best-scoring prefix.
"""

import numpy as np

from . import hybrid, probcheck
from .errors import DimensionMismatchError
from .forest import kfold_augmented

LAYER_KINDS = ("random", "random", "completely_random", "completely_random")
AUG_DIM = 2 * len(LAYER_KINDS)


class GrowthConfig:
    """Knobs for layer growth. patience=None disables early stopping."""

    def __init__(self, max_layers=20, patience=2, k=3, n_trees=100, seed=0):
        if max_layers < 1:
            raise ValueError("max_layers must be at least 1")
        if patience is not None and patience < 1:
            raise ValueError("patience must be at least 1 (or None)")
        self.max_layers = max_layers
        self.patience = patience
        self.k = k
        self.n_trees = n_trees
        self.seed = seed


class GrowthTracker:
    """Best-prefix bookkeeping shared by the plain and candidate-layer
    trainers: feed scores in order, stop when told, trim to the first
    layer that reached the running maximum."""

    def __init__(self, max_layers, patience):
        self.max_layers = max_layers
        self.patience = patience
        self.scores = []
        self.best_score = -np.inf
        self.best_index = -1
        self._since_best = 0

    def record(self, score):
        """Returns True while growth should continue."""
        self.scores.append(score)
        if score > self.best_score:
            self.best_score = score
            self.best_index = len(self.scores) - 1
            self._since_best = 0
        else:
            self._since_best += 1
        if len(self.scores) >= self.max_layers:
            return False
        if self.patience is not None and self._since_best >= self.patience:
            return False
        return True


class CascadeLayer:
    def __init__(self, forests, input_dim, score, head=None):
        self.forests = forests
        self.input_dim = input_dim
        self.score = score
        self.head = head


class CascadeModel:
    def __init__(self, scale_n, patch_dims, extras_dim, layers, layers_grown,
                 layer_scores, validation_score, hybrid_strategy=None, terminal_head=None):
        self.scale_n = scale_n
        self.patch_dims = list(patch_dims)
        self.extras_dim = extras_dim
        self.layers = layers
        self.layers_grown = layers_grown
        self.layer_scores = list(layer_scores)
        self.validation_score = validation_score
        self.hybrid_strategy = hybrid_strategy
        self.terminal_head = terminal_head
        # set by train_cascade: this model's final out-of-fold augmented
        # rows on its own training set, for wiring into other scales
        self.train_augmented = None


def layer_score(oof, labels):
    """Out-of-fold accuracy of the averaged per-forest class vectors."""
    pairs = oof.reshape(oof.shape[0], -1, 2)
    mean = pairs.mean(axis=1)
    predicted = (mean[:, 1] >= 0.5).astype(np.int64)
    return float((predicted == np.asarray(labels)).mean())


def _check_patches(patch_mats, labels):
    n = np.asarray(labels).size
    for i, mat in enumerate(patch_mats):
        if mat.shape[0] != n:
            raise DimensionMismatchError(f"patch {i} has {mat.shape[0]} rows for {n} labels")
    return [np.asarray(m, dtype=np.float64) for m in patch_mats]


def _layer_input(patch_mats, extras, prev_aug, j):
    parts = [patch_mats[j % len(patch_mats)]]
    if j == 0 and extras is not None:
        parts.append(extras)
    if j > 0:
        parts.append(prev_aug)
    return parts[0] if len(parts) == 1 else np.hstack(parts)


def train_cascade(patch_mats, labels, cfg, extras=None, hybrid_cfg=None):
    """Grow, score, and trim a cascade on one scale's patch matrices.

    patch_mats: list of N (n_samples, dim) matrices in patch order.
    extras: optional matrix appended to the first layer's input.
    hybrid_cfg: optional HybridConfig; h2/h3 heads are trained right
    after each layer and their refined output feeds the next layer, h1
    trains a single head on the trimmed final layer.
    """
    patch_mats = _check_patches(patch_mats, labels)
    y = np.asarray(labels, dtype=np.int64)
    if extras is not None:
        extras = np.asarray(extras, dtype=np.float64)
        if extras.shape[0] != y.size:
            raise DimensionMismatchError(f"extras rows {extras.shape[0]} != {y.size} labels")
    root = np.random.SeedSequence(cfg.seed) if not isinstance(cfg.seed, np.random.SeedSequence) else cfg.seed
    seeds = root.spawn(2 * cfg.max_layers + 1)
    strategy = hybrid_cfg.strategy if hybrid_cfg is not None else None
    tracker = GrowthTracker(cfg.max_layers, cfg.patience)
    layers = []
    flows = []  # what each layer feeds onward at train time (refined under h2/h3)
    prev_flow = None
    prev_refined = None
    j = 0
    while True:
        x_layer = _layer_input(patch_mats, extras, prev_flow, j)
        forests, oof = kfold_augmented(x_layer, y, LAYER_KINDS, k=cfg.k,
                                       seed=seeds[2 * j], n_trees=cfg.n_trees)
        score = layer_score(oof, y)
        head = None
        flow = oof
        if strategy in ("h2", "h3"):
            head_rng = np.random.default_rng(seeds[2 * j + 1])
            head_in = hybrid.head_input(strategy, j, oof, prev_refined)
            head = hybrid.train_head_pair(head_in, y, hybrid_cfg, head_rng)
            flow = head.forward(head_in)
            prev_refined = flow
        layers.append(CascadeLayer(forests, x_layer.shape[1], score, head))
        flows.append(flow)
        if not tracker.record(score):
            break
        prev_flow = flow
        j += 1
    keep = tracker.best_index + 1
    model = CascadeModel(
        scale_n=len(patch_mats),
        patch_dims=[m.shape[1] for m in patch_mats],
        extras_dim=0 if extras is None else extras.shape[1],
        layers=layers[:keep],
        layers_grown=len(layers),
        layer_scores=tracker.scores,
        validation_score=tracker.best_score,
        hybrid_strategy=strategy,
    )
    final_flow = flows[keep - 1]
    if strategy == "h1":
        head_rng = np.random.default_rng(seeds[2 * cfg.max_layers])
        model.terminal_head = hybrid.train_head_pair(final_flow, y, hybrid_cfg, head_rng)
        final_flow = model.terminal_head.forward(final_flow)
    model.train_augmented = final_flow
    return model


def _forward(model, patch_mats, extras):
    """Shared inference pass; returns (last raw augmentation, last flow)."""
    patch_mats = [np.asarray(m, dtype=np.float64) for m in patch_mats]
    if len(patch_mats) != model.scale_n:
        raise DimensionMismatchError(f"model expects {model.scale_n} patches, got {len(patch_mats)}")
    for mat, dim in zip(patch_mats, model.patch_dims):
        if mat.shape[1] != dim:
            raise DimensionMismatchError(f"patch dim {mat.shape[1]} != trained {dim}")
    extras_dim = 0 if extras is None else np.asarray(extras).shape[1]
    if extras_dim != model.extras_dim:
        raise DimensionMismatchError(f"extras dim {extras_dim} != trained {model.extras_dim}")
    prev_flow = None
    prev_refined = None
    aug = None
    for j, layer in enumerate(model.layers):
        x_layer = _layer_input(patch_mats, extras, prev_flow, j)
        if x_layer.shape[1] != layer.input_dim:
            raise DimensionMismatchError(f"layer {j} input dim {x_layer.shape[1]} != stored {layer.input_dim}")
        aug = np.hstack([f.predict_proba(x_layer) for f in layer.forests])
        probcheck.check_batch(aug)
        flow = aug
        if layer.head is not None:
            head_in = hybrid.head_input(model.hybrid_strategy, j, aug, prev_refined)
            flow = layer.head.forward(head_in)
            prev_refined = flow
        prev_flow = flow
    if model.terminal_head is not None:
        prev_flow = model.terminal_head.forward(prev_flow)
    return aug, prev_flow


def cascade_augmented(model, patch_mats, extras=None):
    """Final augmented output (the vector this cascade feeds onward)."""
    _, flow = _forward(model, patch_mats, extras)
    return flow


def cascade_predict(model, patch_mats, extras=None):
    """Class probabilities: the mean of the last layer's four class
    vectors. Under h1 the terminal head's refined pairs are renormalized
    and averaged instead."""
    aug, flow = _forward(model, patch_mats, extras)
    if model.terminal_head is not None:
        pairs = hybrid.renormalize_pairs(flow)
    else:
        pairs = aug
    probs = pairs.reshape(pairs.shape[0], -1, 2).mean(axis=1)
    return probcheck.check_batch(probs)


def classify(probs):
    """Label 1 (fake) when p_fake >= 0.5."""
    probs = np.atleast_2d(np.asarray(probs))
    return (probs[:, 1] >= 0.5).astype(np.int64)
