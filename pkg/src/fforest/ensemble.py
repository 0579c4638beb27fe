"""Multi-scale wiring of per-scale cascades, schemes e1 through e4.

  e1: chain 1 -> 2 -> 3 -> 4; each later scale's first layer also sees
      the previous scale's final 8-dim augmentation; predict from scale 4.
  e2: e1 plus the raw whole-image feature vector appended at scale 4.
  e3: scale s sees the augmentations of ALL earlier scales (8*(s-1)
      extra dims); predict from scale 4.
  e4 (default): scales 2, 3, 4 train independently; their augmentations
      (24 dims) all feed the whole-image base cascade; predict from the
      base. This is the only scheme whose scale models could train in
      parallel.

Train-time cross-scale augmentations are the source cascade's final
out-of-fold rows (honest values for rows the forests never saw);
inference recomputes them with the refit forests.
"""

import numpy as np

from . import probcheck
from .cascade import GrowthConfig, cascade_augmented, cascade_predict, classify, train_cascade
from .errors import DimensionMismatchError
from .features import SCALES
from .util import spawn_seeds

SCHEMES = ("e1", "e2", "e3", "e4")


class EnsembleModel:
    def __init__(self, scheme, base, scale_models, k, seed=None):
        self.scheme = scheme
        self.base = base
        self.scale_models = scale_models  # {2: CascadeModel, 3: ..., 4: ...}
        self.k = k
        self.seed = seed


def stack_scale_inputs(per_image):
    """Stack per-image {scale: [vectors]} dicts into {scale: [matrices]}."""
    if not per_image:
        raise DimensionMismatchError("no feature rows to stack")
    scales = sorted(per_image[0])
    out = {}
    for n in scales:
        n_patches = len(per_image[0][n])
        out[n] = [np.stack([rec[n][p] for rec in per_image]) for p in range(n_patches)]
    return out


def _audit_dim(actual, expected, what):
    if actual != expected:
        raise DimensionMismatchError(f"{what}: first-layer input dim {actual}, expected {expected}")


def train_ensemble(scale_mats, labels, scheme="e4", cfg=None, hybrid_cfg=None):
    """Train the full detector from {scale: [patch matrices]} features."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    for n in SCALES:
        if n not in scale_mats:
            raise DimensionMismatchError(f"features for scale {n} are missing")
    cfg = cfg or GrowthConfig()
    y = np.asarray(labels, dtype=np.int64)
    seeds = spawn_seeds(cfg.seed, 4)

    def sub_cfg(i):
        return GrowthConfig(max_layers=cfg.max_layers, patience=cfg.patience,
                            k=cfg.k, n_trees=cfg.n_trees, seed=seeds[i])

    whole = scale_mats[1][0]
    if scheme == "e4":
        models = {n: train_cascade(scale_mats[n], y, sub_cfg(n - 1), hybrid_cfg=hybrid_cfg)
                  for n in (2, 3, 4)}
        extras = np.hstack([models[n].train_augmented for n in (2, 3, 4)])
        base = train_cascade(scale_mats[1], y, sub_cfg(0), extras=extras, hybrid_cfg=hybrid_cfg)
        _audit_dim(base.layers[0].input_dim, whole.shape[1] + 24, "e4 base")
        return EnsembleModel("e4", base, models, cfg.k, cfg.seed)

    base = train_cascade(scale_mats[1], y, sub_cfg(0), hybrid_cfg=hybrid_cfg)
    models = {}
    if scheme in ("e1", "e2"):
        prev = base.train_augmented
        for n in (2, 3, 4):
            extras = prev
            if scheme == "e2" and n == 4:
                extras = np.hstack([prev, whole])
            models[n] = train_cascade(scale_mats[n], y, sub_cfg(n - 1),
                                      extras=extras, hybrid_cfg=hybrid_cfg)
            prev = models[n].train_augmented
        expected = scale_mats[4][0].shape[1] + 8 + (whole.shape[1] if scheme == "e2" else 0)
        _audit_dim(models[4].layers[0].input_dim, expected, scheme)
    else:  # e3
        augs = [base.train_augmented]
        for n in (2, 3, 4):
            extras = np.hstack(augs) if len(augs) > 1 else augs[0]
            models[n] = train_cascade(scale_mats[n], y, sub_cfg(n - 1),
                                      extras=extras, hybrid_cfg=hybrid_cfg)
            augs.append(models[n].train_augmented)
        _audit_dim(models[4].extras_dim, 24, "e3 scale 4 extras")
    return EnsembleModel(scheme, base, models, cfg.k, cfg.seed)


def predict_ensemble(model, scale_mats):
    """Class probabilities for stacked features, (n, 2)."""
    for n in SCALES:
        if n not in scale_mats:
            raise DimensionMismatchError(f"features for scale {n} are missing")
    whole = np.asarray(scale_mats[1][0], dtype=np.float64)
    if model.scheme == "e4":
        extras = np.hstack([cascade_augmented(model.scale_models[n], scale_mats[n])
                            for n in (2, 3, 4)])
        probs = cascade_predict(model.base, scale_mats[1], extras=extras)
    elif model.scheme in ("e1", "e2"):
        prev = cascade_augmented(model.base, scale_mats[1])
        probs = None
        for n in (2, 3, 4):
            extras = prev
            if model.scheme == "e2" and n == 4:
                extras = np.hstack([prev, whole])
            if n < 4:
                prev = cascade_augmented(model.scale_models[n], scale_mats[n], extras=extras)
            else:
                probs = cascade_predict(model.scale_models[n], scale_mats[n], extras=extras)
    else:  # e3
        augs = [cascade_augmented(model.base, scale_mats[1])]
        probs = None
        for n in (2, 3, 4):
            extras = np.hstack(augs) if len(augs) > 1 else augs[0]
            if n < 4:
                augs.append(cascade_augmented(model.scale_models[n], scale_mats[n], extras=extras))
            else:
                probs = cascade_predict(model.scale_models[n], scale_mats[n], extras=extras)
    return probcheck.check_batch(probs)


def predict_labels(model, scale_mats):
    probs = predict_ensemble(model, scale_mats)
    return probs, classify(probs)
