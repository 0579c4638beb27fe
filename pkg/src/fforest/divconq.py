"""Divide-and-conquer training: T repeats of (random r-split, candidate
layers of m forests, keep the best 2 random + 2 completely random), with
the repeats averaged at inference.

Each repeat trains a complete multi-scale detector on its D1 portion
only, which is what bounds the resident training rows. Selection is
greedy per layer: a forest's score is the mean of its out-of-fold
accuracy on D1 and its refit accuracy on the held-out D2, the next layer
sees only the four survivors' 8-dim augmentation, and growth/trimming
follow the same rules as a plain cascade.
"""

import numpy as np

from . import probcheck
from .cascade import (
    CascadeLayer,
    CascadeModel,
    GrowthConfig,
    GrowthTracker,
    _layer_input,
    layer_score,
)
from .ensemble import SCHEMES, EnsembleModel, predict_ensemble
from .errors import DimensionMismatchError, RangeError, TooFewSamplesError
from .features import SCALES
from .forest import kfold_augmented
from .util import spawn_seeds


class DncConfig:
    def __init__(self, t_repeats=5, ratio_r=0.9, m_forests=16, seed=0):
        if not 0 < ratio_r < 1:
            raise RangeError(f"ratio_r must be in (0, 1), got {ratio_r}")
        if m_forests < 4 or m_forests % 2 != 0:
            raise RangeError(f"m_forests must be even and at least 4, got {m_forests}")
        if t_repeats < 1:
            raise RangeError(f"t_repeats must be at least 1, got {t_repeats}")
        self.t_repeats = t_repeats
        self.ratio_r = ratio_r
        self.m_forests = m_forests
        self.seed = seed


class DncModel:
    def __init__(self, members, splits, resident_rows, config):
        self.members = members
        self.splits = splits
        self.resident_rows = resident_rows
        self.config = config


def split_dataset(labels, r, rng):
    """Stratified partition into (D1, D2) index arrays, |D1| per class =
    round(r * class count). Both portions must keep every class."""
    y = np.asarray(labels)
    idx1, idx2 = [], []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        n1 = round(r * members.size)
        if n1 < 1 or n1 >= members.size:
            raise TooFewSamplesError(
                f"class {cls}: r={r} leaves {n1} of {members.size} samples on one side")
        order = rng.permutation(members)
        idx1.append(order[:n1])
        idx2.append(order[n1:])
    return np.sort(np.concatenate(idx1)), np.sort(np.concatenate(idx2))


def candidate_kinds(m):
    return ("random",) * (m // 2) + ("completely_random",) * (m // 2)


def train_candidate_layer(X, y, m, k=3, seed=0, n_trees=100):
    """m/2 random + m/2 completely random forests on shared folds.

    Returns (forests, oof, kinds); oof has 2m columns.
    """
    kinds = candidate_kinds(m)
    forests, oof = kfold_augmented(X, y, kinds, k=k, seed=seed, n_trees=n_trees)
    return forests, oof, kinds


def select_forests(kinds, oof, y1, d2_probs, y2):
    """Indices of the top-2 forests of each kind.

    Score = (out-of-fold accuracy on D1 + direct accuracy on D2) / 2;
    ties break toward the lower forest index. The result keeps selected
    random forests first, matching the standard layer layout.
    """
    y1 = np.asarray(y1)
    y2 = np.asarray(y2)
    scores = []
    for i in range(len(kinds)):
        acc1 = float(((oof[:, 2 * i + 1] >= 0.5).astype(np.int64) == y1).mean())
        acc2 = float(((d2_probs[i][:, 1] >= 0.5).astype(np.int64) == y2).mean())
        scores.append((acc1 + acc2) / 2.0)
    chosen = []
    for kind in ("random", "completely_random"):
        pool = [i for i in range(len(kinds)) if kinds[i] == kind]
        ranked = sorted(pool, key=lambda i: (-scores[i], i))
        chosen.extend(sorted(ranked[:2]))
    return chosen, scores


def _train_dnc_cascade(patch1, y1, patch2, y2, m, cfg, extras1=None, extras2=None):
    """Grow one cascade on D1 with m-candidate layers reduced to 4.

    patch1/patch2 are the D1/D2 patch matrices; extras join the first
    layer only, exactly as in the plain cascade. Returns (model, final
    D1 augmentation (out-of-fold), final D2 augmentation (refit)).
    """
    patch1 = [np.asarray(p, dtype=np.float64) for p in patch1]
    patch2 = [np.asarray(p, dtype=np.float64) for p in patch2]
    root = cfg.seed if isinstance(cfg.seed, np.random.SeedSequence) else np.random.SeedSequence(cfg.seed)
    seeds = root.spawn(cfg.max_layers)
    kinds = candidate_kinds(m)
    tracker = GrowthTracker(cfg.max_layers, cfg.patience)
    layers = []
    aug1_hist = []
    aug2_hist = []
    prev1 = None
    prev2 = None
    j = 0
    while True:
        x1 = _layer_input(patch1, extras1, prev1, j)
        x2 = _layer_input(patch2, extras2, prev2, j)
        forests, oof = kfold_augmented(x1, y1, kinds, k=cfg.k, seed=seeds[j], n_trees=cfg.n_trees)
        d2_probs = [f.predict_proba(x2) for f in forests]
        chosen, _ = select_forests(kinds, oof, y1, d2_probs, y2)
        aug1 = np.hstack([oof[:, 2 * i:2 * i + 2] for i in chosen])
        aug2 = np.hstack([d2_probs[i] for i in chosen])
        score = layer_score(aug1, y1)
        layers.append(CascadeLayer([forests[i] for i in chosen], x1.shape[1], score))
        aug1_hist.append(aug1)
        aug2_hist.append(aug2)
        if not tracker.record(score):
            break
        prev1, prev2 = aug1, aug2
        j += 1
    keep = tracker.best_index + 1
    model = CascadeModel(
        scale_n=len(patch1),
        patch_dims=[p.shape[1] for p in patch1],
        extras_dim=0 if extras1 is None else extras1.shape[1],
        layers=layers[:keep],
        layers_grown=len(layers),
        layer_scores=tracker.scores,
        validation_score=tracker.best_score,
    )
    model.train_augmented = aug1_hist[keep - 1]
    return model, aug1_hist[keep - 1], aug2_hist[keep - 1]


def train_dnc(scale_mats, labels, dnc_cfg=None, growth_cfg=None, scheme="e4"):
    """T repeats of split + candidate-layer training, any ensemble scheme."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    dnc_cfg = dnc_cfg or DncConfig()
    growth_cfg = growth_cfg or GrowthConfig()
    y = np.asarray(labels, dtype=np.int64)
    for s in SCALES:
        if s not in scale_mats:
            raise DimensionMismatchError(f"features for scale {s} are missing")
    repeat_seeds = spawn_seeds(dnc_cfg.seed, dnc_cfg.t_repeats)
    members = []
    splits = []
    resident = []
    m = dnc_cfg.m_forests
    for rep in range(dnc_cfg.t_repeats):
        rep_children = repeat_seeds[rep].spawn(5)
        rng = np.random.default_rng(rep_children[0])
        idx1, idx2 = split_dataset(y, dnc_cfg.ratio_r, rng)
        splits.append((idx1, idx2))
        resident.append(int(idx1.size))
        y1, y2 = y[idx1], y[idx2]
        sub1 = {s: [p[idx1] for p in scale_mats[s]] for s in SCALES}
        sub2 = {s: [p[idx2] for p in scale_mats[s]] for s in SCALES}

        def cfg_for(i):
            return GrowthConfig(max_layers=growth_cfg.max_layers, patience=growth_cfg.patience,
                                k=growth_cfg.k, n_trees=growth_cfg.n_trees, seed=rep_children[i + 1])

        whole1, whole2 = sub1[1][0], sub2[1][0]
        if scheme == "e4":
            trained = {s: _train_dnc_cascade(sub1[s], y1, sub2[s], y2, m, cfg_for(s - 1))
                       for s in (2, 3, 4)}
            models = {s: trained[s][0] for s in (2, 3, 4)}
            extras1 = np.hstack([trained[s][1] for s in (2, 3, 4)])
            extras2 = np.hstack([trained[s][2] for s in (2, 3, 4)])
            base, _, _ = _train_dnc_cascade(sub1[1], y1, sub2[1], y2, m, cfg_for(0),
                                            extras1=extras1, extras2=extras2)
            members.append(EnsembleModel("e4", base, models, growth_cfg.k))
        elif scheme in ("e1", "e2"):
            base, prev1, prev2 = _train_dnc_cascade(sub1[1], y1, sub2[1], y2, m, cfg_for(0))
            models = {}
            for s in (2, 3, 4):
                e1x, e2x = prev1, prev2
                if scheme == "e2" and s == 4:
                    e1x = np.hstack([prev1, whole1])
                    e2x = np.hstack([prev2, whole2])
                models[s], prev1, prev2 = _train_dnc_cascade(
                    sub1[s], y1, sub2[s], y2, m, cfg_for(s - 1), extras1=e1x, extras2=e2x)
            members.append(EnsembleModel(scheme, base, models, growth_cfg.k))
        else:  # e3
            base, a1, a2 = _train_dnc_cascade(sub1[1], y1, sub2[1], y2, m, cfg_for(0))
            augs1, augs2 = [a1], [a2]
            models = {}
            for s in (2, 3, 4):
                e1x = np.hstack(augs1) if len(augs1) > 1 else augs1[0]
                e2x = np.hstack(augs2) if len(augs2) > 1 else augs2[0]
                models[s], n1, n2 = _train_dnc_cascade(
                    sub1[s], y1, sub2[s], y2, m, cfg_for(s - 1), extras1=e1x, extras2=e2x)
                augs1.append(n1)
                augs2.append(n2)
            members.append(EnsembleModel(scheme, base, models, growth_cfg.k))
    return DncModel(members, splits, resident, dnc_cfg)


def predict_dnc(model, scale_mats):
    """Mean of the member ensembles' class probabilities."""
    total = None
    for member in model.members:
        probs = predict_ensemble(member, scale_mats)
        total = probs if total is None else total + probs
    out = total / len(model.members)
    return probcheck.check_batch(out)
