import numpy as np
import pytest

from fforest import synth as synth_mod
from fforest.evalkit import load_manifest
from fforest.features import extract_scale_inputs
from fforest.ensemble import stack_scale_inputs


def make_blobs(n, d, seed, sep=3.0):
    """Two Gaussian classes, n rows total, d columns, labels 0/1."""
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = rng.normal(0.0, 1.0, (half, d))
    x1 = rng.normal(sep, 1.0, (n - half, d))
    X = np.vstack([x0, x1])
    y = np.concatenate([np.zeros(half, np.int64), np.ones(n - half, np.int64)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


def make_scale_mats(n, seed, sep=3.0, head_dim=24, patch_dim=12):
    """Small stand-in for stacked image features: {scale: [matrices]}.

    The first patch of every scale is wider than the rest, like the real
    extractor where the whole-image/first-patch vector carries the
    landmark block.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    y = np.concatenate([np.zeros(half, np.int64), np.ones(n - half, np.int64)])
    shift = y[:, None] * sep
    mats = {}
    for scale in (1, 2, 3, 4):
        patches = []
        for p in range(scale):
            d = head_dim if p == 0 else patch_dim
            patches.append(rng.normal(0.0, 1.0, (n, d)) + shift)
        mats[scale] = patches
    return mats, y


@pytest.fixture(scope="session")
def image_fixture(tmp_path_factory):
    """A small on-disk dataset with extracted features, shared read-only."""
    root = tmp_path_factory.mktemp("imgfix")
    manifest = synth_mod.generate(root, n_real=16, n_fake=16, size=64,
                                  seed=11, amplitude=30.0)
    entries = load_manifest(manifest)
    per_image = [extract_scale_inputs(e["path"], e["landmarks"]) for e in entries]
    labels = np.asarray([e["label"] for e in entries], dtype=np.int64)
    train = [i for i, e in enumerate(entries) if e["split"] == "train"]
    test = [i for i, e in enumerate(entries) if e["split"] == "test"]
    return {
        "root": root,
        "manifest": manifest,
        "entries": entries,
        "per_image": per_image,
        "labels": labels,
        "train_mats": stack_scale_inputs([per_image[i] for i in train]),
        "train_labels": labels[train],
        "test_mats": stack_scale_inputs([per_image[i] for i in test]),
        "test_labels": labels[test],
    }
