"""Dataset manifests, ACC/AUC metrics, and the robustness grid.

The manifest is a CSV with header path,landmarks,label,split; relative
paths resolve against the manifest's directory. AUC uses the
Mann-Whitney rank-sum form with midranks for ties, which matches the
O(n^2) pairwise definition to floating-point accuracy. Perturbations are
pure functions of (image, level[, seed]) and their identity levels
(resize to the native size, JPEG quality 100, brightness factor 1, noise
sigma 0) return the input pixels unchanged, so sweep rows at those
levels reproduce the unperturbed metrics exactly.
"""

import csv
import io
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.stats import rankdata

from .errors import (
    BadSizeError,
    EmptySetError,
    IoError,
    LengthMismatchError,
    RangeError,
    SchemaError,
    SingleClassError,
    TooFewSamplesError,
)
from .features import check_image

MANIFEST_FIELDS = ("path", "landmarks", "label", "split")
RESIZE_SIZES = (256, 512, 768, 1024)


def load_manifest(path):
    """Read manifest rows into dicts with resolved Paths and int labels."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
        raise SchemaError(f"{path}: expected header {','.join(MANIFEST_FIELDS)}, got {reader.fieldnames}")
    base = path.parent
    entries = []
    for i, row in enumerate(reader):
        if row["label"] not in ("0", "1"):
            raise SchemaError(f"{path} row {i}: label must be 0 or 1, got {row['label']!r}")
        if row["split"] not in ("train", "test"):
            raise SchemaError(f"{path} row {i}: split must be train or test, got {row['split']!r}")
        entries.append({
            "path": base / row["path"] if not Path(row["path"]).is_absolute() else Path(row["path"]),
            "landmarks": base / row["landmarks"] if not Path(row["landmarks"]).is_absolute() else Path(row["landmarks"]),
            "label": int(row["label"]),
            "split": row["split"],
        })
    return entries


def write_manifest(entries, path, relative_to=None):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            p, l = Path(e["path"]), Path(e["landmarks"])
            if relative_to is not None:
                p = p.relative_to(relative_to)
                l = l.relative_to(relative_to)
            writer.writerow([str(p), str(l), e["label"], e["split"]])
    return path


def stratified_split(entries, train_frac=0.8, seed=0):
    """Assign split labels per class: round(train_frac * count) to train."""
    labels = np.array([e["label"] for e in entries])
    if np.unique(labels).size < 2:
        raise TooFewSamplesError("both classes are required to split")
    rng = np.random.default_rng(seed)
    out = [dict(e) for e in entries]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n_train = round(train_frac * idx.size)
        order = rng.permutation(idx)
        for j, i in enumerate(order):
            out[i]["split"] = "train" if j < n_train else "test"
    return out


def accuracy(scores, labels):
    """Fraction of samples where (score >= 0.5) matches the label."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size != labels.size:
        raise LengthMismatchError(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise EmptySetError("no samples to score")
    return float(((scores >= 0.5).astype(np.int64) == labels).mean())


def auc(scores, labels):
    """Mann-Whitney AUC with midranks; ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size != labels.size:
        raise LengthMismatchError(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise EmptySetError("no samples to score")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes")
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def metric_report(scores, labels):
    labels = np.asarray(labels)
    return {
        "acc": accuracy(scores, labels),
        "auc": auc(scores, labels),
        "n_pos": int((labels == 1).sum()),
        "n_neg": int((labels == 0).sum()),
        "threshold": 0.5,
    }


def perturb_resize(img, size):
    """Bilinear resize to size x size; the native size is an exact no-op."""
    img = check_image(img)
    if size not in RESIZE_SIZES:
        raise BadSizeError(f"resize target {size} not in {RESIZE_SIZES}")
    h, w = img.shape[:2]
    if (h, w) == (size, size):
        return img.copy()
    out = Image.fromarray(img).resize((size, size), Image.BILINEAR)
    return np.asarray(out, dtype=np.uint8)


def perturb_jpeg(img, quality):
    """Round-trip through JPEG at the given quality; 100 means untouched."""
    img = check_image(img)
    quality = int(quality)
    if not 20 <= quality <= 100:
        raise RangeError(f"JPEG quality {quality} outside [20, 100]")
    if quality == 100:
        return img.copy()
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    with Image.open(buf) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def perturb_brightness(img, factor):
    """pixel' = clamp(round(pixel / factor)): factor > 1 darkens,
    factor < 1 brightens, factor 1 is exact identity."""
    img = check_image(img)
    if factor <= 0:
        raise RangeError(f"brightness factor must be positive, got {factor}")
    out = np.rint(img.astype(np.float64) / factor)
    return np.clip(out, 0, 255).astype(np.uint8)


def perturb_noise(img, sigma, seed=0):
    """Additive per-pixel Gaussian noise on the 0-255 scale, seeded."""
    img = check_image(img)
    if sigma < 0:
        raise RangeError(f"noise sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    out = np.rint(img.astype(np.float64) + rng.normal(0.0, sigma, img.shape))
    return np.clip(out, 0, 255).astype(np.uint8)


DEFAULT_GRID = {
    "resize": [256, 512, 768, 1024],
    "jpeg": [20, 40, 60, 80, 100],
    "brightness": [0.5, 0.75, 1.0, 1.5, 2.0],
    "noise": [0, 1, 2, 3, 4, 5],
}


def apply_perturbation(img, name, level, seed=0):
    if name == "resize":
        return perturb_resize(img, level)
    if name == "jpeg":
        return perturb_jpeg(img, level)
    if name == "brightness":
        return perturb_brightness(img, level)
    if name == "noise":
        return perturb_noise(img, level, seed=seed)
    raise SchemaError(f"unknown perturbation {name!r}")


def robustness_sweep(score_images, images, labels, grid=None, seed=0):
    """Metrics per (perturbation, level) over already-loaded test images.

    score_images(list of images) must return p_fake per image. The noise
    seed is derived per (level, image index) so runs are reproducible
    regardless of grid order. Returns a list of row dicts.
    """
    grid = grid if grid is not None else DEFAULT_GRID
    labels = np.asarray(labels)
    if len(images) != labels.size:
        raise LengthMismatchError(f"{len(images)} images vs {labels.size} labels")
    rows = []
    for name in sorted(grid):
        for li, level in enumerate(grid[name]):
            perturbed = [
                apply_perturbation(img, name, level,
                                   seed=np.random.SeedSequence((seed, li, i)))
                for i, img in enumerate(images)
            ]
            scores = np.asarray(score_images(perturbed), dtype=np.float64)
            rows.append({
                "perturbation": name,
                "level": level,
                "acc": accuracy(scores, labels),
                "auc": auc(scores, labels),
                "n": int(labels.size),
            })
    return rows


def sweep_to_csv(rows):
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["perturbation", "level", "acc", "auc", "n"])
    for r in rows:
        writer.writerow([r["perturbation"], r["level"], repr(r["acc"]), repr(r["auc"]), r["n"]])
    return out.getvalue()
