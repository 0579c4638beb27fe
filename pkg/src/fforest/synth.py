"""Synthetic fixture data: smooth-noise "real" faces versus "fake" ones
carrying a periodic upsampling artifact.

Real images are low-pass filtered Gaussian noise re-centered to mid-gray.
Fakes add a period-4 checkerboard (2x2 pixel blocks), the kind of
high-frequency lattice that transposed-convolution upsampling leaves
behind; its energy lands on a single radial band of the power spectrum
at every patch scale, so the spectrum features separate the classes
while the histograms only drift. Landmarks are a jittered face oval,
identically distributed for both classes, so the biology features carry
no label signal.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .errors import RangeError
from .evalkit import stratified_split, write_manifest
from .util import spawn_seeds

SMOOTH_SIGMA = 3.0
PIXEL_STD = 25.0
CHECKER_BLOCK = 2


def synth_image(rng, size=256, fake=False, amplitude=10.0):
    """One (size, size, 3) uint8 image; fake adds the checker artifact."""
    if size < 16:
        raise RangeError(f"size {size} is below the 16 pixel minimum")
    base = rng.standard_normal((size, size, 3))
    for c in range(3):
        base[:, :, c] = gaussian_filter(base[:, :, c], SMOOTH_SIGMA)
    std = base.std(axis=(0, 1), keepdims=True)
    img = 128.0 + base * (PIXEL_STD / np.where(std > 0, std, 1.0))
    if fake:
        yy, xx = np.mgrid[0:size, 0:size]
        checker = (((yy // CHECKER_BLOCK) + (xx // CHECKER_BLOCK)) % 2) * 2.0 - 1.0
        img = img + amplitude * checker[:, :, None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def synth_landmarks(rng, size=256):
    """68 points on a jittered face oval, strictly inside the image."""
    t = np.linspace(0.0, 2.0 * np.pi, 68, endpoint=False)
    cx = size * 0.5 + rng.normal(0, size * 0.01)
    cy = size * 0.52 + rng.normal(0, size * 0.01)
    rx = size * 0.22 * (1.0 + rng.normal(0, 0.03))
    ry = size * 0.30 * (1.0 + rng.normal(0, 0.03))
    x = cx + rx * np.cos(t) + rng.normal(0, size * 0.008, 68)
    y = cy + ry * np.sin(t) + rng.normal(0, size * 0.008, 68)
    x = np.clip(x, 0.0, size - 1.0)
    y = np.clip(y, 0.0, size - 1.0)
    return np.column_stack([x, y])


def generate(out_dir, n_real=400, n_fake=400, size=256, seed=0,
             amplitude=10.0, train_frac=0.8):
    """Write images, landmark sidecars, and a split manifest.

    Returns the manifest path. Fully deterministic for a given seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = n_real + n_fake
    seeds = spawn_seeds(seed, total + 1)
    entries = []
    for i in range(total):
        fake = i >= n_real
        rng = np.random.default_rng(seeds[i])
        img = synth_image(rng, size=size, fake=fake, amplitude=amplitude)
        points = synth_landmarks(rng, size=size)
        stem = f"{'fake' if fake else 'real'}_{(i - n_real) if fake else i:04d}"
        img_path = out_dir / f"{stem}.png"
        lm_path = out_dir / f"{stem}.landmarks.json"
        Image.fromarray(img).save(img_path)
        lm_path.write_text(json.dumps({"landmarks": points.tolist()}))
        entries.append({"path": img_path, "landmarks": lm_path,
                        "label": int(fake), "split": "train"})
    entries = stratified_split(entries, train_frac=train_frac,
                               seed=seeds[total])
    return write_manifest(entries, out_dir / "manifest.csv", relative_to=out_dir)
