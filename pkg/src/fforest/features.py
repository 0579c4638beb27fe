"""Image decoding, patch splitting, and the three feature families.

Per patch: a normalized 256-bin color histogram per channel (768 dims)
and a radially averaged FFT power spectrum resampled to 88 bins per
channel (264 dims), concatenated to 1032 dims. Facial landmarks arrive
from sidecar files as 68 (x, y) pixel pairs, normalized by image size to
136 dims, and are appended to the first patch of every scale.

All outputs have fixed dimension regardless of input resolution, which
is what lets one model consume arbitrary image sizes.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    BadScaleError,
    DecodeError,
    DimensionMismatchError,
    IoError,
    RangeError,
    SchemaError,
    TooSmallError,
)

HIST_DIM = 3 * 256
SPEC_DIM = 3 * 88
BIO_DIM = 2 * 68
PATCH_DIM = HIST_DIM + SPEC_DIM
HEAD_DIM = PATCH_DIM + BIO_DIM
SCALES = (1, 2, 3, 4)

MIN_SIDE = 16


def load_image(path):
    """Decode a PNG/JPEG file to an (H, W, 3) uint8 array.

    Grayscale sources are replicated across channels; alpha is dropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except UnidentifiedImageError as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    except OSError as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    h, w = arr.shape[:2]
    if h < MIN_SIDE or w < MIN_SIDE:
        raise TooSmallError(f"{path}: {w}x{h} is below the {MIN_SIDE}x{MIN_SIDE} minimum")
    return arr


def check_image(img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatchError(f"expected an (H, W, 3) image, got shape {img.shape}")
    return img


def split_patches(img, n):
    """Partition an image into n patches.

    n=1: the whole image. n=2, 3: horizontal bands top to bottom, each of
    height floor(H/n) with the remainder absorbed by the last band. n=4:
    2x2 quadrants in row-major order (TL, TR, BL, BR).
    """
    img = check_image(img)
    if n not in SCALES:
        raise BadScaleError(f"scale {n} not in {SCALES}")
    h, w = img.shape[:2]
    if n == 1:
        return [img]
    if n in (2, 3):
        step = h // n
        return [img[i * step:(i + 1) * step if i < n - 1 else h] for i in range(n)]
    hm, wm = h // 2, w // 2
    return [img[:hm, :wm], img[:hm, wm:], img[hm:, :wm], img[hm:, wm:]]


def color_histogram(img):
    """Per-channel 256-bin histogram normalized by pixel count, R,G,B."""
    img = check_image(img)
    npx = img.shape[0] * img.shape[1]
    parts = [np.bincount(img[:, :, c].ravel(), minlength=256) / npx for c in range(3)]
    return np.concatenate(parts)


_radial_cache = {}


def _radial_index(h, w):
    """Rounded-distance map from the FFT-shift center, masked to the
    radii 0..min(h,w)//2 - 1, with per-radius pixel counts."""
    key = (h, w)
    hit = _radial_cache.get(key)
    if hit is not None:
        return hit
    cy, cx = h // 2, w // 2
    yy = np.arange(h)[:, None] - cy
    xx = np.arange(w)[None, :] - cx
    r = np.rint(np.hypot(yy, xx)).astype(np.int64)
    rmax = max(min(h, w) // 2 - 1, 0)
    mask = (r <= rmax).ravel()
    idx = r.ravel()[mask]
    counts = np.bincount(idx, minlength=rmax + 1)
    hit = (mask, idx, counts, rmax + 1)
    _radial_cache[key] = hit
    return hit


def power_spectrum(img):
    """Azimuthally averaged log power spectrum, 88 bins per channel.

    Per channel: 2-D FFT, center shift, squared magnitude, mean over
    integer radii (rounded distance to center), log(1+P), then linear
    resampling of the radial profile to 88 bins.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    mask, idx, counts, nbins = _radial_index(h, w)
    sample_points = np.linspace(0.0, nbins - 1.0, 88)
    support = np.arange(nbins)
    out = []
    for c in range(3):
        spec = np.fft.fftshift(np.fft.fft2(img[:, :, c].astype(np.float64)))
        power = (spec.real ** 2 + spec.imag ** 2).ravel()[mask]
        profile = np.log1p(np.bincount(idx, weights=power, minlength=nbins) / counts)
        out.append(np.interp(sample_points, support, profile))
    return np.concatenate(out)


def patch_feature(patch):
    """Histogram ++ spectrum for one patch: 1032 dims."""
    return np.concatenate([color_histogram(patch), power_spectrum(patch)])


def ingest_landmarks(path, img):
    """Load a 68-point landmark sidecar and normalize to [0, 1).

    The sidecar is JSON: {"landmarks": [[x, y], ...]} in pixel units.
    Coordinates must satisfy 0 <= x < width and 0 <= y < height.
    """
    img = check_image(img)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "landmarks" not in doc:
        raise SchemaError(f"{path}: missing 'landmarks' field")
    points = doc["landmarks"]
    if not isinstance(points, list) or len(points) != 68:
        raise SchemaError(f"{path}: expected 68 landmark pairs, got {len(points) if isinstance(points, list) else type(points).__name__}")
    h, w = img.shape[:2]
    flat = np.empty(BIO_DIM)
    for i, pt in enumerate(points):
        if not isinstance(pt, (list, tuple)) or len(pt) != 2:
            raise SchemaError(f"{path}: landmark {i} is not an (x, y) pair")
        x, y = float(pt[0]), float(pt[1])
        if not (0 <= x < w) or not (0 <= y < h):
            raise RangeError(f"{path}: landmark {i} ({x}, {y}) outside {w}x{h} bounds")
        flat[2 * i] = x / w
        flat[2 * i + 1] = y / h
    return flat


def assemble_scale_inputs(img, biology, scales=SCALES):
    """Per-scale ordered patch features; biology joins each first patch.

    Returns {n: [vectors]} where the first vector of every scale has
    1032 + 136 = 1168 dims and the rest 1032.
    """
    img = check_image(img)
    biology = np.asarray(biology, dtype=np.float64)
    if biology.shape != (BIO_DIM,):
        raise DimensionMismatchError(f"biology vector has shape {biology.shape}, expected ({BIO_DIM},)")
    for n in scales:
        if n not in SCALES:
            raise BadScaleError(f"scale {n} not in {SCALES}")
    out = {}
    for n in scales:
        vecs = [patch_feature(p) for p in split_patches(img, n)]
        vecs[0] = np.concatenate([vecs[0], biology])
        out[n] = vecs
    return out


def extract_scale_inputs(image_path, landmark_path=None, scales=SCALES):
    """Decode an image plus its landmark sidecar and assemble features.

    landmark_path defaults to "<image-stem>.landmarks.json" next to the
    image.
    """
    image_path = Path(image_path)
    if landmark_path is None:
        landmark_path = image_path.with_name(image_path.stem + ".landmarks.json")
    img = load_image(image_path)
    biology = ingest_landmarks(landmark_path, img)
    return assemble_scale_inputs(img, biology, scales)
