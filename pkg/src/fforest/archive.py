"""Versioned model persistence: gzipped JSON, format tag "ffm/1".

Trees serialize as nested split/leaf records; floats go through repr so
the round trip is bit-exact and loaded models predict identically.
Writes go to a temp file in the target directory followed by an atomic
rename, so a crashed or truncated write never leaves a readable partial
archive behind.
"""

import gzip
import json
import os
import sys
import tempfile
from pathlib import Path

from .cascade import CascadeLayer, CascadeModel
from .divconq import DncConfig, DncModel
from .ensemble import EnsembleModel
from .errors import DecodeError, IoError, SchemaError, VersionError
from .forest import Forest, Tree
from .hybrid import DenseHead

FORMAT = "ffm/1"


def _forest_record(forest):
    return {
        "kind": forest.kind,
        "n_trees": forest.n_trees,
        "d": forest.d,
        "trees": [t.to_record() for t in forest.trees],
    }


def _forest_from(rec):
    forest = Forest(rec["kind"], n_trees=rec["n_trees"], seed=None)
    forest.d = rec["d"]
    forest.trees = [Tree.from_record(t) for t in rec["trees"]]
    return forest


def _head_record(head):
    return None if head is None else head.to_record()


def _head_from(rec):
    return None if rec is None else DenseHead.from_record(rec)


def _cascade_record(model):
    return {
        "scale_n": model.scale_n,
        "patch_dims": model.patch_dims,
        "extras_dim": model.extras_dim,
        "layers_grown": model.layers_grown,
        "layer_scores": model.layer_scores,
        "validation_score": model.validation_score,
        "hybrid_strategy": model.hybrid_strategy,
        "terminal_head": _head_record(model.terminal_head),
        "layers": [
            {
                "input_dim": layer.input_dim,
                "score": layer.score,
                "head": _head_record(layer.head),
                "forests": [_forest_record(f) for f in layer.forests],
            }
            for layer in model.layers
        ],
    }


def _cascade_from(rec):
    layers = [
        CascadeLayer(
            [_forest_from(f) for f in lrec["forests"]],
            lrec["input_dim"],
            lrec["score"],
            head=_head_from(lrec["head"]),
        )
        for lrec in rec["layers"]
    ]
    model = CascadeModel(
        scale_n=rec["scale_n"],
        patch_dims=rec["patch_dims"],
        extras_dim=rec["extras_dim"],
        layers=layers,
        layers_grown=rec["layers_grown"],
        layer_scores=rec["layer_scores"],
        validation_score=rec["validation_score"],
        hybrid_strategy=rec["hybrid_strategy"],
        terminal_head=_head_from(rec["terminal_head"]),
    )
    return model


def _ensemble_record(model):
    return {
        "scheme": model.scheme,
        "k": model.k,
        "base": _cascade_record(model.base),
        "scales": {str(n): _cascade_record(m) for n, m in model.scale_models.items()},
    }


def _ensemble_from(rec):
    return EnsembleModel(
        rec["scheme"],
        _cascade_from(rec["base"]),
        {int(n): _cascade_from(m) for n, m in rec["scales"].items()},
        rec["k"],
    )


def model_to_record(model):
    if isinstance(model, DncModel):
        return {
            "type": "dnc",
            "t_repeats": model.config.t_repeats,
            "ratio_r": model.config.ratio_r,
            "m_forests": model.config.m_forests,
            "resident_rows": model.resident_rows,
            "splits": [[list(map(int, a)), list(map(int, b))] for a, b in model.splits],
            "members": [_ensemble_record(m) for m in model.members],
        }
    if isinstance(model, EnsembleModel):
        return {"type": "ensemble", **_ensemble_record(model)}
    if isinstance(model, CascadeModel):
        return {"type": "cascade", **_cascade_record(model)}
    raise SchemaError(f"cannot archive a {type(model).__name__}")


def model_from_record(rec):
    kind = rec.get("type")
    if kind == "dnc":
        cfg = DncConfig(t_repeats=rec["t_repeats"], ratio_r=rec["ratio_r"],
                        m_forests=rec["m_forests"])
        model = DncModel([_ensemble_from(m) for m in rec["members"]],
                         [tuple(s) for s in rec["splits"]],
                         rec["resident_rows"], cfg)
        return model
    if kind == "ensemble":
        return _ensemble_from(rec)
    if kind == "cascade":
        return _cascade_from(rec)
    raise SchemaError(f"unknown model record type {kind!r}")


def save_model(model, path, config=None):
    """Serialize model (+ optional config snapshot) atomically."""
    path = Path(path)
    doc = {"format": FORMAT, "config": config, "model": model_to_record(model)}
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        text = json.dumps(doc, separators=(",", ":"))
    finally:
        sys.setrecursionlimit(old_limit)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as raw:
            with gzip.open(raw, "wt", encoding="utf-8") as fh:
                fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def load_model(path):
    """Load an archive; returns (model, config snapshot)."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"no archive at {path}")
    try:
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, EOFError) as exc:
        raise DecodeError(f"cannot read archive {path}: {exc}") from exc
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"archive {path} is not valid JSON: {exc}") from exc
    finally:
        sys.setrecursionlimit(old_limit)
    if not isinstance(doc, dict) or "format" not in doc:
        raise DecodeError(f"archive {path} has no format tag")
    if doc["format"] != FORMAT:
        raise VersionError(f"archive format {doc['format']!r}, this build reads {FORMAT!r}")
    return model_from_record(doc["model"]), doc.get("config")
