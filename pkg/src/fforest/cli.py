"""Command-line interface.

Subcommands: synth (fixture data), extract (feature dump), train,
predict, eval, sweep. Every command is deterministic given --seed.
Exit codes: 0 success, 1 data errors (unreadable files, bad landmarks,
dimension mismatches), 2 configuration errors (bad flags or config
file). FF_THREADS caps in-process parallelism (default 1).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import archive, divconq, ensemble, evalkit, features, synth
from .cascade import GrowthConfig, cascade_predict, classify, train_cascade
from .divconq import predict_dnc
from .ensemble import predict_ensemble, stack_scale_inputs
from .errors import FforestError, SchemaError
from .hybrid import HybridConfig

ALL_SCALES = (1, 2, 3, 4)


def _parse_scales(text):
    try:
        scales = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scale list {text!r}")
    if not scales or any(s not in ALL_SCALES for s in scales) or len(set(scales)) != len(scales):
        raise argparse.ArgumentTypeError(f"scales must be a subset of 1,2,3,4 without repeats, got {text!r}")
    return scales


def _parse_head_dims(text):
    try:
        dims = tuple(int(p) for p in text.split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad head dims {text!r}")
    if dims[-1] != 8 or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"head dims must be positive and end in 8, got {text!r}")
    return dims


def _parse_patience(text):
    if text.lower() in ("none", "inf"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"patience must be an integer or 'none', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("patience must be at least 1 (or 'none')")
    return value


def _num_list(cast):
    def parse(text):
        try:
            return [cast(p) for p in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}")
    return parse


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fforest",
        description="Multi-scale cascade forests for generated-face detection.",
        epilog="Set FF_THREADS to allow in-process parallel tree building.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-real", type=int, default=400)
    p.add_argument("--n-fake", type=int, default=400)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=10.0,
                   help="checker artifact strength in gray levels")
    p.add_argument("--train-frac", type=float, default=0.8)

    p = sub.add_parser("extract", help="write per-image feature dumps as JSON lines")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scales", type=_parse_scales, default=ALL_SCALES)

    p = sub.add_parser("train", help="train a detector and archive it")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="dataset manifest; trains on its train split")
    src.add_argument("--features", help="feature dump from `extract`")
    p.add_argument("--out", required=True, help="archive path")
    p.add_argument("--report", help="training report path (default: <out>.report.json)")
    p.add_argument("--config", help="JSON file of defaults for these flags")
    p.add_argument("--scheme", choices=ensemble.SCHEMES, default="e4")
    p.add_argument("--single-scale", type=int, choices=ALL_SCALES, default=None,
                   help="train one cascade at this scale instead of the multi-scale ensemble")
    p.add_argument("--k", type=int, default=3, help="folds for augmented features")
    p.add_argument("--max-layers", type=int, default=20)
    p.add_argument("--patience", type=_parse_patience, default=2)
    p.add_argument("--trees", type=int, default=100, help="trees per forest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hybrid", choices=("off", "h1", "h2", "h3"), default="off")
    p.add_argument("--head-dims", type=_parse_head_dims, default=(8,))
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--dnc", action="store_true", help="divide-and-conquer training")
    p.add_argument("--dnc-t", type=int, default=5, help="repeat count")
    p.add_argument("--dnc-r", type=float, default=0.9, help="D1 fraction")
    p.add_argument("--dnc-m", type=int, default=16, help="candidate forests per layer")

    p = sub.add_parser("predict", help="score images with an archived model")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--image")
    src.add_argument("--manifest")
    p.add_argument("--landmarks", help="sidecar path for --image (default <stem>.landmarks.json)")
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.add_argument("--out", help="write JSON lines here instead of stdout")

    p = sub.add_parser("eval", help="accuracy and AUC on a manifest split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("sweep", help="robustness metrics over a perturbation grid")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--resize", type=_num_list(int), default=None)
    p.add_argument("--jpeg", type=_num_list(int), default=None)
    p.add_argument("--brightness", type=_num_list(float), default=None)
    p.add_argument("--noise", type=_num_list(float), default=None)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_rows_from_manifest(entries, scales=ALL_SCALES):
    """Extract features for manifest entries; returns (per_image, labels)."""
    per_image = []
    labels = []
    for e in entries:
        per_image.append(features.extract_scale_inputs(e["path"], e["landmarks"], scales))
        labels.append(e["label"])
    return per_image, np.asarray(labels, dtype=np.int64)


def _load_rows_from_dump(path, want_split):
    per_image = []
    labels = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise FforestError(f"cannot read features {path}: {exc}") from exc
    for ln, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path} line {ln + 1}: bad JSON: {exc}") from exc
        if want_split is not None and rec.get("split") != want_split:
            continue
        per_image.append({int(s): [np.asarray(v, dtype=np.float64) for v in vecs]
                          for s, vecs in rec["scale_inputs"].items()})
        labels.append(int(rec["label"]))
    return per_image, np.asarray(labels, dtype=np.int64)


def _predict_any(model, scale_mats):
    if isinstance(model, divconq.DncModel):
        return predict_dnc(model, scale_mats)
    if isinstance(model, ensemble.EnsembleModel):
        return predict_ensemble(model, scale_mats)
    return cascade_predict(model, scale_mats[model.scale_n])


def cmd_synth(args):
    manifest = synth.generate(args.out, n_real=args.n_real, n_fake=args.n_fake,
                              size=args.size, seed=args.seed,
                              amplitude=args.amplitude, train_frac=args.train_frac)
    print(manifest)
    return 0


def cmd_extract(args):
    entries = evalkit.load_manifest(args.manifest)
    failures = 0
    with open(args.out, "w") as fh:
        for e in entries:
            try:
                rec = features.extract_scale_inputs(e["path"], e["landmarks"], args.scales)
            except FforestError as exc:
                failures += 1
                print(f"error: {e['path']}: {exc}", file=sys.stderr)
                continue
            fh.write(json.dumps({
                "id": str(e["path"]),
                "label": e["label"],
                "split": e["split"],
                "scales": list(args.scales),
                "scale_inputs": {str(s): [v.tolist() for v in rec[s]] for s in args.scales},
            }))
            fh.write("\n")
    if failures:
        print(f"{failures} of {len(entries)} images failed", file=sys.stderr)
        return 1
    return 0


def cmd_train(args, parser):
    if args.dnc and args.hybrid != "off":
        parser.error("--dnc cannot be combined with --hybrid")
    if args.dnc and args.single_scale is not None:
        parser.error("--dnc cannot be combined with --single-scale")
    if args.manifest:
        entries = [e for e in evalkit.load_manifest(args.manifest) if e["split"] == "train"]
        if not entries:
            raise FforestError(f"{args.manifest} has no train rows")
        per_image, labels = _load_rows_from_manifest(entries)
    else:
        per_image, labels = _load_rows_from_dump(args.features, "train")
        if not per_image:
            raise FforestError(f"{args.features} has no train rows")
    scale_mats = stack_scale_inputs(per_image)
    growth = GrowthConfig(max_layers=args.max_layers, patience=args.patience,
                          k=args.k, n_trees=args.trees, seed=args.seed)
    hybrid_cfg = None
    if args.hybrid != "off":
        hybrid_cfg = HybridConfig(strategy=args.hybrid, head_dims=args.head_dims,
                                  lr=args.lr, epochs=args.epochs)
    started = time.time()
    if args.dnc:
        dnc_cfg = divconq.DncConfig(t_repeats=args.dnc_t, ratio_r=args.dnc_r,
                                    m_forests=args.dnc_m, seed=args.seed)
        model = divconq.train_dnc(scale_mats, labels, dnc_cfg, growth, scheme=args.scheme)
    elif args.single_scale is not None:
        model = train_cascade(scale_mats[args.single_scale], labels, growth,
                              hybrid_cfg=hybrid_cfg)
    else:
        model = ensemble.train_ensemble(scale_mats, labels, scheme=args.scheme,
                                        cfg=growth, hybrid_cfg=hybrid_cfg)
    wall = time.time() - started
    config = {
        "scheme": args.scheme, "single_scale": args.single_scale, "k": args.k,
        "max_layers": args.max_layers, "patience": args.patience,
        "trees": args.trees, "seed": args.seed, "hybrid": args.hybrid,
        "head_dims": list(args.head_dims), "lr": args.lr, "epochs": args.epochs,
        "dnc": args.dnc, "dnc_t": args.dnc_t, "dnc_r": args.dnc_r, "dnc_m": args.dnc_m,
        "scales": list(ALL_SCALES),
    }
    archive.save_model(model, args.out, config=config)
    report = {"wall_time_s": wall, "n_train": int(labels.size), "config": config,
              "cascades": _describe(model)}
    report_path = args.report or (args.out + ".report.json")
    Path(report_path).write_text(json.dumps(report, indent=2))
    print(f"saved {args.out} ({wall:.1f}s)")
    return 0


def _describe(model):
    if isinstance(model, divconq.DncModel):
        return [{"member": i, "resident_rows": model.resident_rows[i],
                 "cascades": _describe(m)}
                for i, m in enumerate(model.members)]
    if isinstance(model, ensemble.EnsembleModel):
        out = {"base": _describe(model.base)}
        for n, m in sorted(model.scale_models.items()):
            out[f"scale_{n}"] = _describe(m)
        return out
    return {"layers": len(model.layers), "layers_grown": model.layers_grown,
            "scores": model.layer_scores, "validation_score": model.validation_score}


def _entries_for_split(manifest, split):
    entries = evalkit.load_manifest(manifest)
    if split != "all":
        entries = [e for e in entries if e["split"] == split]
    if not entries:
        raise FforestError(f"{manifest} has no {split} rows")
    return entries


def cmd_predict(args):
    model, _ = archive.load_model(args.model)
    if args.image:
        entries = [{"path": Path(args.image),
                    "landmarks": Path(args.landmarks) if args.landmarks else None,
                    "label": None, "split": None}]
    else:
        entries = _entries_for_split(args.manifest, args.split)
    per_image = [features.extract_scale_inputs(e["path"], e["landmarks"]) for e in entries]
    probs = _predict_any(model, stack_scale_inputs(per_image))
    labels = classify(probs)
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for e, p, lbl in zip(entries, probs, labels):
            sink.write(json.dumps({"path": str(e["path"]), "p_fake": float(p[1]),
                                   "label": int(lbl)}))
            sink.write("\n")
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_eval(args):
    model, _ = archive.load_model(args.model)
    entries = _entries_for_split(args.manifest, args.split)
    per_image, labels = _load_rows_from_manifest(entries)
    probs = _predict_any(model, stack_scale_inputs(per_image))
    report = evalkit.metric_report(probs[:, 1], labels)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_sweep(args):
    model, _ = archive.load_model(args.model)
    entries = _entries_for_split(args.manifest, "test")
    images = [features.load_image(e["path"]) for e in entries]
    bios = [features.ingest_landmarks(e["landmarks"], img)
            for e, img in zip(entries, images)]
    labels = np.asarray([e["label"] for e in entries], dtype=np.int64)

    def score_images(imgs):
        per_image = [features.assemble_scale_inputs(img, bio)
                     for img, bio in zip(imgs, bios)]
        return _predict_any(model, stack_scale_inputs(per_image))[:, 1]

    grid = {}
    for name in ("resize", "jpeg", "brightness", "noise"):
        levels = getattr(args, name)
        if levels is not None:
            grid[name] = levels
    if not grid:
        grid = evalkit.DEFAULT_GRID
    rows = evalkit.robustness_sweep(score_images, images, labels, grid, seed=args.seed)
    Path(args.out).write_text(evalkit.sweep_to_csv(rows))
    print(args.out)
    return 0


def _apply_config_file(parser, argv):
    """Lift --config file values into parser defaults before parsing."""
    if "--config" not in argv:
        return
    try:
        idx = argv.index("--config")
        cfg_path = argv[idx + 1]
    except IndexError:
        return  # argparse will report the missing value
    try:
        cfg = json.loads(Path(cfg_path).read_text())
    except OSError as exc:
        parser.error(f"cannot read config {cfg_path}: {exc}")
    except json.JSONDecodeError as exc:
        parser.error(f"config {cfg_path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        parser.error(f"config {cfg_path} must hold a JSON object")
    train_parser = None
    for action in parser._subparsers._group_actions:
        train_parser = action.choices.get("train")
    known = {a.dest for a in train_parser._actions}
    for key, value in cfg.items():
        if key not in known:
            parser.error(f"config {cfg_path}: unknown key {key!r}")
        if key == "patience" and value is not None:
            value = _parse_patience(str(value))
        if key == "head_dims":
            if not isinstance(value, str):
                value = "-".join(str(v) for v in value)
            try:
                value = _parse_head_dims(value)
            except argparse.ArgumentTypeError as exc:
                parser.error(f"config {cfg_path}: {exc}")
        train_parser.set_defaults(**{key: value})


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and argv[0] == "train":
        _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "extract":
            return cmd_extract(args)
        if args.command == "train":
            return cmd_train(args, parser)
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        parser.error(f"unknown command {args.command!r}")
    except FforestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
