"""Multi-scale hierarchical cascade forests for generated-face detection."""

from .archive import load_model, save_model
from .cascade import (
    CascadeModel,
    GrowthConfig,
    cascade_augmented,
    cascade_predict,
    classify,
    train_cascade,
)
from .divconq import (
    DncConfig,
    DncModel,
    predict_dnc,
    select_forests,
    split_dataset,
    train_dnc,
)
from .ensemble import (
    EnsembleModel,
    predict_ensemble,
    predict_labels,
    stack_scale_inputs,
    train_ensemble,
)
from .errors import (
    BadScaleError,
    BadSizeError,
    DecodeError,
    DimensionMismatchError,
    EmptySetError,
    FforestError,
    IoError,
    LengthMismatchError,
    NonFiniteError,
    RangeError,
    SchemaError,
    SingleClassError,
    TooFewSamplesError,
    TooSmallError,
    VersionError,
)
from .evalkit import (
    accuracy,
    auc,
    load_manifest,
    metric_report,
    perturb_brightness,
    perturb_jpeg,
    perturb_noise,
    perturb_resize,
    robustness_sweep,
    stratified_split,
    sweep_to_csv,
    write_manifest,
)
from .features import (
    assemble_scale_inputs,
    color_histogram,
    extract_scale_inputs,
    ingest_landmarks,
    load_image,
    patch_feature,
    power_spectrum,
    split_patches,
)
from .forest import (
    Forest,
    Tree,
    best_split,
    build_tree,
    forest_fit,
    forest_predict,
    gini,
    kfold_augmented,
    stratified_folds,
    weighted_gini,
)
from .hybrid import (
    DenseHead,
    HybridConfig,
    loss_and_grads,
    renormalize_pairs,
    train_head_pair,
)

__version__ = "0.1.0"

__all__ = [
    "BadScaleError", "BadSizeError", "CascadeModel", "DecodeError",
    "DenseHead", "DimensionMismatchError", "DncConfig", "DncModel",
    "EmptySetError", "EnsembleModel", "FforestError", "Forest",
    "GrowthConfig", "HybridConfig", "IoError", "LengthMismatchError",
    "NonFiniteError", "RangeError", "SchemaError", "SingleClassError",
    "TooFewSamplesError", "TooSmallError", "Tree", "VersionError",
    "accuracy", "assemble_scale_inputs", "auc", "best_split",
    "build_tree", "cascade_augmented", "cascade_predict", "classify",
    "color_histogram", "extract_scale_inputs", "forest_fit",
    "forest_predict", "gini", "ingest_landmarks", "kfold_augmented",
    "load_image", "load_manifest", "load_model", "loss_and_grads",
    "metric_report", "patch_feature", "perturb_brightness",
    "perturb_jpeg", "perturb_noise", "perturb_resize", "power_spectrum",
    "predict_dnc", "predict_ensemble", "predict_labels",
    "renormalize_pairs", "robustness_sweep", "save_model",
    "select_forests", "split_dataset", "split_patches",
    "stack_scale_inputs", "stratified_folds", "stratified_split",
    "sweep_to_csv", "train_cascade", "train_dnc", "train_ensemble",
    "train_head_pair", "weighted_gini", "write_manifest",
]
