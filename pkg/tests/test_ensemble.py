import numpy as np
import pytest

from fforest.cascade import AUG_DIM, GrowthConfig
from fforest.ensemble import (
    SCHEMES,
    predict_ensemble,
    predict_labels,
    stack_scale_inputs,
    train_ensemble,
)
from fforest.errors import DimensionMismatchError

from conftest import make_scale_mats


def quick_cfg(seed=0):
    return GrowthConfig(max_layers=2, patience=None, k=3, n_trees=8, seed=seed)


class TestSchemes:
    def test_all_schemes_train_and_predict(self):
        mats, y = make_scale_mats(36, seed=40)
        for scheme in SCHEMES:
            model = train_ensemble(mats, y, scheme=scheme, cfg=quick_cfg())
            probs = predict_ensemble(model, mats)
            assert probs.shape == (36, 2)
            assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
            acc = ((probs[:, 1] >= 0.5).astype(np.int64) == y).mean()
            assert acc >= 0.9, f"{scheme} underfits separable blobs"

    def test_e4_base_first_layer_gets_24_extra_dims(self):
        mats, y = make_scale_mats(30, seed=41, head_dim=20)
        model = train_ensemble(mats, y, scheme="e4", cfg=quick_cfg())
        assert model.base.extras_dim == 3 * AUG_DIM
        assert model.base.layers[0].input_dim == 20 + 24

    def test_e1_chain_passes_8_dims_forward(self):
        mats, y = make_scale_mats(30, seed=42, head_dim=20, patch_dim=10)
        model = train_ensemble(mats, y, scheme="e1", cfg=quick_cfg())
        assert model.base.extras_dim == 0
        for n in (2, 3, 4):
            assert model.scale_models[n].extras_dim == AUG_DIM
            assert model.scale_models[n].layers[0].input_dim == 20 + AUG_DIM

    def test_e2_adds_whole_image_vector_at_scale_4(self):
        mats, y = make_scale_mats(30, seed=43, head_dim=20)
        model = train_ensemble(mats, y, scheme="e2", cfg=quick_cfg())
        assert model.scale_models[2].extras_dim == AUG_DIM
        assert model.scale_models[3].extras_dim == AUG_DIM
        assert model.scale_models[4].extras_dim == AUG_DIM + 20
        assert model.scale_models[4].layers[0].input_dim == 20 + AUG_DIM + 20

    def test_e3_accumulates_earlier_augmentations(self):
        mats, y = make_scale_mats(30, seed=44)
        model = train_ensemble(mats, y, scheme="e3", cfg=quick_cfg())
        assert model.scale_models[2].extras_dim == AUG_DIM
        assert model.scale_models[3].extras_dim == 2 * AUG_DIM
        assert model.scale_models[4].extras_dim == 3 * AUG_DIM

    def test_unknown_scheme_rejected(self):
        mats, y = make_scale_mats(20, seed=45)
        with pytest.raises(ValueError):
            train_ensemble(mats, y, scheme="e5", cfg=quick_cfg())

    def test_missing_scale_rejected(self):
        mats, y = make_scale_mats(20, seed=46)
        del mats[3]
        with pytest.raises(DimensionMismatchError):
            train_ensemble(mats, y, scheme="e4", cfg=quick_cfg())


class TestPredict:
    def test_deterministic_across_retrains(self):
        mats, y = make_scale_mats(30, seed=47)
        a = predict_ensemble(train_ensemble(mats, y, cfg=quick_cfg(seed=3)), mats)
        b = predict_ensemble(train_ensemble(mats, y, cfg=quick_cfg(seed=3)), mats)
        assert np.array_equal(a, b)

    def test_labels_match_threshold(self):
        mats, y = make_scale_mats(24, seed=48)
        model = train_ensemble(mats, y, cfg=quick_cfg())
        probs, labels = predict_labels(model, mats)
        assert np.array_equal(labels, (probs[:, 1] >= 0.5).astype(np.int64))

    def test_predict_rejects_wrong_width(self):
        mats, y = make_scale_mats(24, seed=49)
        model = train_ensemble(mats, y, cfg=quick_cfg())
        bad = {n: [m.copy() for m in ms] for n, ms in mats.items()}
        bad[2][1] = bad[2][1][:, :-2]
        with pytest.raises(DimensionMismatchError):
            predict_ensemble(model, bad)


class TestStacking:
    def test_stack_orders_rows_and_patches(self):
        per_image = [
            {1: [np.array([1.0, 2.0])], 2: [np.array([3.0]), np.array([4.0])]},
            {1: [np.array([5.0, 6.0])], 2: [np.array([7.0]), np.array([8.0])]},
        ]
        mats = stack_scale_inputs(per_image)
        assert np.array_equal(mats[1][0], [[1.0, 2.0], [5.0, 6.0]])
        assert np.array_equal(mats[2][0], [[3.0], [7.0]])
        assert np.array_equal(mats[2][1], [[4.0], [8.0]])

    def test_stack_rejects_empty(self):
        with pytest.raises(DimensionMismatchError):
            stack_scale_inputs([])
