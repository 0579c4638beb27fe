import numpy as np
import pytest

from fforest import probcheck
from fforest.cascade import GrowthConfig
from fforest.ensemble import predict_ensemble, train_ensemble

from conftest import make_scale_mats


def test_inactive_is_passthrough():
    bad = np.array([[2.0, 3.0]])
    assert probcheck.check_batch(bad) is bad


def test_watch_counts_pairs():
    with probcheck.watch() as audit:
        probcheck.check_batch(np.array([[0.25, 0.75], [1.0, 0.0]]))
        probcheck.check_batch(np.array([[0.5, 0.5, 0.1, 0.9]]))
    assert audit.count == 4


def test_watch_restores_previous_state():
    assert probcheck._active is None
    with probcheck.watch():
        with probcheck.watch() as inner:
            assert probcheck._active is inner
        assert probcheck._active is not None
    assert probcheck._active is None


def test_violations_raise():
    with probcheck.watch():
        with pytest.raises(AssertionError):
            probcheck.check_batch(np.array([[0.6, 0.6]]))
        with pytest.raises(AssertionError):
            probcheck.check_batch(np.array([[-0.2, 1.2]]))
        with pytest.raises(AssertionError):
            probcheck.check_batch(np.array([[np.nan, 1.0]]))
        with pytest.raises(AssertionError):
            probcheck.check_batch(np.array([[0.1, 0.2, 0.7]]))


def test_tolerance_is_respected():
    with probcheck.watch(tol=1e-9):
        probcheck.check_batch(np.array([[0.5 + 4e-10, 0.5]]))
        with pytest.raises(AssertionError):
            probcheck.check_batch(np.array([[0.5 + 2e-9, 0.5]]))


def test_training_and_prediction_emit_checked_vectors():
    mats, y = make_scale_mats(24, seed=90)
    cfg = GrowthConfig(max_layers=2, patience=None, k=3, n_trees=4, seed=0)
    with probcheck.watch() as audit:
        model = train_ensemble(mats, y, scheme="e4", cfg=cfg)
        train_count = audit.count
        predict_ensemble(model, mats)
        total = audit.count
    assert train_count > 0
    assert total > train_count
