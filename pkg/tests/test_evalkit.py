import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fforest.errors import (
    BadSizeError,
    EmptySetError,
    IoError,
    LengthMismatchError,
    RangeError,
    SchemaError,
    SingleClassError,
)
from fforest.evalkit import (
    DEFAULT_GRID,
    accuracy,
    apply_perturbation,
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


def pairwise_auc(scores, labels):
    """Direct two-loop definition: P(score_pos > score_neg) + ties/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (pos.size * neg.size)


def rand_image(rng, h=32, w=32):
    return rng.integers(0, 256, (h, w, 3)).astype(np.uint8)


class TestMetrics:
    def test_accuracy_thresholds_at_half(self):
        scores = np.array([0.2, 0.5, 0.7, 0.49])
        labels = np.array([0, 1, 1, 1])
        assert accuracy(scores, labels) == 0.75

    def test_accuracy_errors(self):
        with pytest.raises(LengthMismatchError):
            accuracy([0.5], [1, 0])
        with pytest.raises(EmptySetError):
            accuracy([], [])

    def test_auc_matches_pairwise_reference(self):
        rng = np.random.default_rng(60)
        for _ in range(100):
            n = int(rng.integers(4, 40))
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            # quantized scores force plenty of ties
            scores = np.round(rng.uniform(0.0, 1.0, n), 1)
            assert abs(auc(scores, labels) - pairwise_auc(scores, labels)) <= 1e-9

    def test_auc_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(61)
        scores = rng.uniform(0.0, 1.0, 50)
        labels = rng.integers(0, 2, 50)
        labels[0], labels[1] = 0, 1
        base = auc(scores, labels)
        assert auc(scores * 7.0 + 3.0, labels) == base
        assert auc(np.exp(scores), labels) == base
        assert auc(np.tanh(scores) + scores ** 3, labels) == base

    def test_auc_perfect_and_inverted(self):
        labels = np.array([0, 0, 1, 1])
        assert auc([0.1, 0.2, 0.8, 0.9], labels) == 1.0
        assert auc([0.9, 0.8, 0.1, 0.2], labels) == 0.0
        assert auc([0.5, 0.5, 0.5, 0.5], labels) == 0.5

    def test_auc_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            auc([0.1, 0.9], [1, 1])

    def test_metric_report_fields(self):
        rep = metric_report([0.1, 0.9, 0.6], [0, 1, 1])
        assert rep == {"acc": 1.0, "auc": 1.0, "n_pos": 2, "n_neg": 1,
                       "threshold": 0.5}


class TestManifest:
    def entries(self, tmp_path, n=6):
        rows = []
        for i in range(n):
            rows.append({
                "path": tmp_path / f"img_{i}.png",
                "landmarks": tmp_path / f"img_{i}.landmarks.json",
                "label": i % 2,
                "split": "train" if i < 4 else "test",
            })
        return rows

    def test_round_trip(self, tmp_path):
        rows = self.entries(tmp_path)
        write_manifest(rows, tmp_path / "m.csv", relative_to=tmp_path)
        back = load_manifest(tmp_path / "m.csv")
        assert len(back) == 6
        assert back[0]["path"] == rows[0]["path"]
        assert back[0]["landmarks"] == rows[0]["landmarks"]
        assert [e["label"] for e in back] == [0, 1, 0, 1, 0, 1]
        assert [e["split"] for e in back] == ["train"] * 4 + ["test"] * 2

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        (tmp_path / "m.csv").write_text(
            "path,landmarks,label,split\na.png,a.json,1,test\n")
        (e,) = load_manifest(tmp_path / "m.csv")
        assert e["path"] == tmp_path / "a.png"
        assert e["landmarks"] == tmp_path / "a.json"

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_manifest(tmp_path / "none.csv")

    def test_wrong_header(self, tmp_path):
        (tmp_path / "m.csv").write_text("file,points,y,part\na,b,1,train\n")
        with pytest.raises(SchemaError):
            load_manifest(tmp_path / "m.csv")

    def test_bad_label(self, tmp_path):
        (tmp_path / "m.csv").write_text("path,landmarks,label,split\na,b,2,train\n")
        with pytest.raises(SchemaError):
            load_manifest(tmp_path / "m.csv")

    def test_bad_split(self, tmp_path):
        (tmp_path / "m.csv").write_text("path,landmarks,label,split\na,b,1,val\n")
        with pytest.raises(SchemaError):
            load_manifest(tmp_path / "m.csv")

    def test_stratified_split_fractions(self, tmp_path):
        rows = []
        for i in range(30):
            rows.append({"path": tmp_path / f"{i}.png", "landmarks": tmp_path / f"{i}.json",
                         "label": 0 if i < 20 else 1, "split": "train"})
        out = stratified_split(rows, train_frac=0.8, seed=0)
        train0 = sum(1 for e in out if e["label"] == 0 and e["split"] == "train")
        train1 = sum(1 for e in out if e["label"] == 1 and e["split"] == "train")
        assert train0 == round(0.8 * 20)
        assert train1 == round(0.8 * 10)
        assert len(out) == 30

    def test_stratified_split_deterministic(self, tmp_path):
        rows = [{"path": tmp_path / f"{i}.png", "landmarks": tmp_path / f"{i}.json",
                 "label": i % 2, "split": "train"} for i in range(20)]
        a = stratified_split(rows, seed=5)
        b = stratified_split(rows, seed=5)
        assert [e["split"] for e in a] == [e["split"] for e in b]


class TestPerturbations:
    def test_resize_native_is_exact_copy(self):
        img = rand_image(np.random.default_rng(62), 256, 256)
        out = perturb_resize(img, 256)
        assert np.array_equal(out, img)
        assert out is not img

    def test_resize_changes_shape(self):
        img = rand_image(np.random.default_rng(63), 256, 256)
        assert perturb_resize(img, 512).shape == (512, 512, 3)

    def test_resize_rejects_unknown_target(self):
        img = rand_image(np.random.default_rng(64))
        with pytest.raises(BadSizeError):
            perturb_resize(img, 300)

    def test_jpeg_100_is_exact_copy(self):
        img = rand_image(np.random.default_rng(65))
        assert np.array_equal(perturb_jpeg(img, 100), img)

    def test_jpeg_low_quality_alters_pixels(self):
        img = rand_image(np.random.default_rng(66), 64, 64)
        out = perturb_jpeg(img, 20)
        assert out.shape == img.shape
        assert not np.array_equal(out, img)

    def test_jpeg_quality_bounds(self):
        img = rand_image(np.random.default_rng(67))
        with pytest.raises(RangeError):
            perturb_jpeg(img, 19)
        with pytest.raises(RangeError):
            perturb_jpeg(img, 101)

    def test_brightness_identity_at_one(self):
        img = rand_image(np.random.default_rng(68))
        assert np.array_equal(perturb_brightness(img, 1.0), img)

    def test_brightness_factor_two_halves_values(self):
        img = np.full((16, 16, 3), 200, np.uint8)
        assert (perturb_brightness(img, 2.0) == 100).all()
        img = np.full((16, 16, 3), 201, np.uint8)
        assert (perturb_brightness(img, 2.0) == np.rint(201 / 2.0)).all()

    def test_brightness_brightens_below_one_with_clamp(self):
        img = np.full((16, 16, 3), 200, np.uint8)
        assert (perturb_brightness(img, 0.5) == 255).all()

    def test_brightness_rejects_nonpositive(self):
        img = rand_image(np.random.default_rng(69))
        with pytest.raises(RangeError):
            perturb_brightness(img, 0.0)

    def test_noise_zero_is_exact_copy(self):
        img = rand_image(np.random.default_rng(70))
        assert np.array_equal(perturb_noise(img, 0), img)

    def test_noise_seeded_reproducibly(self):
        img = rand_image(np.random.default_rng(71))
        a = perturb_noise(img, 3.0, seed=9)
        b = perturb_noise(img, 3.0, seed=9)
        c = perturb_noise(img, 3.0, seed=10)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_noise_negative_sigma_rejected(self):
        img = rand_image(np.random.default_rng(72))
        with pytest.raises(RangeError):
            perturb_noise(img, -1.0)

    def test_unknown_perturbation_rejected(self):
        img = rand_image(np.random.default_rng(73))
        with pytest.raises(SchemaError):
            apply_perturbation(img, "blur", 3)


class TestSweep:
    def fake_scorer(self):
        def score_images(imgs):
            # brighter images score closer to 1; deterministic stand-in
            return [float(img.mean() / 255.0) for img in imgs]
        return score_images

    def test_rows_cover_grid_in_sorted_name_order(self):
        rng = np.random.default_rng(74)
        images = [rand_image(rng, 256, 256) for _ in range(6)]
        labels = np.array([0, 1, 0, 1, 0, 1])
        grid = {"noise": [0, 2], "brightness": [1.0]}
        rows = robustness_sweep(self.fake_scorer(), images, labels, grid)
        assert [(r["perturbation"], r["level"]) for r in rows] == [
            ("brightness", 1.0), ("noise", 0), ("noise", 2)]
        assert all(r["n"] == 6 for r in rows)

    def test_identity_levels_match_unperturbed_metrics(self):
        rng = np.random.default_rng(75)
        images = [rand_image(rng, 256, 256) for _ in range(8)]
        scores = np.asarray(self.fake_scorer()(images))
        labels = (scores >= np.median(scores)).astype(np.int64)
        labels[0] = 1 - labels[0]  # keep it from being trivially perfect
        base_acc = accuracy(scores, labels)
        base_auc = auc(scores, labels)
        grid = {"resize": [256], "jpeg": [100], "brightness": [1.0], "noise": [0]}
        rows = robustness_sweep(self.fake_scorer(), images, labels, grid)
        for r in rows:
            assert r["acc"] == base_acc
            assert r["auc"] == base_auc

    def test_default_grid_is_used_when_none(self):
        assert sorted(DEFAULT_GRID) == ["brightness", "jpeg", "noise", "resize"]

    def test_csv_round_trips_float_metrics_exactly(self):
        rows = [{"perturbation": "noise", "level": 2, "acc": 2.0 / 3.0,
                 "auc": 1.0 / 3.0, "n": 3}]
        text = sweep_to_csv(rows)
        lines = text.strip().splitlines()
        assert lines[0] == "perturbation,level,acc,auc,n"
        _, _, acc_s, auc_s, _ = lines[1].split(",")
        assert float(acc_s) == 2.0 / 3.0
        assert float(auc_s) == 1.0 / 3.0


@settings(deadline=None, max_examples=40)
@given(st.lists(st.tuples(st.floats(0, 1, allow_nan=False), st.integers(0, 1)),
                min_size=2, max_size=60))
def test_auc_always_agrees_with_pairwise(pairs):
    scores = np.array([p[0] for p in pairs])
    labels = np.array([p[1] for p in pairs])
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    assert abs(auc(scores, labels) - pairwise_auc(scores, labels)) <= 1e-9
