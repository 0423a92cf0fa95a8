import numpy as np
import pytest

from pel.synth_data import (DataFormatError, Dataset, SpecError, SyntheticSpec, class_centers,
                            generate, inject_label_noise, load_csv, save_csv)


def test_zero_noise_samples_are_centers():
    spec = SyntheticSpec(intra_noise_sigma=0.0, samples_per_class_train=3, samples_per_class_test=2)
    train, test = generate(spec)
    centers = class_centers(spec)
    np.testing.assert_array_equal(train.X, centers[train.true_class])
    np.testing.assert_array_equal(test.X, centers[test.true_class])


def test_same_seed_bit_identical():
    assert generate(SyntheticSpec(seed=9)) == generate(SyntheticSpec(seed=9))
    assert generate(SyntheticSpec(seed=9))[0] != generate(SyntheticSpec(seed=10))[0]


def test_shapes_and_balance():
    spec = SyntheticSpec(samples_per_class_train=7, samples_per_class_test=4)
    train, test = generate(spec)
    assert train.X.shape == (56, 64) and test.X.shape == (32, 64)
    assert np.all(np.bincount(train.true_class) == 7)
    assert train.split == "train" and test.split == "test"


@pytest.mark.parametrize("seed", range(5))
def test_nearest_other_class_is_sibling(seed):
    # exhaustive pairwise center distances
    spec = SyntheticSpec(n_classes=8, n_super_groups=4, group_spread=0.2, seed=seed)
    c = class_centers(spec)
    for i in range(8):
        d = [np.linalg.norm(c[i] - c[j]) if j != i else np.inf for j in range(8)]
        assert int(np.argmin(d)) in spec.siblings(i)


@pytest.mark.parametrize("spread_fraction", [0.1, 0.2, 0.3])
def test_group_structure_recoverable(spread_fraction):
    spec = SyntheticSpec(n_classes=12, n_super_groups=4, seed=3)
    groups = class_centers(SyntheticSpec(n_classes=12, n_super_groups=4, group_spread=1e-9, seed=3))
    inter = min(np.linalg.norm(groups[i] - groups[j])
                for i in range(12) for j in range(12) if i // 3 != j // 3)
    spec.group_spread = spread_fraction * inter
    c = class_centers(spec)
    for i in range(12):
        d = np.linalg.norm(c - c[i], axis=1)
        d[i] = np.inf
        nearest = set(np.argsort(d)[:2])
        assert nearest == set(spec.siblings(i))


def test_overlapping_groups_rejected():
    with pytest.raises(SpecError, match="group_spread"):
        generate(SyntheticSpec(group_spread=5.0))


@pytest.mark.parametrize("field,value,message", [
    ("n_super_groups", 3, "divide"),
    ("mislabel_rate", 1.0, "mislabel_rate"),
    ("intra_noise_sigma", -1.0, "intra_noise_sigma"),
    ("noise_mode", "random", "noise_mode"),
    ("group_spread", 0.0, "group_spread"),
])
def test_invalid_spec(field, value, message):
    spec = SyntheticSpec(**{field: value})
    with pytest.raises(SpecError, match=message):
        generate(spec)


def test_generate_applies_mislabel_rate():
    train, test = generate(SyntheticSpec(mislabel_rate=0.25))
    assert train.n_corrupted == 100
    assert test.n_corrupted == 0


class TestLabelNoise:
    @pytest.fixture
    def clean(self):
        y = np.repeat(np.arange(6), 100)
        return Dataset(np.zeros((600, 2)), y, y.copy())

    def test_rate_zero_unchanged(self, clean):
        assert inject_label_noise(clean, 0.0, seed=1) == clean

    def test_exact_count(self, clean):
        noisy = inject_label_noise(clean, 0.1, seed=1)
        assert noisy.n_corrupted == 60
        np.testing.assert_array_equal(noisy.true_class, clean.true_class)

    def test_corrupted_rows_differ(self, clean):
        noisy = inject_label_noise(clean, 0.5, seed=2)
        bad = noisy.observed_class != noisy.true_class
        assert bad.sum() == 300
        assert set(noisy.observed_class[bad]) == set(range(6))

    def test_sibling_mode_stays_in_group(self, clean):
        noisy = inject_label_noise(clean, 0.4, seed=3, mode="sibling", n_classes=6, group_size=3)
        bad = noisy.observed_class != noisy.true_class
        assert bad.sum() == 240
        np.testing.assert_array_equal(noisy.observed_class[bad] // 3, noisy.true_class[bad] // 3)

    def test_deterministic(self, clean):
        assert inject_label_noise(clean, 0.2, seed=5) == inject_label_noise(clean, 0.2, seed=5)

    def test_rejects_bad_rate(self, clean):
        with pytest.raises(ValueError):
            inject_label_noise(clean, 1.0, seed=0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        train, test = generate(SyntheticSpec(mislabel_rate=0.2, samples_per_class_train=5))
        for ds in (train, test):
            save_csv(ds, tmp_path / f"{ds.split}.csv")
            assert load_csv(tmp_path / f"{ds.split}.csv") == ds

    def test_header(self, tmp_path):
        train, _ = generate(SyntheticSpec(input_dim=3, n_super_groups=8, samples_per_class_train=1))
        save_csv(train, tmp_path / "d.csv")
        assert (tmp_path / "d.csv").read_text().splitlines()[0] == "split,true_class,observed_class,x0,x1,x2"

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(DataFormatError, match="no header"):
            load_csv(tmp_path / "e.csv")

    def test_truncated_row_names_line(self, tmp_path):
        (tmp_path / "t.csv").write_text("split,true_class,observed_class,x0,x1\ntrain,0,0,1.0,2.0\ntrain,1,1,3.0\n")
        with pytest.raises(DataFormatError, match=":3:"):
            load_csv(tmp_path / "t.csv")

    def test_bad_number_names_line(self, tmp_path):
        (tmp_path / "b.csv").write_text("split,true_class,observed_class,x0\ntrain,zero,0,1.0\n")
        with pytest.raises(DataFormatError, match=":2:"):
            load_csv(tmp_path / "b.csv")
