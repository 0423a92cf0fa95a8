import numpy as np
import pytest

import pel.trainer as trainer_mod
from pel.model import MlpModel, predict
from pel.synth_data import Dataset, SyntheticSpec, generate
from pel.trainer import (TrainConfig, TrainingDivergedError, build_model, evaluate, run_beta_sweep,
                         sibling_analysis, train)

TOY = dict(hidden_dims=(16,), feature_dim=8)


@pytest.fixture(scope="module")
def small_benchmark():
    return generate(SyntheticSpec(samples_per_class_train=10, samples_per_class_test=10))


def test_paper_defaults():
    c = TrainConfig()
    assert (c.alpha, c.beta, c.t1, c.t2) == (0.9, 6.0, 1.0, 1.0)
    assert (c.lr, c.momentum, c.weight_decay, c.batch_size) == (0.001, 0.9, 1e-4, 8)
    assert not c.normalize_enhanced_target and not c.score_before_update
    assert c.cosine_mode == "normalized"


@pytest.mark.parametrize("change", [dict(strategy="mixup"), dict(alpha=1.0), dict(beta=0.0),
                                    dict(cosine_mode="l1"), dict(smoothing_epsilon=1.0)])
def test_invalid_config(change, toy_separable):
    with pytest.raises(ValueError):
        train(TrainConfig(**change), toy_separable, toy_separable)


def test_onehot_ce_fits_separable_toy(toy_separable):
    _, _, log = train(TrainConfig(strategy="onehot_ce", epochs=200, **TOY), toy_separable, toy_separable)
    reached = np.flatnonzero(log.column("train_accuracy") >= 0.95)
    assert reached.size and reached[0] < 200


def test_pel_keeps_up_with_ce_on_toy(toy_separable):
    cfg = TrainConfig(epochs=60, **TOY)
    _, _, ce = train(cfg.replace(strategy="onehot_ce"), toy_separable, toy_separable)
    _, bank, pel = train(cfg, toy_separable, toy_separable)
    assert bank is not None
    assert pel.rows[-1].train_accuracy >= ce.rows[-1].train_accuracy - 0.02


def test_zero_epochs_leaves_model_untouched(toy_separable):
    cfg = TrainConfig(epochs=0, **TOY)
    model, bank, log = train(cfg, toy_separable, toy_separable)
    fresh = build_model(cfg, 4, 3)
    assert len(log) == 0
    for a, b in zip(model.parameters(), fresh.parameters()):
        assert np.array_equal(a, b)
    assert bank.initialized.all()


def test_baselines_have_no_bank(toy_separable):
    for strategy in ("onehot_ce", "label_smoothing"):
        _, bank, log = train(TrainConfig(strategy=strategy, epochs=2, **TOY), toy_separable, toy_separable)
        assert bank is None
        assert np.all(log.column("prototype_drift") == 0)


def test_metrics_log_shape(small_benchmark):
    _, _, log = train(TrainConfig(epochs=3), *small_benchmark)
    assert log.column("epoch").tolist() == [1, 2, 3]
    for name in ("train_accuracy", "test_accuracy"):
        acc = log.column(name)
        assert np.all((acc >= 0) & (acc <= 1))
    assert np.all(np.isfinite(log.column("prototype_drift")))
    assert np.all(log.column("wall_seconds") >= 0)


def test_metrics_csv(tmp_path, small_benchmark):
    _, _, log = train(TrainConfig(epochs=2), *small_benchmark)
    log.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_loss,train_accuracy,test_accuracy,prototype_drift,wall_seconds"
    assert len(lines) == 3


def test_identical_seed_identical_log(small_benchmark):
    a = train(TrainConfig(epochs=3), *small_benchmark)[2]
    b = train(TrainConfig(epochs=3), *small_benchmark)[2]
    assert a.deterministic_rows() == b.deterministic_rows()
    c = train(TrainConfig(epochs=3, seed=1), *small_benchmark)[2]
    assert a.deterministic_rows() != c.deterministic_rows()


def test_ablation_switches_change_training(small_benchmark):
    base = train(TrainConfig(epochs=2), *small_benchmark)[2].deterministic_rows()
    for change in (dict(score_before_update=True), dict(normalize_enhanced_target=True),
                   dict(cosine_mode="raw_dot")):
        other = train(TrainConfig(epochs=2, **change), *small_benchmark)[2].deterministic_rows()
        assert other != base, change


def test_normalized_target_loss_scale(small_benchmark):
    # an unnormalized target of mass beta + 1 has KL >= (beta + 1) log(beta + 1)
    raw = train(TrainConfig(epochs=1), *small_benchmark)[2].rows[0].train_loss
    norm = train(TrainConfig(epochs=1, normalize_enhanced_target=True), *small_benchmark)[2].rows[0].train_loss
    assert raw >= 7 * np.log(7)
    assert 0 <= norm < raw


def test_divergence_reports_position(small_benchmark):
    with pytest.warns(RuntimeWarning):
        with pytest.raises(TrainingDivergedError) as info:
            train(TrainConfig(lr=1e300, epochs=2), *small_benchmark)
    assert info.value.epoch == 1 and info.value.batch >= 0


def test_enhanced_labels_argmax_is_observed_label(monkeypatch, small_benchmark):
    seen = []
    original = trainer_mod.fuse_labels

    def spy(y, w, beta):
        out = original(y, w, beta)
        seen.append(np.array_equal(np.argmax(out, axis=1), np.argmax(y, axis=1)))
        return out

    monkeypatch.setattr(trainer_mod, "fuse_labels", spy)
    for beta in (4.0, 6.0, 8.0):
        train(TrainConfig(epochs=1, beta=beta), *small_benchmark)
    assert seen and all(seen)


def test_batch_means_use_observed_labels(monkeypatch):
    train_ds, test_ds = generate(SyntheticSpec(samples_per_class_train=4, samples_per_class_test=1,
                                               mislabel_rate=0.5))
    grouped = []
    original = trainer_mod.batch_class_means

    def spy(f, labels):
        grouped.append(np.array(labels))
        return original(f, labels)

    monkeypatch.setattr(trainer_mod, "batch_class_means", spy)
    train(TrainConfig(epochs=1, batch_size=64), train_ds, test_ds, 8)
    assert sorted(np.concatenate(grouped).tolist()) == sorted(train_ds.observed_class.tolist())


class TestEvaluate:
    def test_zero_head_is_chance(self, small_benchmark):
        _, test = small_benchmark
        model = build_model(TrainConfig(), 64, 8)
        model.head[0][:] = 0.0
        assert evaluate(model, test) == pytest.approx(1 / 8)

    def test_memorized_training_set(self, toy_separable):
        model, _, _ = train(TrainConfig(strategy="onehot_ce", epochs=200, **TOY), toy_separable, toy_separable)
        assert evaluate(model, toy_separable) == 1.0

    def test_empty_rejected(self):
        model = MlpModel.init(4, (), 2, 3)
        with pytest.raises(ValueError, match="empty"):
            evaluate(model, Dataset(np.zeros((0, 4)), [], []))

    def test_uses_true_labels(self, toy_separable):
        model, _, _ = train(TrainConfig(strategy="onehot_ce", epochs=200, **TOY), toy_separable, toy_separable)
        relabeled = Dataset(toy_separable.X, toy_separable.true_class, (toy_separable.true_class + 1) % 3)
        assert evaluate(model, relabeled) == 1.0


class AccessTracker:
    def __init__(self, wrapped):
        object.__setattr__(self, "_wrapped", wrapped)
        object.__setattr__(self, "accesses", [])

    def __getattr__(self, name):
        self.accesses.append(name)
        return getattr(self._wrapped, name)

    def __setattr__(self, name, value):
        self.accesses.append(name)
        setattr(self._wrapped, name, value)


def test_evaluate_never_touches_pel_state(monkeypatch, small_benchmark):
    model, bank, _ = train(TrainConfig(epochs=2), *small_benchmark)
    tracked = AccessTracker(bank)

    def forbidden(*args, **kwargs):
        raise AssertionError("PEL machinery used at inference")

    for name in ("similarity_scores", "ema_update", "batch_class_means", "init_bank", "fuse_labels"):
        monkeypatch.setattr(trainer_mod, name, forbidden)
    acc = evaluate(model, small_benchmark[1])
    preds = predict(model, small_benchmark[1].X)
    assert tracked.accesses == []
    del bank, tracked
    monkeypatch.undo()
    assert evaluate(model, small_benchmark[1]) == acc
    np.testing.assert_array_equal(predict(model, small_benchmark[1].X), preds)


def test_prototype_drift_settles():
    train_ds, test_ds = generate(SyntheticSpec())
    _, _, log = train(TrainConfig(epochs=40), train_ds, test_ds, 8)
    drift = log.column("prototype_drift")
    assert np.all(np.isfinite(drift))
    tail = drift[-len(drift) // 4:]
    assert np.polyfit(np.arange(tail.size), tail, 1)[0] <= 0


class TestBetaSweep:
    def test_sorted_rows(self, small_benchmark):
        rows = run_beta_sweep(TrainConfig(epochs=1), [8, 4, 6], *small_benchmark)
        assert [r.beta for r in rows] == [4.0, 6.0, 8.0]
        assert all(0 <= r.accuracy <= 1 and not r.error for r in rows)

    def test_single_cell_equals_train(self, small_benchmark):
        cfg = TrainConfig(epochs=2)
        (row,) = run_beta_sweep(cfg, [6], *small_benchmark)
        model, _, _ = train(cfg, *small_benchmark)
        assert row.accuracy == evaluate(model, small_benchmark[1])

    def test_failing_cell_does_not_stop_others(self, small_benchmark):
        rows = run_beta_sweep(TrainConfig(epochs=1), [-1.0, 6.0], *small_benchmark)
        assert rows[0].error and np.isnan(rows[0].accuracy)
        assert not rows[1].error and np.isfinite(rows[1].accuracy)

    def test_empty_rejected(self, small_benchmark):
        with pytest.raises(ValueError):
            run_beta_sweep(TrainConfig(), [], *small_benchmark)


def test_sibling_analysis_fields(small_benchmark):
    spec = SyntheticSpec(samples_per_class_train=10, samples_per_class_test=10)
    model, bank, _ = train(TrainConfig(epochs=1), *small_benchmark)
    out = sibling_analysis(model, bank, small_benchmark[1], spec.siblings)
    assert 0 <= out["top_negative_is_sibling"] <= 1
    assert out["mean_sibling_weight"] > 0 and out["mean_other_weight"] > 0
