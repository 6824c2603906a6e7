import json
import math

import numpy as np
import pytest

import oracles
from dressedq.circuit import CircuitConfig, variant_preset
from dressedq.data import CLASS_NAMES, FeatureRecord, synth_blobs, split
from dressedq.dressed import init_params
from dressedq.training import (
    AdamState,
    Checkpoint,
    HISTORY_HEADER,
    NumericError,
    TrainConfig,
    adam_step,
    cross_entropy,
    evaluate,
    fit,
    load_checkpoint,
    lr_at_epoch,
    mean_loss_accuracy,
    predict_all,
    read_history,
    save_checkpoint,
    write_history,
)


def small_circuit(q_depth=1, n_qubits=2, preset="hadamard-cnot"):
    return CircuitConfig(n_qubits=n_qubits, q_depth=q_depth,
                         variant=variant_preset(preset))


def tiny_dataset(seed=0, per_class=4, feature_dim=4, separation=6.0):
    _, records = synth_blobs(seed=seed, per_class=per_class,
                             feature_dim=feature_dim, separation=separation)
    return split(records, 0.25, seed=seed)


class TestCrossEntropy:
    def test_uniform_logits(self):
        assert abs(cross_entropy(np.zeros(5), 0) - math.log(5)) < 1e-12

    def test_stability_with_huge_logit(self):
        loss = cross_entropy(np.array([1000.0, 0, 0, 0, 0]), 0)
        assert 0.0 <= loss < 1e-12

    def test_matches_extended_precision_oracle(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 50
        logits = [1.0, 2.0, 3.0, 4.0, 5.0]
        label = 4
        denom = sum(mpmath.e ** mpmath.mpf(v) for v in logits)
        want = float(-mpmath.log(mpmath.e ** mpmath.mpf(logits[label]) / denom))
        assert abs(cross_entropy(np.array(logits), label) - want) < 1e-12

    def test_validation(self):
        with pytest.raises(NumericError):
            cross_entropy(np.array([np.nan, 0.0]), 0)
        with pytest.raises(ValueError):
            cross_entropy(np.zeros(3), 3)


class TestLrSchedule:
    def test_formula(self):
        cfg = TrainConfig(epochs=30)
        assert lr_at_epoch(0, cfg) == 1e-3
        assert abs(lr_at_epoch(10, cfg) - 1e-4) < 1e-19
        assert abs(lr_at_epoch(25, cfg) - 1e-5) < 1e-19

    def test_custom_schedule(self):
        cfg = TrainConfig(epochs=10, base_lr=0.5, lr_gamma=0.5,
                          lr_step_epochs=3)
        assert lr_at_epoch(2, cfg) == 0.5
        assert lr_at_epoch(3, cfg) == 0.25
        assert lr_at_epoch(6, cfg) == 0.125

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, base_lr=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, lr_gamma=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, lr_step_epochs=0)


class TestAdam:
    def test_first_step_hand_case(self):
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=2, n_classes=2, seed=0)
        for t in params.tensors():
            t[:] = 0.0
        grads = params.copy()
        for g in grads.tensors():
            g[:] = 1.0
        state = AdamState.for_params(params)
        adam_step(params, grads, state, lr=0.1)
        # bias-corrected first step moves every entry by -lr/(1 + eps)
        for t in params.tensors():
            assert np.abs(t + 0.1).max() < 1e-6
        assert state.t == 1

    def test_zero_gradient_leaves_params(self):
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=3, n_classes=3, seed=1)
        before = params.copy()
        grads = params.copy()
        for g in grads.tensors():
            g[:] = 0.0
        state = AdamState.for_params(params)
        adam_step(params, grads, state, lr=0.1)
        for t, b in zip(params.tensors(), before.tensors()):
            assert np.array_equal(t, b)

    def test_step_count_increments(self):
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=2, n_classes=2, seed=2)
        grads = params.copy()
        state = AdamState.for_params(params)
        for expected in (1, 2, 3):
            adam_step(params, grads, state, lr=1e-3)
            assert state.t == expected

    def test_shape_mismatch_rejected(self):
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=2, n_classes=2, seed=3)
        grads = init_params(circuit, feature_dim=3, n_classes=2, seed=3)
        state = AdamState.for_params(params)
        with pytest.raises(ValueError):
            adam_step(params, grads, state, lr=1e-3)


class TestFit:
    def test_epochs_zero_returns_initial_params(self):
        train, val = tiny_dataset()
        circuit = small_circuit()
        cfg = TrainConfig(epochs=0, seed=5)
        result = fit(train, val, circuit, cfg, n_classes=5)
        expected = init_params(circuit, feature_dim=4, n_classes=5, seed=5,
                               q_delta=cfg.q_delta)
        assert result.history == []
        assert result.best_epoch == 0
        for got, want in zip(result.params.tensors(), expected.tensors()):
            assert np.array_equal(got, want)

    def test_deterministic_histories(self):
        train, val = tiny_dataset()
        circuit = small_circuit(q_depth=2)
        cfg = TrainConfig(epochs=3, batch_size=4, base_lr=0.02, seed=6)
        a = fit(train, val, circuit, cfg, n_classes=5)
        b = fit(train, val, circuit, cfg, n_classes=5)
        assert len(a.history) == 3
        for ra, rb in zip(a.history, b.history):
            assert ra == rb
        for x, y in zip(a.params.tensors(), b.params.tensors()):
            assert np.array_equal(x, y)

    def test_history_learning_rates_match_schedule(self):
        train, val = tiny_dataset()
        circuit = small_circuit()
        cfg = TrainConfig(epochs=4, base_lr=0.05, lr_gamma=0.5,
                          lr_step_epochs=2, seed=7)
        result = fit(train, val, circuit, cfg, n_classes=5)
        for rec in result.history:
            assert rec.learning_rate == lr_at_epoch(rec.epoch, cfg)

    def test_best_params_at_least_first_epoch_val_accuracy(self):
        train, val = tiny_dataset(per_class=8)
        circuit = small_circuit(q_depth=2)
        cfg = TrainConfig(epochs=5, base_lr=0.02, seed=8)
        result = fit(train, val, circuit, cfg, n_classes=5)
        _, best_acc = mean_loss_accuracy(result.params, val, circuit)
        assert best_acc >= result.history[0].val_accuracy
        best_row = max(result.history,
                       key=lambda rec: (rec.val_accuracy, rec.epoch))
        assert result.best_epoch == best_row.epoch

    def test_empty_sets_rejected(self):
        train, val = tiny_dataset()
        circuit = small_circuit()
        cfg = TrainConfig(epochs=1)
        with pytest.raises(ValueError):
            fit([], val, circuit, cfg)
        with pytest.raises(ValueError):
            fit(train, [], circuit, cfg)

    def test_non_finite_loss_names_epoch_and_batch(self):
        train, val = tiny_dataset()
        circuit = small_circuit()
        # nan features reach the loss as nan, tripping the guard immediately
        poisoned = [FeatureRecord(label=rec.label,
                                  features=np.full_like(rec.features, np.nan))
                    for rec in train]
        cfg = TrainConfig(epochs=2, batch_size=4, seed=9)
        with pytest.raises(NumericError, match=r"epoch 0, batch 0"):
            fit(poisoned, val, circuit, cfg, n_classes=5)


class TestEvaluate:
    def test_confusion_total_and_accuracy(self):
        train, val = tiny_dataset(per_class=6)
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=4, n_classes=5, seed=10)
        rep = evaluate(params, val, circuit)
        true, pred = predict_all(params, val, circuit)
        want = oracles.count_metrics(list(true), list(pred), 5)
        assert abs(rep.accuracy - want["accuracy"]) < 1e-12
        for name in ("precision", "recall", "f1", "specificity"):
            got = getattr(rep, name)
            assert np.abs(got - np.array(want[name])).max() < 1e-12

    def test_single_record(self):
        train, _ = tiny_dataset()
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=4, n_classes=5, seed=11)
        rep = evaluate(params, train[:1], circuit)
        assert rep.accuracy in (0.0, 1.0)

    def test_empty_rejected(self):
        circuit = small_circuit()
        params = init_params(circuit, feature_dim=4, n_classes=5, seed=12)
        with pytest.raises(ValueError):
            evaluate(params, [], circuit)


class TestHistoryFile:
    def test_header_exact(self):
        assert HISTORY_HEADER == ("epoch,learning_rate,train_loss,"
                                  "train_accuracy,val_loss,val_accuracy")

    def test_round_trip(self, tmp_path):
        train, val = tiny_dataset()
        circuit = small_circuit()
        cfg = TrainConfig(epochs=3, base_lr=0.02, seed=13)
        result = fit(train, val, circuit, cfg, n_classes=5)
        path = tmp_path / "history.csv"
        write_history(result.history, path)
        again = read_history(path)
        assert again == result.history

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "history.csv"
        path.write_text("epoch,loss\n")
        with pytest.raises(ValueError):
            read_history(path)


class TestCheckpoint:
    def make_checkpoint(self, seed=14):
        circuit = small_circuit(q_depth=2, n_qubits=3, preset="rx-crx")
        params = init_params(circuit, feature_dim=6, n_classes=5, seed=seed)
        cfg = TrainConfig(epochs=2, seed=seed)
        return Checkpoint(circuit=circuit, params=params,
                          class_names=list(CLASS_NAMES),
                          train_config=cfg.to_dict(), best_epoch=1)

    def test_round_trip_bit_exact(self, tmp_path):
        ckpt = self.make_checkpoint()
        path = tmp_path / "checkpoint.json"
        save_checkpoint(ckpt, path)
        again = load_checkpoint(path)
        assert again.circuit == ckpt.circuit
        assert again.class_names == ckpt.class_names
        assert again.train_config == ckpt.train_config
        assert again.best_epoch == 1
        for got, want in zip(again.params.tensors(), ckpt.params.tensors()):
            assert np.array_equal(got, want)

    def test_variant_and_angle_survive(self, tmp_path):
        circuit = CircuitConfig(
            n_qubits=2, q_depth=1,
            variant=variant_preset("hadamard-crx", entangler_angle=0.25))
        params = init_params(circuit, feature_dim=4, n_classes=5, seed=15)
        ckpt = Checkpoint(circuit=circuit, params=params,
                          class_names=list(CLASS_NAMES), train_config={},
                          best_epoch=0)
        path = tmp_path / "checkpoint.json"
        save_checkpoint(ckpt, path)
        again = load_checkpoint(path)
        assert again.circuit.variant.entangler == "crx"
        assert again.circuit.variant.entangler_angle == 0.25

    def test_format_version_checked(self, tmp_path):
        ckpt = self.make_checkpoint()
        path = tmp_path / "checkpoint.json"
        save_checkpoint(ckpt, path)
        raw = json.loads(path.read_text())
        raw["format_version"] = 99
        path.write_text(json.dumps(raw))
        with pytest.raises(ValueError, match="format_version"):
            load_checkpoint(path)

    def test_shape_mismatch_detected(self, tmp_path):
        ckpt = self.make_checkpoint()
        path = tmp_path / "checkpoint.json"
        save_checkpoint(ckpt, path)
        raw = json.loads(path.read_text())
        raw["n_qubits"] = 4  # no longer matches the stored tensors
        path.write_text(json.dumps(raw))
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "checkpoint.json"
        path.write_text("{broken")
        with pytest.raises(ValueError, match="JSON"):
            load_checkpoint(path)
