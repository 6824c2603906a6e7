"""Training loop for the dressed circuit: Adam, step LR decay, checkpoints.

Determinism contract: identical (data, config, seed) produce bit-identical
parameters, history rows, and checkpoint files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import CircuitConfig, variant_name, variant_preset
from .data import FeatureRecord
from .dressed import DressedParams, backward_full, forward, init_params, predict
from .metrics import MetricsReport, confusion, report

HISTORY_HEADER = "epoch,learning_rate,train_loss,train_accuracy,val_loss,val_accuracy"
CHECKPOINT_FORMAT_VERSION = 1


class NumericError(RuntimeError):
    """A loss or gradient stopped being finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 8
    base_lr: float = 1e-3
    lr_gamma: float = 0.1
    lr_step_epochs: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    q_delta: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")
        if not 0 < self.lr_gamma <= 1:
            raise ValueError(f"lr_gamma must be in (0, 1], got {self.lr_gamma}")
        if self.lr_step_epochs < 1:
            raise ValueError(
                f"lr_step_epochs must be >= 1, got {self.lr_step_epochs}")
        if not 0 <= self.adam_beta1 < 1 or not 0 <= self.adam_beta2 < 1:
            raise ValueError("adam betas must lie in [0, 1)")
        if self.adam_epsilon <= 0:
            raise ValueError("adam_epsilon must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "base_lr": self.base_lr,
            "lr_gamma": self.lr_gamma,
            "lr_step_epochs": self.lr_step_epochs,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_epsilon": self.adam_epsilon,
            "q_delta": self.q_delta,
            "seed": self.seed,
        }


def lr_at_epoch(epoch: int, config: TrainConfig) -> float:
    """Step decay: base_lr * gamma^floor(epoch / step)."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return config.base_lr * config.lr_gamma ** (epoch // config.lr_step_epochs)


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """-log softmax(logits)[label], max-subtracted for stability."""
    logits = np.asarray(logits, dtype=float)
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits in cross_entropy")
    if not 0 <= label < logits.size:
        raise ValueError(f"label {label} out of range [0, {logits.size})")
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: DressedParams) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params.tensors()],
                   v=[np.zeros_like(p) for p in params.tensors()])


def adam_step(params: DressedParams, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place."""
    for p, g in zip(params.tensors(), grads.tensors()):
        if p.shape != g.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter {p.shape}")
    state.t += 1
    t = state.t
    for p, g, m, v in zip(params.tensors(), grads.tensors(), state.m, state.v):
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + epsilon)


@dataclass
class EpochRecord:
    epoch: int
    learning_rate: float
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class FitResult:
    params: DressedParams
    history: list[EpochRecord]
    best_epoch: int


def mean_loss_accuracy(params: DressedParams, records: list[FeatureRecord],
                       config: CircuitConfig) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a record list."""
    if not records:
        raise ValueError("cannot evaluate an empty record list")
    total_loss = 0.0
    correct = 0
    for rec in records:
        logits = forward(params, rec.features, config)
        total_loss += cross_entropy(logits, rec.label)
        if int(np.argmax(logits)) == rec.label:
            correct += 1
    return total_loss / len(records), correct / len(records)


def predict_all(params: DressedParams, records: list[FeatureRecord],
                config: CircuitConfig) -> tuple[np.ndarray, np.ndarray]:
    """(true_labels, predicted_labels) over a record list, in order."""
    true = np.array([rec.label for rec in records], dtype=int)
    pred = np.array([predict(params, rec.features, config) for rec in records],
                    dtype=int)
    return true, pred


def evaluate(params: DressedParams, records: list[FeatureRecord],
             config: CircuitConfig) -> MetricsReport:
    """Predict every record and score the resulting confusion matrix."""
    if not records:
        raise ValueError("cannot evaluate an empty record list")
    true, pred = predict_all(params, records, config)
    return report(confusion(true, pred, params.n_classes))


def fit(train_set: list[FeatureRecord], val_set: list[FeatureRecord],
        circuit_config: CircuitConfig, train_config: TrainConfig,
        n_classes: int | None = None) -> FitResult:
    """Minibatch Adam training with per-epoch validation tracking.

    Returns the parameters from the epoch with the highest validation
    accuracy (later epoch wins ties). epochs=0 returns the initial
    parameters and an empty history.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    feature_dim = train_set[0].features.size
    for rec in train_set + val_set:
        if rec.features.size != feature_dim:
            raise ValueError("inconsistent feature dimensions across records")
    if n_classes is None:
        n_classes = max(rec.label for rec in train_set + val_set) + 1
    params = init_params(circuit_config, feature_dim, n_classes,
                         seed=train_config.seed, q_delta=train_config.q_delta)
    if train_config.epochs == 0:
        return FitResult(params=params, history=[], best_epoch=0)
    state = AdamState.for_params(params)
    # Shuffle order must not perturb the init draws, so it gets its own stream.
    shuffle_rng = np.random.default_rng(train_config.seed + 1)
    history: list[EpochRecord] = []
    best_params = params.copy()
    best_acc = -1.0
    best_epoch = 0
    for epoch in range(train_config.epochs):
        lr = lr_at_epoch(epoch, train_config)
        order = shuffle_rng.permutation(len(train_set))
        for batch_index, start in enumerate(
                range(0, len(order), train_config.batch_size)):
            batch = order[start:start + train_config.batch_size]
            grad_sum = None
            for i in batch:
                rec = train_set[i]
                loss, grads, _ = backward_full(params, rec.features,
                                               rec.label, circuit_config)
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, batch {batch_index}")
                if grad_sum is None:
                    grad_sum = grads
                else:
                    for acc, g in zip(grad_sum.tensors(), grads.tensors()):
                        acc += g
            for g in grad_sum.tensors():
                g /= len(batch)
                if not np.isfinite(g).all():
                    raise NumericError(
                        f"non-finite gradient at epoch {epoch}, "
                        f"batch {batch_index}")
            adam_step(params, grad_sum, state, lr,
                      beta1=train_config.adam_beta1,
                      beta2=train_config.adam_beta2,
                      epsilon=train_config.adam_epsilon)
        train_loss, train_acc = mean_loss_accuracy(params, train_set,
                                                   circuit_config)
        val_loss, val_acc = mean_loss_accuracy(params, val_set, circuit_config)
        history.append(EpochRecord(epoch, lr, train_loss, train_acc,
                                   val_loss, val_acc))
        if val_acc >= best_acc:
            best_acc = val_acc
            best_params = params.copy()
            best_epoch = epoch
    return FitResult(params=best_params, history=history, best_epoch=best_epoch)


def write_history(history: list[EpochRecord], path: str | Path) -> None:
    lines = [HISTORY_HEADER]
    for rec in history:
        lines.append(",".join([
            str(rec.epoch),
            format(rec.learning_rate, ".17g"),
            format(rec.train_loss, ".17g"),
            format(rec.train_accuracy, ".17g"),
            format(rec.val_loss, ".17g"),
            format(rec.val_accuracy, ".17g"),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_history(path: str | Path) -> list[EpochRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != HISTORY_HEADER:
        raise ValueError(f"{path}: bad history header")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        e, lr, tl, ta, vl, va = line.split(",")
        out.append(EpochRecord(int(e), float(lr), float(tl), float(ta),
                               float(vl), float(va)))
    return out


@dataclass
class Checkpoint:
    """Everything needed to reload and run a trained model."""
    circuit: CircuitConfig
    params: DressedParams
    class_names: list[str]
    train_config: dict
    best_epoch: int


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "variant": variant_name(ckpt.circuit.variant),
        "entangler_angle": ckpt.circuit.variant.entangler_angle,
        "n_qubits": ckpt.circuit.n_qubits,
        "q_depth": ckpt.circuit.q_depth,
        "feature_dim": ckpt.params.feature_dim,
        "n_classes": ckpt.params.n_classes,
        "class_names": list(ckpt.class_names),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in [
                ("pre_weights", ckpt.params.pre_weights),
                ("pre_bias", ckpt.params.pre_bias),
                ("q_weights", ckpt.params.q_weights),
                ("post_weights", ckpt.params.post_weights),
                ("post_bias", ckpt.params.post_bias),
            ]
        },
        "train_config": ckpt.train_config,
        "best_epoch": ckpt.best_epoch,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: invalid checkpoint JSON: {e}") from e
    if raw.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported checkpoint format_version "
            f"{raw.get('format_version')!r}")
    variant = variant_preset(raw["variant"],
                             entangler_angle=raw["entangler_angle"])
    circuit = CircuitConfig(n_qubits=raw["n_qubits"], q_depth=raw["q_depth"],
                            variant=variant)

    def tensor(name: str) -> np.ndarray:
        entry = raw["params"][name]
        return np.array(entry["data"], dtype=float).reshape(entry["shape"])

    params = DressedParams(
        pre_weights=tensor("pre_weights"),
        pre_bias=tensor("pre_bias"),
        q_weights=tensor("q_weights"),
        post_weights=tensor("post_weights"),
        post_bias=tensor("post_bias"),
    )
    if params.pre_weights.shape != (circuit.n_qubits, raw["feature_dim"]):
        raise ValueError(
            f"{path}: pre_weights shape does not match n_qubits/feature_dim")
    if params.q_weights.shape != (circuit.q_depth, circuit.n_qubits):
        raise ValueError(f"{path}: q_weights shape does not match circuit")
    if params.post_weights.shape != (raw["n_classes"], circuit.n_qubits):
        raise ValueError(
            f"{path}: post_weights shape does not match n_classes/n_qubits")
    return Checkpoint(circuit=circuit, params=params,
                      class_names=list(raw["class_names"]),
                      train_config=dict(raw["train_config"]),
                      best_epoch=int(raw["best_epoch"]))
