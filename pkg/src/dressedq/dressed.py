"""The dressed quantum circuit: linear pre-layer -> tanh -> pi/2 scaling ->
variational circuit -> linear post-layer, with forward, backward, and predict.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitConfig, quantum_net
from .gradients import param_shift_jacobian

ANGLE_SCALE = math.pi / 2.0


@dataclass
class DressedParams:
    """Trainable parameters of the dressed circuit.

    pre_weights (n_qubits x D) and pre_bias feed the embedding; q_weights
    (q_depth x n_qubits) are the circuit rotation angles; post_weights
    (C x n_qubits) and post_bias produce the class logits.
    """

    pre_weights: np.ndarray
    pre_bias: np.ndarray
    q_weights: np.ndarray
    post_weights: np.ndarray
    post_bias: np.ndarray

    def tensors(self) -> tuple[np.ndarray, ...]:
        return (self.pre_weights, self.pre_bias, self.q_weights,
                self.post_weights, self.post_bias)

    def copy(self) -> "DressedParams":
        return DressedParams(*(t.copy() for t in self.tensors()))

    @property
    def feature_dim(self) -> int:
        return self.pre_weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.post_bias.shape[0]


@dataclass
class DressedGradients:
    """Loss gradients, shape-identical to DressedParams."""

    pre_weights: np.ndarray
    pre_bias: np.ndarray
    q_weights: np.ndarray
    post_weights: np.ndarray
    post_bias: np.ndarray

    def tensors(self) -> tuple[np.ndarray, ...]:
        return (self.pre_weights, self.pre_bias, self.q_weights,
                self.post_weights, self.post_bias)


def init_params(config: CircuitConfig, feature_dim: int, n_classes: int,
                seed: int, q_delta: float = 0.01) -> DressedParams:
    """Seeded initialization: small-angle circuit weights, uniform classical layers.

    q_weights ~ q_delta * N(0, 1); classical weights ~ U(-1/sqrt(fan_in),
    +1/sqrt(fan_in)); biases zero.
    """
    if q_delta <= 0:
        raise ValueError(f"q_delta must be positive, got {q_delta}")
    if feature_dim < 1 or n_classes < 2:
        raise ValueError("feature_dim must be >= 1 and n_classes >= 2")
    rng = np.random.default_rng(seed)
    n = config.n_qubits
    pre_bound = 1.0 / math.sqrt(feature_dim)
    post_bound = 1.0 / math.sqrt(n)
    return DressedParams(
        pre_weights=rng.uniform(-pre_bound, pre_bound, size=(n, feature_dim)),
        pre_bias=np.zeros(n),
        q_weights=q_delta * rng.standard_normal((config.q_depth, n)),
        post_weights=rng.uniform(-post_bound, post_bound, size=(n_classes, n)),
        post_bias=np.zeros(n_classes),
    )


def _check_features(params: DressedParams, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=float).ravel()
    if x.size != params.feature_dim:
        raise ValueError(
            f"expected {params.feature_dim} features, got {x.size}")
    return x


def _embed_angles(params: DressedParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(params.pre_weights @ x + params.pre_bias)
    return t, ANGLE_SCALE * t


def forward(params: DressedParams, features: np.ndarray,
            config: CircuitConfig) -> np.ndarray:
    """Class logits for one feature vector."""
    x = _check_features(params, features)
    _, angles = _embed_angles(params, x)
    z = quantum_net(angles, params.q_weights.ravel(), config)
    return params.post_weights @ z + params.post_bias


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - math.log(np.exp(shifted).sum())


def backward_full(params: DressedParams, features: np.ndarray, label: int,
                  config: CircuitConfig) -> tuple[float, DressedGradients, np.ndarray]:
    """Loss, gradients, and logits for one labeled sample (chain rule end to end)."""
    if not 0 <= label < params.n_classes:
        raise ValueError(
            f"label {label} out of range for {params.n_classes} classes")
    x = _check_features(params, features)
    t, angles = _embed_angles(params, x)
    q_flat = params.q_weights.ravel()
    z = quantum_net(angles, q_flat, config)
    logits = params.post_weights @ z + params.post_bias

    log_p = _log_softmax(logits)
    loss = -log_p[label]
    d_logits = np.exp(log_p)
    d_logits[label] -= 1.0

    jac = param_shift_jacobian(angles, q_flat, config)
    d_z = params.post_weights.T @ d_logits
    d_angles = jac.d_inputs.T @ d_z
    d_pre = d_angles * ANGLE_SCALE * (1.0 - t * t)

    grads = DressedGradients(
        pre_weights=np.outer(d_pre, x),
        pre_bias=d_pre,
        q_weights=(jac.d_weights.T @ d_z).reshape(params.q_weights.shape),
        post_weights=np.outer(d_logits, z),
        post_bias=d_logits,
    )
    return float(loss), grads, logits


def backward(params: DressedParams, features: np.ndarray, label: int,
             config: CircuitConfig) -> tuple[float, DressedGradients]:
    """Softmax cross-entropy loss and its gradients w.r.t. every parameter."""
    loss, grads, _ = backward_full(params, features, label, config)
    return loss, grads


def predict(params: DressedParams, features: np.ndarray,
            config: CircuitConfig) -> int:
    """Argmax class; ties resolve to the lowest index."""
    return int(np.argmax(forward(params, features, config)))
