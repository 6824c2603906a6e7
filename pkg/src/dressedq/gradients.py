"""Exact circuit derivatives via the parameter-shift rule, plus a
finite-difference oracle.

Every trainable angle enters the circuit through a single RX or RY rotation,
so df/dtheta = [f(theta + pi/2) - f(theta - pi/2)] / 2 exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitConfig, quantum_net, quantum_net_batch

_SHIFT = math.pi / 2.0


@dataclass
class CircuitJacobian:
    """d_weights[q, j] = d<Z_q>/d flat_weights[j]; d_inputs[q, j] = d<Z_q>/d input[j]."""

    d_weights: np.ndarray
    d_inputs: np.ndarray


def _check_dims(inputs: np.ndarray, weights: np.ndarray, config: CircuitConfig) -> None:
    if inputs.size != config.n_qubits:
        raise ValueError(
            f"expected {config.n_qubits} input angles, got {inputs.size}")
    if weights.size != config.n_weights:
        raise ValueError(
            f"expected {config.n_weights} weights, got {weights.size}")


def param_shift_jacobian(input_angles: np.ndarray, flat_weights: np.ndarray,
                         config: CircuitConfig) -> CircuitJacobian:
    """Jacobians of quantum_net outputs w.r.t. weights and input angles.

    All 2 * (n_weights + n_qubits) shifted circuits are evaluated in one
    batched simulation pass.
    """
    inputs = np.asarray(input_angles, dtype=float).ravel()
    weights = np.asarray(flat_weights, dtype=float).ravel()
    _check_dims(inputs, weights, config)
    n, n_w = config.n_qubits, config.n_weights
    n_shift = n_w + n

    batch_in = np.tile(inputs, (2 * n_shift, 1))
    batch_w = np.tile(weights, (2 * n_shift, 1))
    for j in range(n_w):
        batch_w[2 * j, j] += _SHIFT
        batch_w[2 * j + 1, j] -= _SHIFT
    for j in range(n):
        batch_in[2 * (n_w + j), j] += _SHIFT
        batch_in[2 * (n_w + j) + 1, j] -= _SHIFT

    outs = quantum_net_batch(batch_in, batch_w, config)
    diffs = 0.5 * (outs[0::2] - outs[1::2])  # (n_shift, n)
    return CircuitJacobian(d_weights=diffs[:n_w].T.copy(),
                           d_inputs=diffs[n_w:].T.copy())


def finite_diff_jacobian(input_angles: np.ndarray, flat_weights: np.ndarray,
                         config: CircuitConfig, h: float = 1e-5) -> CircuitJacobian:
    """Central-difference Jacobians; test oracle for param_shift_jacobian."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    inputs = np.asarray(input_angles, dtype=float).ravel()
    weights = np.asarray(flat_weights, dtype=float).ravel()
    _check_dims(inputs, weights, config)
    n, n_w = config.n_qubits, config.n_weights

    d_weights = np.empty((n, n_w))
    for j in range(n_w):
        plus, minus = weights.copy(), weights.copy()
        plus[j] += h
        minus[j] -= h
        d_weights[:, j] = (quantum_net(inputs, plus, config)
                           - quantum_net(inputs, minus, config)) / (2.0 * h)

    d_inputs = np.empty((n, n))
    for j in range(n):
        plus, minus = inputs.copy(), inputs.copy()
        plus[j] += h
        minus[j] -= h
        d_inputs[:, j] = (quantum_net(plus, weights, config)
                          - quantum_net(minus, weights, config)) / (2.0 * h)

    return CircuitJacobian(d_weights=d_weights, d_inputs=d_inputs)
