"""Layered variational circuit: embedding, entangling + rotation blocks, Z readout.

The entangling pattern is the two-sub-row nearest-neighbor chain: pairs
(0,1),(2,3),... followed by (1,2),(3,4),...; the first index of each pair is
the control for controlled entanglers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .statevector import (
    QuantumState,
    apply_one,
    apply_two,
    expval_z,
    make_single_gate,
    make_two_gate,
    new_zero_state,
)

SUPERPOSITIONS = ("hadamard", "hadamard_s", "hadamard_sdg", "none")
ROTATION_AXES = ("ry", "rx")
ENTANGLERS = ("cnot", "cz", "swap", "crx", "cry", "crz")
CONTROLLED_ROTATION_ENTANGLERS = ("crx", "cry", "crz")


@dataclass(frozen=True)
class GateVariant:
    """Gate selection for one circuit flavor.

    superposition: per-qubit stage opening the embedding (H, H then S,
    H then S-dagger, or nothing). rotation: axis of the embedding and
    variational rotations. entangler: two-qubit gate of the entangling
    sub-rows; entangler_angle applies only to crx/cry/crz and is fixed
    (not trainable).
    """

    superposition: str = "hadamard"
    rotation: str = "ry"
    entangler: str = "cnot"
    entangler_angle: float = math.pi

    def __post_init__(self) -> None:
        if self.superposition not in SUPERPOSITIONS:
            raise ValueError(f"unknown superposition stage {self.superposition!r}")
        if self.rotation not in ROTATION_AXES:
            raise ValueError(f"unknown rotation axis {self.rotation!r}")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"unknown entangler {self.entangler!r}")


VARIANTS: dict[str, GateVariant] = {
    "hadamard-cnot": GateVariant("hadamard", "ry", "cnot"),
    "s-hadamard-cnot": GateVariant("hadamard_s", "ry", "cnot"),
    "sdagger-hadamard-cnot": GateVariant("hadamard_sdg", "ry", "cnot"),
    "rx-cnot": GateVariant("none", "rx", "cnot"),
    "hadamard-cz": GateVariant("hadamard", "ry", "cz"),
    "hadamard-swap": GateVariant("hadamard", "ry", "swap"),
    "hadamard-crx": GateVariant("hadamard", "ry", "crx"),
    "rx-crx": GateVariant("none", "rx", "crx"),
}


def variant_preset(name: str, entangler_angle: float | None = None) -> GateVariant:
    """Look up a named preset, optionally overriding the entangler angle."""
    try:
        variant = VARIANTS[name]
    except KeyError:
        raise ValueError(
            f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}") from None
    if entangler_angle is not None:
        variant = replace(variant, entangler_angle=entangler_angle)
    return variant


def variant_name(variant: GateVariant) -> str:
    """Preset name of a variant, ignoring the entangler angle."""
    for name, preset in VARIANTS.items():
        if (preset.superposition, preset.rotation, preset.entangler) == (
                variant.superposition, variant.rotation, variant.entangler):
            return name
    raise ValueError("variant does not match any named preset")


@dataclass(frozen=True)
class CircuitConfig:
    """Circuit topology: qubit count, variational depth, gate variant."""

    n_qubits: int = 4
    q_depth: int = 6
    variant: GateVariant = field(default_factory=GateVariant)

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise ValueError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if self.q_depth < 0:
            raise ValueError(f"q_depth must be >= 0, got {self.q_depth}")

    @property
    def n_weights(self) -> int:
        return self.q_depth * self.n_qubits


def reshape_weights(flat_weights: np.ndarray, config: CircuitConfig) -> np.ndarray:
    """(q_depth * n_qubits,) -> (q_depth, n_qubits), row-major layer order."""
    flat = np.asarray(flat_weights, dtype=float)
    if flat.size != config.n_weights:
        raise ValueError(
            f"expected {config.n_weights} weights "
            f"({config.q_depth} layers x {config.n_qubits} qubits), got {flat.size}")
    return flat.reshape(config.q_depth, config.n_qubits)


def h_layer(state: QuantumState, n_qubits: int) -> QuantumState:
    """Hadamard on every qubit: the balanced-superposition stage."""
    h = make_single_gate("H")
    for q in range(n_qubits):
        apply_one(state, h, q)
    return state


def rotation_layer(state: QuantumState, angles: np.ndarray, axis: str) -> QuantumState:
    """RY (or RX) on qubit k by angles[k], for every qubit."""
    if axis not in ROTATION_AXES:
        raise ValueError(f"unknown rotation axis {axis!r}")
    angles = np.asarray(angles, dtype=float)
    if angles.size != state.n_qubits:
        raise ValueError(
            f"expected {state.n_qubits} angles, got {angles.size}")
    kind = "RY" if axis == "ry" else "RX"
    for q in range(state.n_qubits):
        apply_one(state, make_single_gate(kind, float(angles[q])), q)
    return state


def _entangler_pairs(n_qubits: int) -> list[tuple[int, int]]:
    pairs = [(i, i + 1) for i in range(0, n_qubits - 1, 2)]
    pairs += [(i, i + 1) for i in range(1, n_qubits - 1, 2)]
    return pairs


def entangling_layer(state: QuantumState, variant: GateVariant) -> QuantumState:
    """One entangling sub-row pass: even-stride pairs then odd-stride pairs."""
    angle = (variant.entangler_angle
             if variant.entangler in CONTROLLED_ROTATION_ENTANGLERS else None)
    gate = make_two_gate(variant.entangler.upper(), angle)
    for control, target in _entangler_pairs(state.n_qubits):
        apply_two(state, gate, control, target)
    return state


def embedding_layer(state: QuantumState, input_angles: np.ndarray,
                    variant: GateVariant) -> QuantumState:
    """Superposition stage per variant, then the input rotation layer."""
    n = state.n_qubits
    if variant.superposition != "none":
        h_layer(state, n)
        if variant.superposition == "hadamard_s":
            s = make_single_gate("S")
            for q in range(n):
                apply_one(state, s, q)
        elif variant.superposition == "hadamard_sdg":
            sdg = make_single_gate("S_DAGGER")
            for q in range(n):
                apply_one(state, sdg, q)
    return rotation_layer(state, input_angles, variant.rotation)


def quantum_net(input_angles: np.ndarray, flat_weights: np.ndarray,
                config: CircuitConfig) -> np.ndarray:
    """Full circuit evaluation: per-qubit Z expectations of the layered circuit.

    zero state -> embedding(input_angles) -> q_depth x (entangle, rotate) ->
    [<Z_q>] for each qubit.
    """
    inputs = np.asarray(input_angles, dtype=float)
    if inputs.size != config.n_qubits:
        raise ValueError(
            f"expected {config.n_qubits} input angles, got {inputs.size}")
    weights = reshape_weights(flat_weights, config)
    state = new_zero_state(config.n_qubits)
    embedding_layer(state, inputs, config.variant)
    for k in range(config.q_depth):
        entangling_layer(state, config.variant)
        rotation_layer(state, weights[k], config.variant.rotation)
    return np.array([expval_z(state, q) for q in range(config.n_qubits)])


# --- batched evaluation ------------------------------------------------------
# One simulation pass over a batch of parameter sets with identical topology;
# rotations carry per-batch angles, every other gate is a fixed matrix. Used by
# the parameter-shift rule, which needs 2 * n_params closely related circuits.

def _batch_fixed_one(psi: np.ndarray, matrix: np.ndarray, qubit: int) -> np.ndarray:
    out = np.tensordot(matrix, psi, axes=([1], [qubit + 1]))
    return np.moveaxis(out, 0, qubit + 1)

def _batch_fixed_two(psi: np.ndarray, matrix: np.ndarray,
                     first: int, second: int) -> np.ndarray:
    u = matrix.reshape(2, 2, 2, 2)
    out = np.tensordot(u, psi, axes=([2, 3], [first + 1, second + 1]))
    return np.moveaxis(out, (0, 1), (first + 1, second + 1))

def _batch_rotation(psi: np.ndarray, angles: np.ndarray, axis: str,
                    qubit: int) -> np.ndarray:
    n = psi.ndim - 1
    shape = psi.shape
    pre, post = 1 << qubit, 1 << (n - 1 - qubit)
    v = psi.reshape(psi.shape[0], pre, 2, post)
    c = np.cos(angles / 2.0)[:, None, None]
    s = np.sin(angles / 2.0)[:, None, None]
    a, b = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    if axis == "ry":
        out[:, :, 0, :] = c * a - s * b
        out[:, :, 1, :] = s * a + c * b
    else:
        out[:, :, 0, :] = c * a - 1j * s * b
        out[:, :, 1, :] = -1j * s * a + c * b
    return out.reshape(shape)


def quantum_net_batch(input_angles: np.ndarray, flat_weights: np.ndarray,
                      config: CircuitConfig) -> np.ndarray:
    """quantum_net over a batch: (B, n_qubits) inputs x (B, n_weights) weights."""
    inputs = np.atleast_2d(np.asarray(input_angles, dtype=float))
    weights = np.atleast_2d(np.asarray(flat_weights, dtype=float))
    n, depth = config.n_qubits, config.q_depth
    batch = inputs.shape[0]
    if inputs.shape != (batch, n) or weights.shape != (batch, config.n_weights):
        raise ValueError(
            f"expected inputs ({batch}, {n}) and weights ({batch}, {config.n_weights}), "
            f"got {inputs.shape} and {weights.shape}")
    weights = weights.reshape(batch, depth, n)
    variant = config.variant

    psi = np.zeros((batch, 2 ** n), dtype=complex)
    psi[:, 0] = 1.0
    psi = psi.reshape((batch,) + (2,) * n)

    if variant.superposition != "none":
        h = make_single_gate("H").matrix
        for q in range(n):
            psi = _batch_fixed_one(psi, h, q)
        if variant.superposition in ("hadamard_s", "hadamard_sdg"):
            kind = "S" if variant.superposition == "hadamard_s" else "S_DAGGER"
            phase = make_single_gate(kind).matrix
            for q in range(n):
                psi = _batch_fixed_one(psi, phase, q)
    for q in range(n):
        psi = _batch_rotation(psi, inputs[:, q], variant.rotation, q)

    if depth > 0:
        angle = (variant.entangler_angle
                 if variant.entangler in CONTROLLED_ROTATION_ENTANGLERS else None)
        two = make_two_gate(variant.entangler.upper(), angle).matrix
        pairs = _entangler_pairs(n)
        for k in range(depth):
            for control, target in pairs:
                psi = _batch_fixed_two(psi, two, control, target)
            for q in range(n):
                psi = _batch_rotation(psi, weights[:, k, q], variant.rotation, q)

    probs = np.abs(psi.reshape(batch, -1)) ** 2
    out = np.empty((batch, n))
    for q in range(n):
        pre, post = 1 << q, 1 << (n - 1 - q)
        v = probs.reshape(batch, pre, 2, post)
        out[:, q] = v[:, :, 0, :].sum(axis=(1, 2)) - v[:, :, 1, :].sum(axis=(1, 2))
    return out
