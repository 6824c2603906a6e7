"""Complex statevector simulation: gate matrices, gate application, Z expectations.

Basis-index convention: qubit 0 is the most significant bit, so basis index
i has the binary expansion b_0 b_1 ... b_{n-1} with i = sum_k b_k * 2**(n-1-k).
Two-qubit matrices are written in the basis |00>, |01>, |10>, |11> with the
control (first) qubit as the left bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_QUBITS = 2
MAX_QUBITS = 12

SINGLE_GATE_KINDS = ("H", "S", "S_DAGGER", "RX", "RY")
TWO_GATE_KINDS = ("CNOT", "CZ", "SWAP", "CRX", "CRY", "CRZ")

_SQRT2_INV = 1.0 / math.sqrt(2.0)

_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_S_DAGGER = np.array([[1, 0], [0, -1j]], dtype=complex)

_CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=complex)
_CZ = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 1, 0],
     [0, 0, 0, -1]], dtype=complex)
_SWAP = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]], dtype=complex)


class ConfigurationError(ValueError):
    """A requested state/circuit size is outside the supported range."""


@dataclass
class QuantumState:
    """Pure n-qubit state as a unit-norm vector of 2**n complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class GateMatrix:
    """Unitary gate: a 2x2 (arity 1) or 4x4 (arity 2) complex matrix."""

    arity: int
    matrix: np.ndarray


def new_zero_state(n_qubits: int) -> QuantumState:
    """All-qubits-|0> state; supports 2 <= n_qubits <= 12."""
    if not MIN_QUBITS <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits={n_qubits} unsupported: must be in [{MIN_QUBITS}, {MAX_QUBITS}]")
    amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
    amplitudes[0] = 1.0
    return QuantumState(n_qubits, amplitudes)


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def _controlled(rot: np.ndarray) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = rot
    return u


def make_single_gate(kind: str, angle: float | None = None) -> GateMatrix:
    """One-qubit gate matrix for H, S, S_DAGGER, RX(angle), or RY(angle)."""
    if kind not in SINGLE_GATE_KINDS:
        raise ValueError(f"unknown single-qubit gate {kind!r}")
    parametric = kind in ("RX", "RY")
    if parametric and angle is None:
        raise ValueError(f"{kind} requires an angle")
    if not parametric and angle is not None:
        raise ValueError(f"{kind} takes no angle")
    if kind == "H":
        m = _H
    elif kind == "S":
        m = _S
    elif kind == "S_DAGGER":
        m = _S_DAGGER
    elif kind == "RX":
        m = _rx(angle)
    else:
        m = _ry(angle)
    return GateMatrix(1, m)


def make_two_gate(kind: str, angle: float | None = None) -> GateMatrix:
    """Two-qubit gate matrix for CNOT, CZ, SWAP, or CRX/CRY/CRZ(angle).

    Controlled gates act on the target when the control (first) qubit is |1>.
    """
    if kind not in TWO_GATE_KINDS:
        raise ValueError(f"unknown two-qubit gate {kind!r}")
    parametric = kind in ("CRX", "CRY", "CRZ")
    if parametric and angle is None:
        raise ValueError(f"{kind} requires an angle")
    if not parametric and angle is not None:
        raise ValueError(f"{kind} takes no angle")
    if kind == "CNOT":
        m = _CNOT
    elif kind == "CZ":
        m = _CZ
    elif kind == "SWAP":
        m = _SWAP
    elif kind == "CRX":
        m = _controlled(_rx(angle))
    elif kind == "CRY":
        m = _controlled(_ry(angle))
    else:
        m = _controlled(_rz(angle))
    return GateMatrix(2, m)


def apply_one(state: QuantumState, gate: GateMatrix, qubit: int) -> QuantumState:
    """Apply a one-qubit gate in place on the given qubit; returns the state."""
    if gate.arity != 1:
        raise ValueError("apply_one needs an arity-1 gate")
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.tensordot(gate.matrix, psi, axes=([1], [qubit]))
    state.amplitudes = np.moveaxis(psi, 0, qubit).reshape(-1)
    return state


def apply_two(state: QuantumState, gate: GateMatrix, first: int, second: int) -> QuantumState:
    """Apply a two-qubit gate in place on (first, second); first is the control."""
    if gate.arity != 2:
        raise ValueError("apply_two needs an arity-2 gate")
    n = state.n_qubits
    if first == second:
        raise ValueError("first and second qubit must differ")
    for q in (first, second):
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    u = gate.matrix.reshape(2, 2, 2, 2)
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.tensordot(u, psi, axes=([2, 3], [first, second]))
    state.amplitudes = np.moveaxis(psi, (0, 1), (first, second)).reshape(-1)
    return state


def expval_z(state: QuantumState, qubit: int) -> float:
    """Exact Pauli-Z expectation on one qubit: P(bit=0) - P(bit=1)."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    probs = np.abs(state.amplitudes.reshape((2,) * n)) ** 2
    return float(probs.take(0, axis=qubit).sum() - probs.take(1, axis=qubit).sum())
