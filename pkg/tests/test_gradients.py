import math

import numpy as np
import pytest

from dressedq.circuit import CircuitConfig, VARIANTS, variant_preset
from dressedq.gradients import finite_diff_jacobian, param_shift_jacobian

PRESET_NAMES = sorted(VARIANTS)


def random_instance(preset, n_qubits, q_depth, seed):
    cfg = CircuitConfig(n_qubits=n_qubits, q_depth=q_depth,
                        variant=variant_preset(preset))
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-math.pi, math.pi, n_qubits)
    weights = rng.uniform(-math.pi, math.pi, cfg.n_weights)
    return cfg, angles, weights


def test_closed_form_input_derivative():
    # d<Z_0>/d input[0] of the default embedding is -cos(theta)
    cfg = CircuitConfig(n_qubits=4, q_depth=0,
                        variant=variant_preset("hadamard-cnot"))
    for theta in (0.0, 0.3, -1.2, math.pi / 2):
        jac = param_shift_jacobian(np.array([theta, 0, 0, 0]), np.zeros(0),
                                   cfg)
        assert abs(jac.d_inputs[0, 0] + math.cos(theta)) < 1e-9
        assert np.abs(jac.d_inputs[1:, 0]).max() < 1e-12


def test_zero_jacobian_on_constant_outputs():
    cfg = CircuitConfig(n_qubits=4, q_depth=1,
                        variant=variant_preset("hadamard-cnot"))
    jac = param_shift_jacobian(np.zeros(4), np.zeros(4), cfg)
    # every output is identically 0 over the whole parameter space slice
    # probed by the shifts of the untouched qubits' parameters
    assert np.abs(jac.d_weights[0, 1]) < 1e-12


def test_shapes():
    cfg, angles, weights = random_instance("hadamard-cnot", 3, 2, 0)
    jac = param_shift_jacobian(angles, weights, cfg)
    assert jac.d_weights.shape == (3, 6)
    assert jac.d_inputs.shape == (3, 3)


def test_empty_weight_jacobian_at_depth_zero():
    cfg, angles, weights = random_instance("hadamard-cnot", 3, 0, 1)
    jac = param_shift_jacobian(angles, weights, cfg)
    assert jac.d_weights.shape == (3, 0)
    fd = finite_diff_jacobian(angles, weights, cfg)
    assert fd.d_weights.shape == (3, 0)


def test_dimension_validation():
    cfg = CircuitConfig(n_qubits=3, q_depth=1,
                        variant=variant_preset("hadamard-cnot"))
    with pytest.raises(ValueError):
        param_shift_jacobian(np.zeros(2), np.zeros(3), cfg)
    with pytest.raises(ValueError):
        param_shift_jacobian(np.zeros(3), np.zeros(2), cfg)


@pytest.mark.parametrize("preset", PRESET_NAMES)
def test_matches_finite_differences_all_presets(preset):
    # three sizes per preset: 24 instances overall
    for i, (n_qubits, q_depth) in enumerate([(2, 1), (3, 2), (4, 3)]):
        cfg, angles, weights = random_instance(
            preset, n_qubits, q_depth, seed=1000 + 10 * i + len(preset))
        ps = param_shift_jacobian(angles, weights, cfg)
        fd = finite_diff_jacobian(angles, weights, cfg)
        assert np.abs(ps.d_weights - fd.d_weights).max() < 1e-6
        assert np.abs(ps.d_inputs - fd.d_inputs).max() < 1e-6


def test_matches_with_custom_fixed_entangler_angle():
    cfg = CircuitConfig(n_qubits=3, q_depth=2,
                        variant=variant_preset("hadamard-crx",
                                               entangler_angle=1.1))
    rng = np.random.default_rng(77)
    angles = rng.uniform(-math.pi, math.pi, 3)
    weights = rng.uniform(-math.pi, math.pi, cfg.n_weights)
    ps = param_shift_jacobian(angles, weights, cfg)
    fd = finite_diff_jacobian(angles, weights, cfg)
    assert np.abs(ps.d_weights - fd.d_weights).max() < 1e-6
    assert np.abs(ps.d_inputs - fd.d_inputs).max() < 1e-6


def test_second_order_convergence_of_finite_differences():
    cfg, angles, weights = random_instance("hadamard-cnot", 3, 2, 5)
    ps = param_shift_jacobian(angles, weights, cfg)
    err_h = np.abs(finite_diff_jacobian(angles, weights, cfg, h=1e-2).d_weights
                   - ps.d_weights).max()
    err_half = np.abs(
        finite_diff_jacobian(angles, weights, cfg, h=5e-3).d_weights
        - ps.d_weights).max()
    # central differences: error ~ h^2, so halving h shrinks it ~4x
    assert err_half < err_h / 3.0


def test_deterministic():
    cfg, angles, weights = random_instance("rx-crx", 4, 2, 6)
    a = param_shift_jacobian(angles, weights, cfg)
    b = param_shift_jacobian(angles, weights, cfg)
    assert np.array_equal(a.d_weights, b.d_weights)
    assert np.array_equal(a.d_inputs, b.d_inputs)


def test_entries_bounded_by_one():
    for preset in PRESET_NAMES:
        cfg, angles, weights = random_instance(preset, 3, 2,
                                               seed=len(preset))
        jac = param_shift_jacobian(angles, weights, cfg)
        assert np.all(np.isfinite(jac.d_weights))
        assert np.all(np.isfinite(jac.d_inputs))
        assert np.abs(jac.d_weights).max() <= 1.0 + 1e-12
        assert np.abs(jac.d_inputs).max() <= 1.0 + 1e-12
