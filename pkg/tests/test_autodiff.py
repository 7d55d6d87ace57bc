# tests/test_autodiff.py

import numpy as np
import pytest

from src.autodiff import (
    AdamOptimizer,
    AdamState,
    LrSchedule,
    adam_step,
    backward,
    check_gradients,
    leaf,
    lr_at,
    ops,
)
from src.mri.operators import ifft2c_array
from src.utils.errors import GraphError, InvalidArgumentError, TrainingError


def _channels(z):
    return np.stack([z.real, z.imag], axis=-1)


def test_shared_node_accumulates_both_paths():
    x = leaf(np.array([1.5, -2.0]), "x")
    grads = backward(ops.reduce_sum(x * x))
    np.testing.assert_allclose(grads["x"], [3.0, -4.0])


def test_backward_requires_scalar():
    x = leaf(np.ones(3), "x")
    with pytest.raises(InvalidArgumentError):
        backward(ops.scale(x, 2.0))


def test_cycle_is_reported():
    a = leaf(1.0, "a")
    b = ops.add(a, a)
    a.inputs = (b,)
    with pytest.raises(GraphError):
        backward(b)


def test_unused_parameter_gets_zero_gradient():
    x = leaf(np.ones(2), "x")
    unused = leaf(np.ones(3), "unused")
    grads = backward(ops.frobenius_sq(x) + ops.scale(ops.reduce_sum(unused), 0.0))
    np.testing.assert_array_equal(grads["unused"], np.zeros(3))


def test_sine_network_gradients():
    rng = np.random.default_rng(0)
    coords = np.linspace(-1, 1, 7).reshape(7, 1)
    params = {
        "w1": rng.uniform(-1, 1, size=(5, 1)),
        "b1": rng.uniform(-1, 1, size=(5,)),
        "w2": rng.uniform(-0.5, 0.5, size=(3, 5)),
        "b2": rng.uniform(-0.5, 0.5, size=(3,)),
    }

    def loss(leaves):
        hidden = ops.sine(ops.linear(coords, leaves["w1"], leaves["b1"]), 3.0)
        return ops.frobenius_sq(ops.linear(hidden, leaves["w2"], leaves["b2"]))

    assert check_gradients(loss, params, samples_per_param=None, floor=1e-6) < 1e-4


def test_mode_product_gradients(rng):
    params = {"t": rng.normal(size=(2, 3, 4)), "a": rng.normal(size=(5, 3))}

    def loss(leaves):
        return ops.frobenius_sq(ops.mode_product(leaves["t"], leaves["a"], 1))

    assert check_gradients(loss, params, samples_per_param=None, floor=1e-6) < 1e-4


def test_gather_then_scatter_gradient_is_adjoint(rng):
    x = rng.normal(size=(5, 3))
    index = np.array([4, 0, 4, 2, 1, 4])
    weights = rng.normal(size=(5, 3))
    node = leaf(x, "x")
    gathered = ops.gather_rows(node, index)
    scattered = ops.scatter_add_rows(gathered, index, 5)
    grads = backward(ops.reduce_sum(ops.mul(scattered, weights)))
    counts = np.bincount(index, minlength=5)[:, None]
    np.testing.assert_allclose(grads["x"], counts * weights, atol=1e-12)


def test_gather_scatter_inner_product_identity(rng):
    index = rng.integers(0, 7, size=20)
    x = rng.normal(size=(7, 4))
    g = rng.normal(size=(20, 4))
    lhs = np.vdot(x[index], g)
    rhs = np.vdot(x, ops.scatter_rows_array(g, index, 7))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_gather_out_of_range_raises(rng):
    with pytest.raises(InvalidArgumentError):
        ops.gather_rows(leaf(rng.normal(size=(3, 2)), "x"), np.array([0, 3]))


def test_empty_selection_has_zero_gradient(rng):
    x = leaf(rng.normal(size=(7, 4)), "x")
    grads = backward(ops.reduce_sum(ops.gather_rows(x, np.array([], dtype=np.int64))))
    np.testing.assert_array_equal(grads["x"], np.zeros((7, 4)))


def test_permutation_gather_then_scatter_inverts(rng):
    perm = rng.permutation(6)
    x = rng.normal(size=(6, 3))
    weights = rng.normal(size=(6, 3))
    gathered = ops.gather_rows(leaf(x, "x"), perm)
    restored = ops.scatter_add_rows(gathered, perm, 6)
    np.testing.assert_array_equal(restored.value, x)
    grads = backward(ops.reduce_sum(ops.mul(gathered, weights)))
    np.testing.assert_allclose(grads["x"], weights[np.argsort(perm)], atol=1e-12)


def test_fft_gradient_is_inverse_fft(rng):
    x = rng.normal(size=(4, 6, 2))
    weights = rng.normal(size=(4, 6, 2))
    grads = backward(ops.reduce_sum(ops.mul(ops.fft2c(leaf(x, "x")), weights)))
    expected = _channels(ifft2c_array(weights[..., 0] + 1j * weights[..., 1]))
    np.testing.assert_allclose(grads["x"], expected, atol=1e-12)


def test_coil_multiply_gradients(rng):
    s = rng.normal(size=(3, 4, 2)) + 1j * rng.normal(size=(3, 4, 2))
    params = {"x": rng.normal(size=(3, 4, 2, 2))}

    def loss(leaves):
        return ops.frobenius_sq(ops.fft2c(ops.coil_multiply(leaves["x"], s)))

    assert check_gradients(loss, params, samples_per_param=None, floor=1e-6) < 1e-4


def test_nuclear_norm_value_and_subgradient(rng):
    a = rng.normal(size=(6, 4))
    node = leaf(a, "a")
    out = ops.nuclear_norm(node)
    assert float(out.value) == pytest.approx(np.linalg.norm(a, "nuc"), rel=1e-12)
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    np.testing.assert_allclose(backward(out)["a"], u @ vh, atol=1e-12)


def test_complex_nuclear_norm(rng):
    z = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    out = ops.nuclear_norm(leaf(_channels(z), "z"), complex_channels=True)
    assert float(out.value) == pytest.approx(np.linalg.norm(z, "nuc"), rel=1e-12)


def test_nuclear_norm_gradcheck_complex(rng):
    params = {"z": rng.normal(size=(7, 3, 2))}

    def loss(leaves):
        return ops.nuclear_norm(leaves["z"], complex_channels=True)

    assert check_gradients(loss, params, samples_per_param=None, floor=1e-6) < 1e-4


def test_total_variation_gradient_and_zero_sign():
    x = leaf(np.array([0.0, 1.0, 3.0]), "x")
    out = ops.abs_sum_of_differences(x, (0,))
    assert float(out.value) == 3.0
    np.testing.assert_array_equal(backward(out)["x"], [-1.0, 0.0, 1.0])

    flat = leaf(np.array([2.0, 2.0, 2.0]), "flat")
    np.testing.assert_array_equal(backward(ops.abs_sum_of_differences(flat, (0,)))["flat"], np.zeros(3))


def test_lr_schedule_reference_values():
    schedule = LrSchedule()
    assert lr_at(schedule, 0) == pytest.approx(1e-4, rel=1e-12)
    assert lr_at(schedule, 499) == pytest.approx(1e-4, rel=1e-12)
    assert lr_at(schedule, 500) == pytest.approx(2e-5, rel=1e-12)
    assert lr_at(schedule, 1000) == pytest.approx(4e-6, rel=1e-12)


def test_lr_schedule_rejects_negative_step():
    with pytest.raises(InvalidArgumentError):
        lr_at(LrSchedule(), -1)


def test_adam_first_step_moves_by_lr():
    params = {"p": np.array([1.0, -2.0])}
    adam_step(params, {"p": np.array([0.5, -3.0])}, AdamState(), lr=0.1)
    np.testing.assert_allclose(params["p"], [0.9, -1.9], atol=1e-6)


@pytest.mark.parametrize("g", [0.3, -2.0])
def test_adam_moves_against_constant_gradient(g):
    params = {"p": np.array([0.0])}
    state = AdamState()
    for _ in range(200):
        adam_step(params, {"p": np.array([g])}, state, lr=1e-2)
    assert np.sign(params["p"][0]) == -np.sign(g)
    assert abs(params["p"][0]) == pytest.approx(2.0, rel=1e-3)


def test_decoupled_weight_decay_only_on_named_parameters():
    params = {"net": np.array([2.0]), "core": np.array([2.0])}
    grads = {"net": np.zeros(1), "core": np.zeros(1)}
    adam_step(params, grads, AdamState(), lr=0.1, weight_decay=0.5, decay_names=["net"])
    assert params["net"][0] == pytest.approx(1.9)
    assert params["core"][0] == 2.0


def test_non_finite_gradient_raises_with_parameter_name():
    params = {"w": np.ones(2)}
    with pytest.raises(TrainingError) as info:
        adam_step(params, {"w": np.array([1.0, np.nan])}, AdamState(), lr=0.1)
    assert info.value.parameter == "w"
    np.testing.assert_array_equal(params["w"], np.ones(2))


def test_optimizer_follows_schedule():
    optimizer = AdamOptimizer(LrSchedule(1.0, 0.5, 2))
    params = {"p": np.zeros(1)}
    used = [optimizer.step(params, {"p": np.ones(1)}) for _ in range(5)]
    assert used == [1.0, 1.0, 0.5, 0.5, 0.25]
