# tests/test_tenf.py

import json
import math

import numpy as np
import pytest

from src.autodiff import check_gradients, constant, ops
from src.mri.types import ComplexImageSeries
from src.ndtensor import tucker_reconstruct
from src.patching import NonlocalTensorBatch, assemble_average, block_match, crop_padding, pad_replicate
from src.tenf import (
    COORDINATE_CONVENTION,
    coordinates,
    evaluate_factors,
    evaluate_global,
    evaluate_group,
    evaluate_groups,
    global_ranks,
    image_node,
    init_global_model,
    init_model,
    load_checkpoint,
    reconstruct_image,
    save_checkpoint,
)
from src.tenf.checkpoint import MANIFEST
from src.tenf.model import GLOBAL_REFERENCE_EXTENT
from src.utils.config import DEFAULT_RANKS
from src.utils.errors import FormatError, InvalidArgumentError


def _patch_model(rng, nx=8, ny=8, nt=3, k=3, ranks=(2, 2, 2, 2, 2), **kwargs):
    x = ComplexImageSeries(rng.normal(size=(nx, ny, nt, 2)))
    padded, pad = pad_replicate(x, 2)
    index_map = block_match(padded, 2, k, 2, pad)
    return init_model(index_map, nt, ranks, seed=4, hidden=6, **kwargs)


def test_coordinates_span_unit_interval():
    np.testing.assert_allclose(coordinates(5).ravel(), [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert coordinates(5).shape == (5, 1)
    np.testing.assert_array_equal(coordinates(1), np.zeros((1, 1)))


def test_initialization_bounds(rng):
    model = _patch_model(rng)
    omega, hidden = model.omega, model.hidden
    later = math.sqrt(6.0) / hidden / omega
    for net in model.networks:
        w1, b1, w2, b2 = (model.params[name] for name in net.names())
        assert np.abs(w1).max() <= 1.0 and np.abs(b1).max() <= 1.0
        assert np.abs(w2).max() <= later and np.abs(b2).max() <= later


def test_strict_initialization_drops_omega_factor(rng):
    model = _patch_model(rng, strict_init=True)
    bound = math.sqrt(6.0) / model.hidden
    w2 = model.params["net0.w2"]
    assert np.abs(w2).max() <= bound
    assert np.abs(w2).max() > bound / model.omega


def test_initialization_is_seeded(rng):
    x = ComplexImageSeries(rng.normal(size=(8, 8, 3, 2)))
    index_map = block_match(x, 2, 3, 2)
    a = init_model(index_map, 3, (2, 2, 2, 2, 2), seed=1)
    b = init_model(index_map, 3, (2, 2, 2, 2, 2), seed=1)
    c = init_model(index_map, 3, (2, 2, 2, 2, 2), seed=2)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    assert not np.array_equal(a.params["core"], c.params["core"])


def test_rank_above_extent_raises(rng):
    with pytest.raises(InvalidArgumentError):
        _patch_model(rng, ranks=(3, 2, 2, 2, 2))


def test_parameter_counts(rng):
    model = _patch_model(rng)
    counts = model.parameter_counts()
    assert counts["cores"] == 16 * 2 ** 5
    hidden = model.hidden
    assert counts["networks"] == sum(2 * hidden + r * hidden + r for r in model.ranks)
    assert counts["total"] == counts["cores"] + counts["networks"]


def test_factor_shapes(rng):
    model = _patch_model(rng)
    factors = evaluate_factors(model)
    assert [f.shape for f in factors] == [(2, 2), (2, 2), (3, 2), (2, 2), (3, 2)]


def test_groups_match_tucker_reconstruction(rng):
    model = _patch_model(rng)
    factors = evaluate_factors(model)
    arrays = [net.forward_array(model.params, coords)
              for net, coords in zip(model.networks, model.grid.positions)]
    for f, a in zip(factors, arrays):
        np.testing.assert_allclose(f.value, a, atol=1e-12)
    groups = evaluate_groups(model, factors).value
    for l in (0, 7, 15):
        expected = tucker_reconstruct(model.params["core"][l], arrays)
        np.testing.assert_allclose(groups[l], expected, atol=1e-12)
        np.testing.assert_allclose(evaluate_group(model, l, factors).value, expected, atol=1e-12)


def test_core_change_touches_only_its_group(rng):
    model = _patch_model(rng)
    before = evaluate_groups(model, evaluate_factors(model)).value
    model.params["core"] = model.params["core"].copy()
    model.params["core"][5] += rng.normal(size=model.ranks)
    after = evaluate_groups(model, evaluate_factors(model)).value
    for l in range(model.index_map.l_count):
        if l == 5:
            assert np.abs(after[l] - before[l]).max() > 1e-6
        else:
            np.testing.assert_allclose(after[l], before[l], atol=1e-12)


def test_network_change_touches_only_its_factor_and_every_group(rng):
    model = _patch_model(rng)
    factors_before = [f.value for f in evaluate_factors(model)]
    groups_before = evaluate_groups(model, evaluate_factors(model)).value
    model.params["net3.b2"] = model.params["net3.b2"] + 0.5
    factors_after = [f.value for f in evaluate_factors(model)]
    groups_after = evaluate_groups(model, evaluate_factors(model)).value
    for i, (a, b) in enumerate(zip(factors_before, factors_after)):
        if i == 3:
            assert np.abs(a - b).max() > 1e-3
        else:
            np.testing.assert_array_equal(a, b)
    per_group = np.abs(groups_after - groups_before).reshape(model.index_map.l_count, -1).max(axis=1)
    assert np.all(per_group > 1e-8)


def test_evaluate_group_superposition(rng):
    model = _patch_model(rng)
    factors = evaluate_factors(model)
    a, b = rng.normal(size=model.params["core"].shape), rng.normal(size=model.params["core"].shape)
    alpha, beta = 1.7, -0.4

    def group_with(core):
        leaves = model.constants()
        leaves["core"] = constant(core, "core")
        return evaluate_group(model, 9, factors, leaves).value

    expected = alpha * group_with(a) + beta * group_with(b)
    np.testing.assert_allclose(group_with(alpha * a + beta * b), expected, atol=1e-12)


def test_global_core_exceeds_patch_core_storage_per_pixel():
    nx = ny = GLOBAL_REFERENCE_EXTENT
    patch_size = 2
    groups = (nx // patch_size) * (ny // patch_size)
    patch_per_pixel = groups * math.prod(DEFAULT_RANKS) / (nx * ny)
    global_cores = math.prod(global_ranks(nx, ny, 20))
    assert global_cores == 160 * 160 * 15 * 2
    assert global_cores > patch_per_pixel


def test_evaluate_group_out_of_range(rng):
    model = _patch_model(rng)
    with pytest.raises(InvalidArgumentError):
        evaluate_group(model, 16, evaluate_factors(model))


def test_reconstruct_image_averages_and_crops(rng):
    model = _patch_model(rng, nx=7, ny=6)
    image = reconstruct_image(model, model.index_map)
    assert image.shape == (7, 6, 3)
    groups = evaluate_groups(model, evaluate_factors(model)).value
    averaged = assemble_average(NonlocalTensorBatch(groups, model.index_map))
    expected = crop_padding(averaged.data, model.index_map.pad)
    np.testing.assert_allclose(image.data, expected, atol=1e-12)


def test_reconstruct_image_rejects_foreign_map(rng):
    model = _patch_model(rng)
    other = block_match(ComplexImageSeries(rng.normal(size=(8, 8, 3, 2))), 2, 3, 2)
    with pytest.raises(InvalidArgumentError):
        reconstruct_image(model, other)


def test_global_ranks_scale_from_reference():
    assert global_ranks(256, 256, 20) == (160, 160, 15, 2)
    assert global_ranks(64, 64, 8) == (40, 40, 8, 2)


def test_global_model_evaluation():
    model = init_global_model((8, 6, 3), None, seed=0, hidden=5)
    assert model.mode == "global"
    assert model.ranks == (5, 4, 3, 2)
    image = evaluate_global(model)
    assert image.shape == (8, 6, 3)
    np.testing.assert_allclose(image.data, image_node(model).value, atol=1e-12)
    with pytest.raises(InvalidArgumentError):
        evaluate_group(model, 0, evaluate_factors(model))


def test_global_model_gradients():
    model = init_global_model((4, 4, 2), (2, 2, 2, 2), seed=0, hidden=4, omega=5.0,
                              core_std=1.0, strict_init=True)

    def loss(leaves):
        return ops.frobenius_sq(image_node(model, leaves))

    assert check_gradients(loss, model.params, samples_per_param=5, floor=1e-3) < 1e-4


def test_checkpoint_round_trip(tmp_path, rng):
    model = _patch_model(rng, nx=7, ny=8)
    save_checkpoint(model, tmp_path / "ckpt")
    restored = load_checkpoint(tmp_path / "ckpt")
    assert restored.ranks == model.ranks
    assert restored.omega == model.omega
    np.testing.assert_array_equal(reconstruct_image(restored).data, reconstruct_image(model).data)


def test_checkpoint_rejects_other_convention(tmp_path):
    model = init_global_model((4, 4, 2), (2, 2, 2, 2), seed=0, hidden=3)
    save_checkpoint(model, tmp_path)
    manifest = json.loads((tmp_path / MANIFEST).read_text())
    assert manifest["coordinate_convention"] == COORDINATE_CONVENTION
    manifest["coordinate_convention"] = "arange/v0"
    (tmp_path / MANIFEST).write_text(json.dumps(manifest))
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path)
