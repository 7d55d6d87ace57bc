# tests/test_mri.py

import numpy as np
import pytest

from src.mri import (
    ComplexImageSeries,
    CoilSensitivities,
    MultiCoilKSpace,
    SamplingMask,
    adjoint_encode,
    casorati,
    evaluate_all,
    fft2c,
    forward_encode,
    ifft2c,
    make_mask,
    make_pseudo_radial_mask,
    make_vds_mask,
    psnr,
    rmse,
    ssim,
)
from src.mri.metrics import PSNR_CAP_DB, frame_metrics, ssim_window
from src.mri.operators import inner_product, sensitivity_normalize
from src.utils.config import MASK_KINDS
from src.utils.errors import InvalidArgumentError


def test_fft_round_trip_and_norm(rng):
    z = rng.normal(size=(8, 10)) + 1j * rng.normal(size=(8, 10))
    k = fft2c(z)
    np.testing.assert_allclose(ifft2c(k), z, atol=1e-12)
    assert np.linalg.norm(k) == pytest.approx(np.linalg.norm(z), rel=1e-12)


def test_fft_is_centered():
    k = fft2c(np.ones((8, 8)))
    assert abs(k[4, 4]) == pytest.approx(8.0)
    assert np.abs(k).sum() == pytest.approx(8.0)


def test_encoding_adjointness_over_seeded_draws():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = ComplexImageSeries(rng.normal(size=(6, 5, 3, 2)))
        s = CoilSensitivities(rng.normal(size=(6, 5, 2, 2)))
        m = SamplingMask(rng.random((6, 5, 3)) < 0.4, 2.5, "variable-density")
        y = MultiCoilKSpace(rng.normal(size=(6, 5, 3, 2, 2)))
        lhs = inner_product(forward_encode(x, s, m).data, y.data)
        rhs = inner_product(x.data, adjoint_encode(y, s, m).data)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_normalized_single_coil_round_trip(rng):
    x = ComplexImageSeries(rng.normal(size=(6, 5, 2, 2)))
    s = sensitivity_normalize(CoilSensitivities(rng.normal(size=(6, 5, 1, 2)) + 0.1))
    np.testing.assert_allclose(np.abs(s.to_complex()), 1.0, atol=1e-12)
    full = SamplingMask(np.ones((6, 5, 2)), 1.0, "variable-density")
    np.testing.assert_allclose(adjoint_encode(forward_encode(x, s, full), s, full).data, x.data, atol=1e-10)


def test_forward_is_zero_outside_mask(random_series, random_coils, random_mask):
    y = forward_encode(random_series, random_coils, random_mask).to_complex()
    outside = random_mask.pattern == 0
    assert np.all(y[outside] == 0)


def test_forward_encode_masking_is_idempotent(random_series, random_coils, random_mask):
    y = forward_encode(random_series, random_coils, random_mask)
    remasked = y.to_complex() * random_mask.pattern[..., None]
    np.testing.assert_array_equal(remasked, y.to_complex())


def test_encode_shape_mismatch_raises(random_series, random_coils):
    wrong = SamplingMask(np.ones((6, 5, 2)), 1.0, "variable-density")
    with pytest.raises(InvalidArgumentError):
        forward_encode(random_series, random_coils, wrong)


def test_casorati_columns_are_frames(random_series):
    c = casorati(random_series)
    z = random_series.to_complex()
    assert c.shape == (30, 3)
    np.testing.assert_array_equal(c[:, 1], z[:, :, 1].reshape(-1, order="F"))


def test_static_series_casorati_is_rank_one(rng):
    frame = rng.normal(size=(6, 5, 2))
    static = ComplexImageSeries(np.repeat(frame[:, :, None, :], 4, axis=2))
    sigma = np.linalg.svd(casorati(static), compute_uv=False)
    assert sigma[1] / sigma[0] < 1e-12


def test_vds_mask_lines_and_center():
    mask = make_vds_mask(64, 64, 8, 8.0, center_lines=4, seed=1)
    assert mask.achieved_acceleration == pytest.approx(8.0)
    pattern = mask.pattern
    # lectura completa: cada línea de fase está entera o vacía
    assert np.all((pattern.sum(axis=0) == 0) | (pattern.sum(axis=0) == 64))
    assert np.all(pattern[:, 30:34, :] == 1)


def test_vds_mask_is_seeded():
    a = make_vds_mask(32, 32, 4, 4.0, seed=3)
    b = make_vds_mask(32, 32, 4, 4.0, seed=3)
    c = make_vds_mask(32, 32, 4, 4.0, seed=4)
    np.testing.assert_array_equal(a.pattern, b.pattern)
    assert not np.array_equal(a.pattern, c.pattern)


def test_vds_mask_too_few_lines_for_center():
    with pytest.raises(InvalidArgumentError):
        make_vds_mask(64, 64, 8, 21.0, center_lines=4)


@pytest.mark.parametrize("kind", MASK_KINDS)
@pytest.mark.parametrize("r", [8.0, 12.0, 16.0, 21.0])
def test_achieved_acceleration_close_to_nominal(kind, r):
    mask = make_mask(kind, 64, 64, 4, r, seed=2, center_lines=2)
    assert abs(mask.achieved_acceleration - r) / r < 0.15
    assert np.all(mask.pattern[32, 32, :] == 1)


def test_radial_frames_rotate():
    mask = make_pseudo_radial_mask(32, 32, 3, 6.0, seed=0)
    assert not np.array_equal(mask.pattern[:, :, 0], mask.pattern[:, :, 1])


def test_full_sampling_mask():
    mask = make_mask("pseudo-spiral", 16, 16, 2, 1.0)
    assert np.all(mask.pattern == 1)


def test_acceleration_below_one_raises():
    with pytest.raises(InvalidArgumentError):
        make_mask("pseudo-radial", 16, 16, 2, 0.5)


def test_unknown_mask_kind_raises():
    with pytest.raises(InvalidArgumentError):
        make_mask("cartesian", 16, 16, 2, 4.0)


def test_metrics_of_identical_series(small_phantom):
    truth, _, _ = small_phantom
    assert rmse(truth, truth) == 0.0
    assert psnr(truth, truth) == PSNR_CAP_DB
    assert ssim(truth, truth) == pytest.approx(1.0)


def test_psnr_of_scaled_constant():
    ref = ComplexImageSeries.from_complex(np.ones((16, 16, 2)))
    x = ComplexImageSeries.from_complex(0.9 * np.ones((16, 16, 2)))
    assert rmse(x, ref) == pytest.approx(0.1)
    assert psnr(x, ref) == pytest.approx(20.0)


def test_metrics_are_normalized_by_reference_peak(small_phantom):
    truth, _, _ = small_phantom
    noisy = ComplexImageSeries(truth.data + 0.01)
    scaled_truth = ComplexImageSeries(truth.data * 3.0)
    scaled_noisy = ComplexImageSeries(noisy.data * 3.0)
    assert psnr(noisy, truth) == pytest.approx(psnr(scaled_noisy, scaled_truth))


def test_frame_metrics_rows(small_phantom):
    truth, _, _ = small_phantom
    rows = frame_metrics(truth, truth)
    assert [row['frame'] for row in rows] == [0, 1, 2, 3]
    assert all(row['rmse'] == 0.0 for row in rows)


def test_ssim_on_small_frames(rng):
    x = ComplexImageSeries.from_complex(rng.random((8, 8, 2)) + 0.1)
    assert ssim(x, x) == pytest.approx(1.0)
    assert evaluate_all(x, x)["psnr"] == PSNR_CAP_DB
    assert ssim_window((8, 8)) == 7
    assert ssim_window((5, 12)) == 5
    assert ssim_window((64, 64)) == 11


def test_ssim_drops_with_noise(small_phantom, rng):
    truth, _, _ = small_phantom
    noisy = ComplexImageSeries(truth.data + 0.05 * rng.normal(size=truth.data.shape))
    assert ssim(noisy, truth) < 1.0
    assert ssim(truth, truth) == pytest.approx(1.0)
