# tests/test_harness.py

import json

import numpy as np
import pandas as pd
import pytest

import main
import src.harness.trainer as trainer
from src.harness import export_views, generate_phantom, run_ablation_suite, run_grid, run_reconstruction
from src.harness.trainer import build_model
from src.losses import kspace_replacement
from src.mri.masks import make_mask
from src.mri.operators import adjoint_encode, forward_encode
from src.mri.types import ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.tenf import evaluate_factors, evaluate_groups, load_checkpoint
from src.utils.config import PhantomSpec, TrainConfig, desk_scale
from src.utils.data_io import ArrayStore
from src.utils.errors import InvalidArgumentError, TrainingError


def _mask(config):
    return make_mask(config.mask_kind, config.nx, config.ny, config.nt, config.acceleration,
                     config.mask_seed, config.center_lines)


# --- fantoma -----------------------------------------------------------------

def test_phantom_is_consistent(small_spec):
    truth, s, y = generate_phantom(small_spec)
    assert np.abs(truth.to_complex()).max() == pytest.approx(1.0)
    assert s.energy().min() > 0
    full = SamplingMask(np.ones(truth.shape), 1.0, "variable-density")
    np.testing.assert_array_equal(y.data, forward_encode(truth, s, full).data)


def test_phantom_moves_over_time(small_spec):
    truth, _, _ = generate_phantom(small_spec)
    magnitude = np.abs(truth.to_complex())
    assert not np.array_equal(magnitude[:, :, 0], magnitude[:, :, 1])


def test_phantom_seed_only_changes_noise():
    a = generate_phantom(PhantomSpec(nx=16, ny=16, nt=2, n_coils=2, seed=1))
    b = generate_phantom(PhantomSpec(nx=16, ny=16, nt=2, n_coils=2, seed=2))
    np.testing.assert_array_equal(a[0].data, b[0].data)
    np.testing.assert_array_equal(a[1].maps, b[1].maps)
    assert not np.array_equal(a[2].data, b[2].data)


# --- reconstrucción ----------------------------------------------------------

def test_zero_iterations_returns_replaced_zero_filled(tiny_config, small_phantom):
    truth, s, y = small_phantom
    config = tiny_config.with_overrides(iterations=0)
    m = _mask(config)
    x_final, report = run_reconstruction(config, y, s, m, truth)
    y_masked = MultiCoilKSpace(y.data * m.pattern[..., None, None])
    expected = kspace_replacement(adjoint_encode(y_masked, s, m), y_masked, s, m)
    np.testing.assert_array_equal(x_final.data, expected.data)
    assert report.checkpoints == []
    assert set(report.zero_filled) == {'psnr', 'ssim', 'rmse'}


def test_run_report_contents(tiny_config, small_phantom):
    truth, s, y = small_phantom
    _, report = run_reconstruction(tiny_config, y, s, _mask(tiny_config), truth)
    assert [c['iteration'] for c in report.checkpoints] == [1, 2, 3]
    assert len(report.window_min_loss) == 2
    assert report.dc_after_replacement <= report.dc_before_replacement + 1e-12
    assert report.model['parameter_counts']['cores'] == 64 * 2 * 2 * 4 * 2 * 3
    assert report.timing['per_step']['count'] == 3
    assert 'timing' not in report.to_dict()


def test_run_on_frames_smaller_than_ssim_window(tiny_config):
    truth, s, y = generate_phantom(PhantomSpec(nx=8, ny=8, nt=2, n_coils=2, noise_std=0.0, seed=3))
    config = tiny_config.with_overrides(nx=8, ny=8, nt=2, acceleration=2.0, ranks=(2, 2, 2, 2, 3),
                                        iterations=1)
    _, report = run_reconstruction(config, y, s, _mask(config), truth)
    assert 0.0 < report.final_after_replacement['ssim'] <= 1.0


def test_runs_are_reproducible(tiny_config, small_phantom, tmp_path):
    truth, s, y = small_phantom
    m = _mask(tiny_config)
    x_a, report_a = run_reconstruction(tiny_config, y, s, m, truth, str(tmp_path / "a"))
    x_b, report_b = run_reconstruction(tiny_config, y, s, m, truth, str(tmp_path / "b"))
    np.testing.assert_array_equal(x_a.data, x_b.data)
    assert report_a.to_dict() == report_b.to_dict()
    for name in ("report.json", "reconstruction.tenf", "zero_filled.tenf"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_writes_outputs(tiny_config, small_phantom, tmp_path):
    truth, s, y = small_phantom
    out = tmp_path / "run"
    x_final, report = run_reconstruction(tiny_config, y, s, _mask(tiny_config), truth, str(out))
    for name in ("config.cfg", "report.json", "timing.json", "summary.txt",
                 "reconstruction.tenf", "zero_filled.tenf", "checkpoint/checkpoint.json"):
        assert (out / name).exists(), name
    saved = json.loads((out / "report.json").read_text())
    assert saved['config_hash'] == tiny_config.config_hash()
    assert TrainConfig.from_file(out / "config.cfg") == tiny_config
    np.testing.assert_array_equal(ArrayStore.load_image(out / "reconstruction.tenf").data, x_final.data)
    model = load_checkpoint(out / "checkpoint")
    assert model.ranks == tuple(report.model['ranks'])


def test_global_variant_runs(tiny_config, small_phantom):
    truth, s, y = small_phantom
    config = tiny_config.with_overrides(model_mode="global", iterations=2)
    x_final, report = run_reconstruction(config, y, s, _mask(config), truth)
    assert x_final.shape == (16, 16, 4)
    assert report.model['mode'] == "global"
    assert report.model['ranks'] == [10, 10, 4, 2]


def test_config_must_match_data(tiny_config, small_phantom):
    truth, s, y = small_phantom
    config = tiny_config.with_overrides(nx=32)
    with pytest.raises(InvalidArgumentError):
        run_reconstruction(config, y, s, _mask(tiny_config), truth)


def test_k_is_clipped_to_available_candidates(tiny_config, small_phantom):
    _, s, y = small_phantom
    m = _mask(tiny_config)
    x_init = adjoint_encode(y, s, m)
    model = build_model(tiny_config.with_overrides(k_similar=50, search_window=1), x_init)
    assert model.index_map.k == 4
    assert model.ranks[4] == 3


def test_group_batching_updates_selected_cores_only(tiny_config, small_phantom, tmp_path):
    truth, s, y = small_phantom
    config = tiny_config.with_overrides(group_batch_size=1, iterations=1)
    m = _mask(config)
    initial = build_model(config, adjoint_encode(y, s, m))
    run_reconstruction(config, y, s, m, None, str(tmp_path))
    trained = load_checkpoint(tmp_path / "checkpoint")
    changed = np.any(trained.params["core"] != initial.params["core"],
                     axis=tuple(range(1, initial.params["core"].ndim)))
    assert int(changed.sum()) == 1


def test_non_finite_gradient_leaves_snapshot(tiny_config, small_phantom, tmp_path, monkeypatch):
    real_backward = trainer.backward

    def nan_backward(loss):
        grads = real_backward(loss)
        grads["net0.w1"] = np.full_like(grads["net0.w1"], np.nan)
        return grads

    monkeypatch.setattr(trainer, "backward", nan_backward)
    truth, s, y = small_phantom
    with pytest.raises(TrainingError) as info:
        run_reconstruction(tiny_config, y, s, _mask(tiny_config), truth, str(tmp_path))
    assert info.value.parameter == "net0.w1"
    assert (tmp_path / "failure_snapshot" / "checkpoint.json").exists()


# --- ablación y rejilla ------------------------------------------------------

def test_ablation_shares_mask_and_initial_image(tiny_config, small_phantom, tmp_path):
    truth, s, y = small_phantom
    config = tiny_config.with_overrides(iterations=1)
    reports, table = run_ablation_suite(config, y, s, truth, variants=("full", "dc-only"),
                                        modes=("patch", "global"), output_dir=str(tmp_path))
    assert sorted(reports) == ["R4_global_dc-only", "R4_global_full", "R4_patch_dc-only", "R4_patch_full"]
    assert len(table) == 4
    assert table['mask_hash'].nunique() == 1
    assert table['x_init_hash'].nunique() == 1
    dc_only = reports["R4_patch_dc-only"].model
    assert (dc_only['lambda_s'], dc_only['lambda_l']) == (0.0, 0.0)
    assert (tmp_path / "ablation.csv").exists()


def test_grid_is_sorted_by_psnr(tiny_config, small_phantom):
    truth, s, y = small_phantom
    configs = [("corta", tiny_config.with_overrides(iterations=1)),
               ("larga", tiny_config.with_overrides(iterations=2, seed=3))]
    table = run_grid(configs, y, s, truth)
    assert set(table['name']) == {"corta", "larga"}
    assert list(table['psnr']) == sorted(table['psnr'], reverse=True)


# --- exportación -------------------------------------------------------------

def test_export_views(small_phantom, tmp_path):
    truth, _, _ = small_phantom
    written = export_views(truth, tmp_path, reference=truth)
    assert len(written) == 4 + 2 + 1 + 4 + 1
    error = ArrayStore.read_pgm(tmp_path / "recon_error_000.pgm")
    assert error.max() == 0
    frames = [ArrayStore.read_pgm(tmp_path / f"recon_frame_{t:03d}.pgm") for t in range(4)]
    assert max(int(f.max()) for f in frames) == 65535
    table = pd.read_csv(tmp_path / "recon_metrics.csv")
    assert len(table) == 5


def test_static_series_has_constant_profiles(tmp_path, rng):
    frame = rng.random((16, 16))
    static = ComplexImageSeries.from_complex(np.repeat(frame[:, :, None], 3, axis=2))
    export_views(static, tmp_path, prefix="static")
    y_t = ArrayStore.read_pgm(tmp_path / "static_y_t.pgm")
    assert np.all(y_t == y_t[:, :1])
    spectrum = pd.read_csv(tmp_path / "static_casorati_spectrum.csv")
    assert list(spectrum.columns) == ['index', 'sigma', 'relative']
    assert spectrum['relative'].iloc[0] == 1.0
    assert spectrum['relative'].iloc[1:].max() < 1e-12


# --- CLI ---------------------------------------------------------------------

def test_cli_phantom_and_invalid_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    spec = tmp_path / "fantoma.cfg"
    spec.write_text("nx = 16\nny = 16\nnt = 2\nn_coils = 2\n")
    assert main.main(["phantom", "--spec", str(spec), "--out", "datos"]) == 0
    assert (tmp_path / "datos" / "kspace_full.tenf").exists()

    bad = tmp_path / "malo.cfg"
    bad.write_text("iteraciones = 3\n")
    assert main.main(["recon", "--config", str(bad), "--data", "datos"]) == 2
    assert main.main(["recon", "--config", str(tmp_path / "nada.cfg"), "--data", "datos"]) == 4


def test_cli_desk_flag_scales_the_config(tmp_path):
    parser = main.build_parser()
    cfg = tmp_path / "a.cfg"
    cfg.write_text("nx = 16\nny = 16\nnt = 2\n")
    args = parser.parse_args(["recon", "--config", str(cfg), "--data", "d", "--desk", "--quiet"])
    config = main._load_config(args)
    assert (config.iterations, config.lr_decay_every, config.progress) == (3000, 1500, False)
    plain = main._load_config(parser.parse_args(["recon", "--config", str(cfg), "--data", "d"]))
    assert (plain.iterations, plain.lr_decay_every) == (12000, 500)


def test_cli_mask_writes_graymap(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "a.cfg"
    cfg.write_text("nx = 16\nny = 16\nnt = 2\nacceleration = 4\ncenter_lines = 2\n")
    assert main.main(["mask", "--config", str(cfg), "--out", str(tmp_path / "m.tenf")]) == 0
    mask = ArrayStore.load_mask(tmp_path / "m.tenf")
    levels = ArrayStore.read_pgm(tmp_path / "m.pgm")
    np.testing.assert_array_equal(levels[:, :16], mask.pattern[:, :, 0] * 65535)
    np.testing.assert_array_equal(levels[:, 16:], mask.pattern[:, :, 1] * 65535)


# --- criterios de extremo a extremo (lentos) ----------------------------------

def _desk_run(output_dir=None, **changes):
    truth, s, y = generate_phantom(PhantomSpec())
    base = TrainConfig(acceleration=8.0, mask_kind="variable-density", mask_seed=7, seed=7,
                       progress=False)
    config = desk_scale(base).with_overrides(**changes)
    return run_reconstruction(config, y, s, _mask(config), truth, output_dir)


@pytest.mark.slow
def test_desk_phantom_beats_zero_filled():
    _, report = _desk_run()
    assert report.final_after_replacement['psnr'] >= report.zero_filled['psnr'] + 6.0
    assert report.dc_after_replacement <= report.dc_before_replacement
    windows = report.window_min_loss
    assert all(b <= a for a, b in zip(windows, windows[1:]))


@pytest.mark.slow
def test_full_loss_not_worse_than_dc_only():
    _, full = _desk_run(loss_variant="full")
    _, dc_only = _desk_run(loss_variant="dc-only")
    assert full.final_after_replacement['psnr'] >= dc_only.final_after_replacement['psnr'] - 0.1


@pytest.mark.slow
def test_desk_runs_are_byte_identical(tmp_path):
    _desk_run(str(tmp_path / "a"))
    _desk_run(str(tmp_path / "b"))
    for name in ("report.json", "reconstruction.tenf", "zero_filled.tenf", "config.cfg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.slow
def test_group_evaluation_benchmark(benchmark, tiny_config, small_phantom):
    _, s, y = small_phantom
    model = build_model(tiny_config, adjoint_encode(y, s, _mask(tiny_config)))
    factors = evaluate_factors(model)
    groups = benchmark(lambda: evaluate_groups(model, factors).value)
    assert groups.shape[0] == model.index_map.l_count
