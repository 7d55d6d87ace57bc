# tests/conftest.py

"""Datos de juguete compartidos por los tests"""

import numpy as np
import pytest

from src.harness.phantom import generate_phantom
from src.mri.masks import make_vds_mask
from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.utils.config import PhantomSpec, TrainConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_series(rng):
    """Serie compleja aleatoria (6, 5, 3)"""
    return ComplexImageSeries(rng.normal(size=(6, 5, 3, 2)))


@pytest.fixture
def random_coils(rng):
    return CoilSensitivities(rng.normal(size=(6, 5, 2, 2)))


@pytest.fixture
def random_mask(rng):
    return SamplingMask(rng.random((6, 5, 3)) < 0.5, 2.0, "variable-density")


@pytest.fixture
def random_kspace(rng):
    return MultiCoilKSpace(rng.normal(size=(6, 5, 3, 2, 2)))


@pytest.fixture
def small_spec():
    """Fantoma 16x16x4 con 2 bobinas y sin ruido"""
    return PhantomSpec(nx=16, ny=16, nt=4, n_coils=2, noise_std=0.0, seed=3)


@pytest.fixture
def small_phantom(small_spec):
    return generate_phantom(small_spec)


@pytest.fixture
def small_mask():
    return make_vds_mask(16, 16, 4, 4.0, center_lines=2, seed=5)


@pytest.fixture
def tiny_config():
    """Configuración mínima para ejecuciones de pocos segundos"""
    return TrainConfig(
        nx=16, ny=16, nt=4,
        acceleration=4.0, center_lines=2, mask_seed=5,
        ranks=(2, 2, 4, 2, 3), patch_size=2, k_similar=4, search_window=2,
        hidden=8, omega=30.0,
        base_lr=1e-3, lr_decay_every=2,
        iterations=3, metric_every=1,
        progress=False, seed=11,
    )
