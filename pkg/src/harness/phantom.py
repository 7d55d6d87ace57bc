# src/harness/phantom.py

"""
Fantoma dinámico sintético: elipses cuyos semiejes oscilan con el tiempo
(contracción tipo cine cardiaco), fase suave, mapas de bobina gaussianos y
k-espacio completo con ruido gaussiano complejo.

La geometría y las bobinas dependen solo de la descripción; la semilla solo
afecta al ruido.
"""

import logging
import math
from typing import Tuple

import numpy as np

from src.mri.operators import forward_encode
from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.utils.config import PhantomSpec

logger = logging.getLogger(__name__)

COIL_RADIUS = 1.2
COIL_WIDTH = 0.9
PHASE_SLOPE = (0.6, 0.4)


def _field_of_view(nx: int, ny: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.linspace(-1.0, 1.0, nx) if nx > 1 else np.zeros(1)
    v = np.linspace(-1.0, 1.0, ny) if ny > 1 else np.zeros(1)
    return np.meshgrid(u, v, indexing='ij')


def phantom_magnitude(spec: PhantomSpec) -> np.ndarray:
    """Suma de elipses por fotograma, recortada a valores no negativos (nx, ny, nt)"""
    u, v = _field_of_view(spec.nx, spec.ny)
    frames = np.zeros((spec.nx, spec.ny, spec.nt))
    for t in range(spec.nt):
        cycle = 2.0 * math.pi * t / spec.nt
        for e in spec.ellipses:
            scale = 1.0 + e.motion_amplitude * math.sin(cycle + e.motion_phase)
            ax, ay = e.ax * scale, e.ay * scale
            inside = ((u - e.cx) / ax) ** 2 + ((v - e.cy) / ay) ** 2 <= 1.0
            frames[:, :, t] += e.intensity * inside
    return np.maximum(frames, 0.0)


def coil_maps(nx: int, ny: int, n_coils: int) -> CoilSensitivities:
    """Perfiles gaussianos alrededor del campo de visión con fase lineal por bobina"""
    u, v = _field_of_view(nx, ny)
    maps = np.zeros((nx, ny, n_coils), dtype=np.complex128)
    for c in range(n_coils):
        angle = 2.0 * math.pi * c / n_coils
        px, py = COIL_RADIUS * math.cos(angle), COIL_RADIUS * math.sin(angle)
        profile = np.exp(-((u - px) ** 2 + (v - py) ** 2) / (2.0 * COIL_WIDTH ** 2))
        phase = angle + 0.5 * (u * math.cos(angle) + v * math.sin(angle))
        maps[:, :, c] = profile * np.exp(1j * phase)
    return CoilSensitivities.from_complex(maps)


def generate_phantom(spec: PhantomSpec) -> Tuple[ComplexImageSeries, CoilSensitivities, MultiCoilKSpace]:
    """
    Generar verdad, sensibilidades y k-espacio completamente muestreado

    Returns:
        Tuple: (serie verdad con max|x| = 1, sensibilidades, k-espacio con ruido)
    """
    magnitude = phantom_magnitude(spec)
    peak = float(magnitude.max())
    if peak > 0:
        magnitude = magnitude / peak
    u, v = _field_of_view(spec.nx, spec.ny)
    phase = math.pi / 4.0 * (PHASE_SLOPE[0] * u + PHASE_SLOPE[1] * v)
    truth = ComplexImageSeries.from_complex(magnitude * np.exp(1j * phase)[:, :, None])

    s = coil_maps(spec.nx, spec.ny, spec.n_coils)
    full = SamplingMask(np.ones((spec.nx, spec.ny, spec.nt)), 1.0, "variable-density")
    y = forward_encode(truth, s, full)
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        y = MultiCoilKSpace(y.data + rng.normal(0.0, spec.noise_std, size=y.data.shape))
    logger.info(f"Fantoma {spec.nx}x{spec.ny}x{spec.nt}, {spec.n_coils} bobinas, "
                f"{len(spec.ellipses)} elipses, ruido {spec.noise_std}")
    return truth, s, y
