# src/mri/metrics.py

"""
Métricas de calidad (PSNR, SSIM, RMSE) sobre imágenes de magnitud
normalizadas para que max(|ref|) = 1.
"""

import logging
import math
from typing import Dict, List, Tuple

import numpy as np
from skimage.metrics import structural_similarity

from src.utils.errors import InvalidArgumentError

from .types import ComplexImageSeries

logger = logging.getLogger(__name__)

PSNR_CAP_DB = 200.0
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11  # ventana gaussiana con sigma 1.5


def normalized_magnitudes(x: ComplexImageSeries, ref: ComplexImageSeries) -> Tuple[np.ndarray, np.ndarray]:
    """Magnitudes de x y ref divididas por max(|ref|)"""
    if x.shape != ref.shape:
        raise InvalidArgumentError(f"Formas distintas: {x.shape} frente a {ref.shape}")
    ref_mag = np.abs(ref.to_complex())
    peak = float(ref_mag.max())
    if peak <= 0:
        raise InvalidArgumentError("La referencia es idénticamente cero")
    return np.abs(x.to_complex()) / peak, ref_mag / peak


def rmse(x: ComplexImageSeries, ref: ComplexImageSeries) -> float:
    a, b = normalized_magnitudes(x, ref)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(x: ComplexImageSeries, ref: ComplexImageSeries) -> float:
    """``20 log10(1 / rmse)``, limitado a 200 dB"""
    error = rmse(x, ref)
    if error == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 20.0 * math.log10(1.0 / error))


def ssim_window(shape: Tuple[int, ...]) -> int:
    """Ventana de SSIM: 11, o el mayor impar que cabe en fotogramas más pequeños"""
    side = min(shape)
    if side >= SSIM_WINDOW:
        return SSIM_WINDOW
    return side if side % 2 == 1 else side - 1


def _frame_ssim(a: np.ndarray, b: np.ndarray) -> float:
    win_size = ssim_window(a.shape)
    if win_size < SSIM_WINDOW:
        logger.debug(f"Fotograma {a.shape}: ventana SSIM reducida a {win_size}x{win_size}")
    return float(structural_similarity(
        b, a,
        win_size=win_size,
        data_range=1.0,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
    ))


def ssim(x: ComplexImageSeries, ref: ComplexImageSeries) -> float:
    """SSIM gaussiano (ventana 11x11, sigma 1.5) promediado sobre fotogramas"""
    a, b = normalized_magnitudes(x, ref)
    return float(np.mean([_frame_ssim(a[:, :, t], b[:, :, t]) for t in range(a.shape[2])]))


def evaluate_all(x: ComplexImageSeries, ref: ComplexImageSeries) -> Dict[str, float]:
    """Las tres métricas de una vez"""
    return {'psnr': psnr(x, ref), 'ssim': ssim(x, ref), 'rmse': rmse(x, ref)}


def frame_metrics(x: ComplexImageSeries, ref: ComplexImageSeries) -> List[Dict[str, float]]:
    """Métricas por fotograma con la normalización global de la referencia"""
    a, b = normalized_magnitudes(x, ref)
    rows = []
    for t in range(a.shape[2]):
        error = float(np.sqrt(np.mean((a[:, :, t] - b[:, :, t]) ** 2)))
        value = PSNR_CAP_DB if error == 0 else min(PSNR_CAP_DB, 20.0 * math.log10(1.0 / error))
        rows.append({'frame': t, 'psnr': value, 'ssim': _frame_ssim(a[:, :, t], b[:, :, t]),
                     'rmse': error})
    return rows
