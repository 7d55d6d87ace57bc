# src/mri/operators.py

"""
Operador de codificación A = M F S, su adjunto y la matriz de Casorati.
La FFT es centrada (frecuencia cero en el centro) y ortonormal.
"""

import logging
from typing import Tuple

import numpy as np

from src.utils.errors import InvalidArgumentError

from .types import (
    CoilSensitivities,
    ComplexImageSeries,
    MultiCoilKSpace,
    SamplingMask,
    channels_to_complex,
)

logger = logging.getLogger(__name__)


def fft2c_array(z: np.ndarray, axes: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """FFT 2-D centrada y ortonormal de un array complejo"""
    shifted = np.fft.ifftshift(z, axes=axes)
    return np.fft.fftshift(np.fft.fft2(shifted, axes=axes, norm="ortho"), axes=axes)


def ifft2c_array(z: np.ndarray, axes: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """Inversa de ``fft2c_array``"""
    shifted = np.fft.ifftshift(z, axes=axes)
    return np.fft.fftshift(np.fft.ifft2(shifted, axes=axes, norm="ortho"), axes=axes)


def fft2c(frame: np.ndarray) -> np.ndarray:
    """FFT centrada de una imagen compleja 2-D (o de varias, por los dos primeros ejes)"""
    return fft2c_array(np.asarray(frame), (0, 1))


def ifft2c(kspace: np.ndarray) -> np.ndarray:
    """IFFT centrada de un k-espacio complejo 2-D"""
    return ifft2c_array(np.asarray(kspace), (0, 1))


def _check_shapes(image_shape, s: CoilSensitivities, m: SamplingMask) -> None:
    nx, ny, nt = image_shape
    if s.maps.shape[:2] != (nx, ny):
        raise InvalidArgumentError(f"Sensibilidades {s.maps.shape[:2]} frente a imagen {(nx, ny)}")
    if m.pattern.shape != (nx, ny, nt):
        raise InvalidArgumentError(f"Máscara {m.pattern.shape} frente a imagen {(nx, ny, nt)}")


def forward_encode(x: ComplexImageSeries, s: CoilSensitivities, m: SamplingMask) -> MultiCoilKSpace:
    """
    Codificación ``M ⊙ F(S_c ⊙ x_t)`` por bobina y fotograma

    Returns:
        MultiCoilKSpace: (nx, ny, nt, ns) con ceros fuera de la máscara
    """
    _check_shapes(x.shape, s, m)
    coil_images = x.to_complex()[..., None] * s.to_complex()[:, :, None, :]
    kspace = fft2c_array(coil_images, (0, 1)) * m.pattern[..., None]
    return MultiCoilKSpace.from_complex(kspace)


def adjoint_encode(y: MultiCoilKSpace, s: CoilSensitivities, m: SamplingMask) -> ComplexImageSeries:
    """
    Adjunto ``sum_c conj(S_c) ⊙ F^-1(M ⊙ y_c)`` (imagen de relleno con ceros)
    """
    nx, ny, nt, ns = y.shape
    _check_shapes((nx, ny, nt), s, m)
    if s.ns != ns:
        raise InvalidArgumentError(f"{s.ns} mapas de bobina para {ns} bobinas de datos")
    coil_images = ifft2c_array(y.to_complex() * m.pattern[..., None], (0, 1))
    sens = np.conj(s.to_complex())[:, :, None, :]
    combined = np.zeros((nx, ny, nt), dtype=np.complex128)
    for c in range(ns):
        combined += sens[..., c] * coil_images[..., c]
    return ComplexImageSeries.from_complex(combined)


CASORATI_ORDER = "F"


def casorati_shape(shape: Tuple[int, ...]) -> Tuple[int, int]:
    """Forma (nx*ny, nt) de la matriz de Casorati de una serie (nx, ny, nt, ...)"""
    nx, ny, nt = shape[:3]
    return nx * ny, nt


def casorati(x: ComplexImageSeries) -> np.ndarray:
    """
    Matriz de Casorati compleja (nx*ny, nt): la columna t es el fotograma t
    aplanado en orden de almacenamiento (modo 0 más rápido)
    """
    return x.to_complex().reshape(casorati_shape(x.shape), order=CASORATI_ORDER)


def sensitivity_normalize(s: CoilSensitivities) -> CoilSensitivities:
    """Normalizar los mapas para que sum_c |s_c|^2 = 1 donde hay señal"""
    z = s.to_complex()
    energy = np.sqrt((np.abs(z) ** 2).sum(axis=-1, keepdims=True))
    safe = np.where(energy > 0, energy, 1.0)
    return CoilSensitivities.from_complex(z / safe)


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Producto interno complejo ``<a, b> = sum conj(a) b`` de datos en canales"""
    return complex(np.vdot(channels_to_complex(a), channels_to_complex(b)))
