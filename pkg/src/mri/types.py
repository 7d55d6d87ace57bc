# src/mri/types.py

"""
Contenedores de datos del modelo de adquisición. Los valores complejos se
guardan como tensores reales con un último eje (real, imaginario).
"""

from dataclasses import dataclass

import numpy as np

from src.utils.config import MASK_KINDS
from src.utils.errors import InvalidArgumentError


def complex_to_channels(z: np.ndarray) -> np.ndarray:
    """Complejo (...) -> real (..., 2)"""
    z = np.asarray(z)
    return np.ascontiguousarray(np.stack([z.real, z.imag], axis=-1), dtype=np.float64)


def channels_to_complex(x: np.ndarray) -> np.ndarray:
    """Real (..., 2) -> complejo (...)"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 2:
        raise InvalidArgumentError(f"Se esperaba un eje final (real, imag), forma {x.shape}")
    return x[..., 0] + 1j * x[..., 1]


@dataclass
class ComplexImageSeries:
    """Serie dinámica X (nx, ny, nt) guardada como (nx, ny, nt, 2)"""
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4 or self.data.shape[-1] != 2:
            raise InvalidArgumentError(f"Serie de imagen con forma inválida {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgumentError("La serie de imagen contiene valores no finitos")

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexImageSeries":
        return cls(complex_to_channels(z))

    def to_complex(self) -> np.ndarray:
        return channels_to_complex(self.data)

    @property
    def shape(self):
        """Extensiones (nx, ny, nt)"""
        return self.data.shape[:3]


@dataclass
class MultiCoilKSpace:
    """Datos de k-espacio Y (nx, ny, nt, ns) guardados como (nx, ny, nt, ns, 2)"""
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 5 or self.data.shape[-1] != 2:
            raise InvalidArgumentError(f"k-espacio con forma inválida {self.data.shape}")

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "MultiCoilKSpace":
        return cls(complex_to_channels(z))

    def to_complex(self) -> np.ndarray:
        return channels_to_complex(self.data)

    @property
    def shape(self):
        """Extensiones (nx, ny, nt, ns)"""
        return self.data.shape[:4]


@dataclass
class CoilSensitivities:
    """Mapas de sensibilidad S (nx, ny, ns), invariantes en el tiempo"""
    maps: np.ndarray

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float64)
        if self.maps.ndim != 4 or self.maps.shape[-1] != 2:
            raise InvalidArgumentError(f"Sensibilidades con forma inválida {self.maps.shape}")

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "CoilSensitivities":
        return cls(complex_to_channels(z))

    def to_complex(self) -> np.ndarray:
        return channels_to_complex(self.maps)

    @property
    def ns(self) -> int:
        return self.maps.shape[2]

    def energy(self) -> np.ndarray:
        """Suma sobre bobinas de |s|^2 por píxel"""
        return (self.maps ** 2).sum(axis=(2, 3))


@dataclass
class SamplingMask:
    """Patrón binario M (nx, ny, nt)"""
    pattern: np.ndarray
    nominal_r: float
    kind: str

    def __post_init__(self):
        self.pattern = (np.asarray(self.pattern) != 0).astype(np.float64)
        if self.pattern.ndim != 3:
            raise InvalidArgumentError(f"Máscara con forma inválida {self.pattern.shape}")
        if self.kind not in MASK_KINDS:
            raise InvalidArgumentError(f"Tipo de máscara desconocido: {self.kind}")

    @property
    def achieved_acceleration(self) -> float:
        sampled = float(self.pattern.sum())
        return float(self.pattern.size) / sampled if sampled > 0 else float("inf")
