# src/losses/objective.py

"""
Función objetivo de la reconstrucción: consistencia de datos más
variación total espacio-temporal y norma nuclear de la matriz de Casorati,
con las variantes de ablación que anulan uno o ambos regularizadores.

También contiene la sustitución final del k-espacio en las posiciones
muestreadas.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from src.autodiff import ops
from src.autodiff.node import Node, constant
from src.mri.operators import CASORATI_ORDER, casorati_shape, fft2c_array, ifft2c_array
from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.utils.config import LOSS_VARIANTS
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

ImageLike = Union[Node, ComplexImageSeries]
TV_AXES = (0, 1, 2)


@dataclass(frozen=True)
class LossWeights:
    """Pesos de los regularizadores y variante de la pérdida"""
    lambda_s: float = 1e-3
    lambda_l: float = 5e-6
    variant: str = "full"

    def __post_init__(self):
        if self.variant not in LOSS_VARIANTS:
            raise InvalidArgumentError(f"Variante de pérdida desconocida: {self.variant}")
        if self.lambda_s < 0 or self.lambda_l < 0:
            raise InvalidArgumentError(f"Pesos negativos: {self.lambda_s}, {self.lambda_l}")

    def effective(self) -> Tuple[float, float]:
        """(lambda_s, lambda_l) tras anular los términos que la variante excluye"""
        lambda_s = self.lambda_s if self.variant in ("full", "tv-only") else 0.0
        lambda_l = self.lambda_l if self.variant in ("full", "lr-only") else 0.0
        return lambda_s, lambda_l


def _image_node(x: ImageLike) -> Node:
    return constant(x.data) if isinstance(x, ComplexImageSeries) else x


def dc_loss(x: ImageLike, y: MultiCoilKSpace, s: CoilSensitivities, m: SamplingMask) -> Node:
    """``||M ⊙ F(S x) - M ⊙ y||_F^2``"""
    x = _image_node(x)
    if x.shape[:3] != m.pattern.shape or y.shape[:3] != m.pattern.shape:
        raise InvalidArgumentError(
            f"Formas incompatibles: imagen {x.shape[:3]}, k-espacio {y.shape}, máscara {m.pattern.shape}")
    mask = m.pattern[:, :, :, None, None]
    kspace = ops.fft2c(ops.coil_multiply(x, s.to_complex()), axes=(0, 1))
    residual = ops.sub(ops.mul(kspace, mask), mask * y.data)
    return ops.frobenius_sq(residual)


def tv_loss(x: ImageLike, on_magnitude: bool = False) -> Node:
    """
    Variación total anisótropa sobre x, y, t

    Por defecto se suma sobre los canales real e imaginario; con
    ``on_magnitude`` se aplica a la magnitud suavizada.
    """
    x = _image_node(x)
    if on_magnitude:
        return ops.abs_sum_of_differences(ops.complex_abs(x), TV_AXES)
    return ops.abs_sum_of_differences(x, TV_AXES)


def lr_loss(x: ImageLike) -> Node:
    """Norma nuclear de la matriz de Casorati compleja (nx*ny, nt)"""
    x = _image_node(x)
    matrix = ops.reshape(x, casorati_shape(x.shape) + (2,), order=CASORATI_ORDER)
    return ops.nuclear_norm(matrix, complex_channels=True)


def composite_loss(x: ImageLike, y: MultiCoilKSpace, s: CoilSensitivities, m: SamplingMask,
                   w: LossWeights, tv_on_magnitude: bool = False) -> Dict[str, Node]:
    """
    Términos de la pérdida y su suma ponderada

    Los términos con peso efectivo nulo no se construyen, de modo que la
    variante ``dc-only`` coincide exactamente con ``dc_loss``.

    Returns:
        Dict: 'dc', 'tv' y 'lr' (los que se evalúan) y 'total'
    """
    x = _image_node(x)
    lambda_s, lambda_l = w.effective()
    terms: Dict[str, Node] = {'dc': dc_loss(x, y, s, m)}
    total = terms['dc']
    if lambda_s > 0:
        terms['tv'] = tv_loss(x, tv_on_magnitude)
        total = ops.add(total, ops.scale(terms['tv'], lambda_s))
    if lambda_l > 0:
        terms['lr'] = lr_loss(x)
        total = ops.add(total, ops.scale(terms['lr'], lambda_l))
    terms['total'] = total
    return terms


def total_loss(x: ImageLike, y: MultiCoilKSpace, s: CoilSensitivities, m: SamplingMask,
               w: LossWeights, tv_on_magnitude: bool = False) -> Node:
    """``dc + lambda_s * tv + lambda_l * lr`` según la variante"""
    return composite_loss(x, y, s, m, w, tv_on_magnitude)['total']


def loss_values(x: ComplexImageSeries, y: MultiCoilKSpace, s: CoilSensitivities, m: SamplingMask,
                w: LossWeights, tv_on_magnitude: bool = False) -> Dict[str, float]:
    """Valor numérico de los tres términos (siempre) y del total ponderado"""
    lambda_s, lambda_l = w.effective()
    dc = float(dc_loss(x, y, s, m).value)
    tv = float(tv_loss(x, tv_on_magnitude).value)
    lr = float(lr_loss(x).value)
    return {'dc': dc, 'tv': tv, 'lr': lr, 'total': dc + lambda_s * tv + lambda_l * lr}


def kspace_replacement(x_final: ComplexImageSeries, y: MultiCoilKSpace, s: CoilSensitivities,
                       m: SamplingMask) -> ComplexImageSeries:
    """
    Sustituir el k-espacio predicho por el adquirido en las posiciones
    muestreadas y recombinar las bobinas con ``sum_c conj(s_c) (.) / sum_c |s_c|^2``

    Los píxeles con sensibilidad total nula se devuelven sin cambios.
    """
    if x_final.shape != m.pattern.shape or y.shape[:3] != m.pattern.shape:
        raise InvalidArgumentError(f"Formas incompatibles: {x_final.shape}, {y.shape}, {m.pattern.shape}")
    x = x_final.to_complex()
    sens = s.to_complex()[:, :, None, :]
    mask = m.pattern[..., None] != 0
    predicted = fft2c_array(x[..., None] * sens, (0, 1))
    replaced = np.where(mask, y.to_complex(), predicted)
    coil_images = ifft2c_array(replaced, (0, 1))
    energy = (np.abs(sens) ** 2).sum(axis=-1)
    combined = (np.conj(sens) * coil_images).sum(axis=-1)
    covered = energy > 0
    out = np.where(covered, combined / np.where(covered, energy, 1.0), x)
    return ComplexImageSeries.from_complex(out)
