# src/patching/operators.py

"""
Operador de selección de parches P (gather), su adjunto exacto P^T
(scatter con suma) y el ensamblado promediado por número de contribuciones.

Las versiones ``*_node`` construyen los mismos operadores dentro del grafo
de diferenciación automática.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.autodiff import ops
from src.autodiff.node import Node
from src.mri.types import ComplexImageSeries
from src.utils.errors import InvalidArgumentError

from .block_matching import PatchIndexMap

logger = logging.getLogger(__name__)

# (L, K, p, p, nt, 2) <-> (L, p, p, nt, 2, K)
_TO_GROUP_AXES = (0, 2, 3, 4, 5, 1)
_FROM_GROUP_AXES = (0, 5, 1, 2, 3, 4)


@dataclass
class NonlocalTensorBatch:
    """L tensores no locales de forma (p, p, nt, 2, K) apilados en (L, p, p, nt, 2, K)"""
    groups: np.ndarray
    index_map: PatchIndexMap

    def __post_init__(self):
        self.groups = np.asarray(self.groups, dtype=np.float64)
        m = self.index_map
        expected = (m.l_count, m.p, m.p)
        if self.groups.ndim != 6 or self.groups.shape[:3] != expected \
                or self.groups.shape[4] != 2 or self.groups.shape[5] != m.k:
            raise InvalidArgumentError(
                f"Lote {self.groups.shape} incompatible con el mapa (L={m.l_count}, p={m.p}, K={m.k})")

    @property
    def nt(self) -> int:
        return self.groups.shape[3]


def _check_image(x: ComplexImageSeries, index_map: PatchIndexMap) -> None:
    if tuple(x.shape[:2]) != tuple(index_map.padded_shape):
        raise InvalidArgumentError(
            f"Serie {x.shape[:2]} no coincide con la forma rellenada {index_map.padded_shape}")


def gather_groups(x: ComplexImageSeries, index_map: PatchIndexMap) -> NonlocalTensorBatch:
    """
    Operador P: extraer el bloque (p, p, nt, 2) de cada entrada del mapa

    Raises:
        InvalidArgumentError: si el mapa no corresponde a la forma de x
    """
    _check_image(x, index_map)
    nxp, nyp, nt = x.shape
    p, l_count, k = index_map.p, index_map.l_count, index_map.k
    rows = x.data.reshape(nxp * nyp, nt * 2)[index_map.pixel_rows()]
    groups = rows.reshape(l_count, k, p, p, nt, 2).transpose(_TO_GROUP_AXES)
    return NonlocalTensorBatch(np.ascontiguousarray(groups), index_map)


def scatter_adjoint(batch: NonlocalTensorBatch) -> ComplexImageSeries:
    """Operador P^T: acumular cada parche en su origen (adjunto exacto de gather)"""
    m = batch.index_map
    nxp, nyp = m.padded_shape
    nt = batch.nt
    rows = batch.groups.transpose(_FROM_GROUP_AXES).reshape(-1, nt * 2)
    image = ops.scatter_rows_array(rows, m.pixel_rows(), nxp * nyp)
    return ComplexImageSeries(image.reshape(nxp, nyp, nt, 2))


def contribution_count(index_map: PatchIndexMap) -> np.ndarray:
    """Cuántos parches cubren cada píxel rellenado"""
    return index_map.contribution_count()


def assemble_average(batch: NonlocalTensorBatch) -> ComplexImageSeries:
    """P^T dividido píxel a píxel por el número de contribuciones"""
    counts = contribution_count(batch.index_map)
    if counts.min() < 1:
        raise InvalidArgumentError("Hay píxeles sin ningún parche asignado")
    summed = scatter_adjoint(batch)
    return ComplexImageSeries(summed.data / counts[:, :, None, None])


def gather_node(x: Node, index_map: PatchIndexMap) -> Node:
    """P dentro del grafo: (nxp, nyp, nt, 2) -> (L, p, p, nt, 2, K)"""
    nxp, nyp, nt, _ = x.shape
    if (nxp, nyp) != tuple(index_map.padded_shape):
        raise InvalidArgumentError(f"Nodo {x.shape} frente a forma rellenada {index_map.padded_shape}")
    p = index_map.p
    flat = ops.reshape(x, (nxp * nyp, nt * 2))
    rows = ops.gather_rows(flat, index_map.pixel_rows())
    stacked = ops.reshape(rows, (index_map.l_count, index_map.k, p, p, nt, 2))
    return ops.transpose(stacked, _TO_GROUP_AXES)


def assemble_node(groups: Node, index_map: PatchIndexMap) -> Node:
    """
    Ensamblado promediado dentro del grafo: scatter con suma seguido de la
    división constante por el número de contribuciones
    """
    nxp, nyp = index_map.padded_shape
    nt = groups.shape[3]
    rows = ops.reshape(ops.transpose(groups, _FROM_GROUP_AXES), (-1, nt * 2))
    summed = ops.scatter_add_rows(rows, index_map.pixel_rows(), nxp * nyp)
    image = ops.reshape(summed, (nxp, nyp, nt, 2))
    weights = 1.0 / index_map.contribution_count()
    return ops.mul(image, weights[:, :, None, None])
