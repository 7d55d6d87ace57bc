# src/ndtensor/tensor.py

"""
Álgebra de tensores densos reales: desplegado por modo (unfold), plegado
(fold), producto modo-n y reconstrucción de Tucker.

Convención de linealización: el índice del modo 0 varía más rápido
(orden Fortran). Las columnas de ``unfold(t, n)`` recorren los modos
restantes en orden ascendente con los modos inferiores más rápidos
(ordenación canónica de Kolda), de modo que ``unfold(t, 0)`` es un simple
reshape del buffer de almacenamiento.

Los modos se numeran desde 0, igual que los ejes de numpy.
"""

import logging
from typing import List, Sequence

import numpy as np

from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MAX_MODES = 6

DenseTensor = np.ndarray
ModeMatrix = np.ndarray


def as_dense(t) -> DenseTensor:
    """
    Validar y convertir a tensor denso float64

    Raises:
        InvalidArgumentError: si el número de modos no está en [1, 6]
    """
    arr = np.asarray(t, dtype=np.float64)
    if not 1 <= arr.ndim <= MAX_MODES:
        raise InvalidArgumentError(
            f"Un tensor denso necesita entre 1 y {MAX_MODES} modos, recibido {arr.ndim}")
    if any(n < 1 for n in arr.shape):
        raise InvalidArgumentError(f"Extensiones no positivas: {arr.shape}")
    return arr


def to_storage(t: DenseTensor, dtype=np.float64) -> np.ndarray:
    """Buffer plano con el modo 0 variando más rápido"""
    return np.asarray(t, dtype=dtype).reshape(-1, order='F')


def from_storage(buffer: np.ndarray, shape: Sequence[int], dtype=np.float64) -> DenseTensor:
    """Inversa de ``to_storage``"""
    shape = tuple(int(n) for n in shape)
    buffer = np.asarray(buffer, dtype=dtype).ravel()
    if int(np.prod(shape)) != buffer.size:
        raise InvalidArgumentError(
            f"El buffer tiene {buffer.size} elementos y la forma {shape} pide {int(np.prod(shape))}")
    return np.array(buffer.reshape(shape, order='F'), order='C')


def _check_mode(ndim: int, mode: int) -> None:
    if not 0 <= mode < ndim:
        raise InvalidArgumentError(f"Modo {mode} fuera de rango para un tensor de {ndim} modos")


def unfold(t: DenseTensor, mode: int) -> ModeMatrix:
    """
    Desplegado modo-n

    Args:
        t: Tensor denso
        mode: Modo a desplegar (desde 0)

    Returns:
        ModeMatrix: matriz (N_mode, prod(resto))
    """
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t.ndim, mode)
    moved = np.moveaxis(t, mode, 0)
    return moved.reshape(t.shape[mode], -1, order='F')


def fold(m: ModeMatrix, mode: int, shape: Sequence[int]) -> DenseTensor:
    """
    Plegado: inversa exacta de ``unfold``

    Raises:
        InvalidArgumentError: si la matriz no encaja con la forma y el modo
    """
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(n) for n in shape)
    _check_mode(len(shape), mode)
    rest = [n for i, n in enumerate(shape) if i != mode]
    if m.ndim != 2 or m.shape[0] != shape[mode] or m.shape[1] != int(np.prod(rest)):
        raise InvalidArgumentError(
            f"Matriz {m.shape} incompatible con la forma {shape} en el modo {mode}")
    moved = m.reshape([shape[mode]] + rest, order='F')
    return np.ascontiguousarray(np.moveaxis(moved, 0, mode))


def mode_product(t: DenseTensor, a: np.ndarray, mode: int) -> DenseTensor:
    """
    Producto modo-n ``t ×_mode a``

    Args:
        t: Tensor denso
        a: Factor con filas = nueva extensión y columnas = extensión antigua
        mode: Modo sobre el que se multiplica

    Returns:
        DenseTensor: tensor con la extensión de ``mode`` sustituida por ``a.shape[0]``
    """
    t = np.asarray(t, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    _check_mode(t.ndim, mode)
    if a.ndim != 2 or a.shape[1] != t.shape[mode]:
        raise InvalidArgumentError(
            f"Factor {a.shape} incompatible con la extensión {t.shape[mode]} del modo {mode}")
    shape = list(t.shape)
    shape[mode] = a.shape[0]
    return fold(a @ unfold(t, mode), mode, shape)


def tucker_reconstruct(core: DenseTensor, factors: List[np.ndarray]) -> DenseTensor:
    """
    Reconstrucción de Tucker ``core ×_0 U0 ×_1 U1 ...`` en orden ascendente

    Raises:
        InvalidArgumentError: si el número de factores o sus columnas no cuadran
    """
    core = as_dense(core)
    if len(factors) != core.ndim:
        raise InvalidArgumentError(
            f"Se esperaban {core.ndim} factores y se recibieron {len(factors)}")
    out = core
    for mode, factor in enumerate(factors):
        out = mode_product(out, factor, mode)
    return out

