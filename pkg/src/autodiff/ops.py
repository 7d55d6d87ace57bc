# src/autodiff/ops.py

"""
Vocabulario de operaciones diferenciables.

Cada función construye un ``Node`` nuevo con su valor y registra la clausura
que propaga el gradiente a sus entradas. Los datos complejos viajan siempre
como un eje final de longitud 2 (real, imaginario), de forma que el motor
solo trabaja con escalares reales.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.mri.operators import fft2c_array, ifft2c_array
from src.ndtensor import tensor
from src.utils.errors import InvalidArgumentError, NumericalError

from .node import Node, as_node

logger = logging.getLogger(__name__)

Operand = Union[Node, np.ndarray, float]


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Reducir un gradiente difundido a la forma original"""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _to_complex(x: np.ndarray) -> np.ndarray:
    return x[..., 0] + 1j * x[..., 1]


def _to_channels(z: np.ndarray) -> np.ndarray:
    return np.stack([z.real, z.imag], axis=-1)


# ---------------------------------------------------------------------------
# Aritmética elemental
# ---------------------------------------------------------------------------

def add(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    out = Node(a.value + b.value, (a, b), "add")

    def _backward(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(g, b.shape))
    out._backward = _backward
    return out


def sub(a: Operand, b: Operand) -> Node:
    return add(a, scale(as_node(b), -1.0))


def scale(x: Node, alpha: float) -> Node:
    x = as_node(x)
    alpha = float(alpha)
    out = Node(alpha * x.value, (x,), "scale")

    def _backward(g):
        x.accumulate(alpha * g)
    out._backward = _backward
    return out


def mul(x: Operand, y: Operand) -> Node:
    """Producto elemento a elemento (con difusión)"""
    x, y = as_node(x), as_node(y)
    out = Node(x.value * y.value, (x, y), "elementwise-multiply")

    def _backward(g):
        if x.requires_grad:
            x.accumulate(_unbroadcast(g * y.value, x.shape))
        if y.requires_grad:
            y.accumulate(_unbroadcast(g * x.value, y.shape))
    out._backward = _backward
    return out


def reduce_sum(x: Node) -> Node:
    out = Node(np.array(x.value.sum()), (x,), "sum")

    def _backward(g):
        x.accumulate(np.full(x.shape, float(g)))
    out._backward = _backward
    return out


def frobenius_sq(x: Node) -> Node:
    """Norma de Frobenius al cuadrado"""
    out = Node(np.array(np.vdot(x.value, x.value)), (x,), "frobenius-sq")

    def _backward(g):
        x.accumulate(2.0 * float(g) * x.value)
    out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Red de coordenadas
# ---------------------------------------------------------------------------

def linear(x: Operand, weight: Node, bias: Optional[Node] = None) -> Node:
    """Capa afín ``x W^T + b`` con x de forma (n, in) y W de forma (out, in)"""
    x = as_node(x)
    if x.value.ndim != 2 or weight.value.shape[1] != x.value.shape[1]:
        raise InvalidArgumentError(f"Capa lineal incompatible: x {x.shape}, W {weight.shape}")
    value = x.value @ weight.value.T
    inputs = [x, weight]
    if bias is not None:
        value = value + bias.value
        inputs.append(bias)
    out = Node(value, inputs, "linear")

    def _backward(g):
        if x.requires_grad:
            x.accumulate(g @ weight.value)
        weight.accumulate(g.T @ x.value)
        if bias is not None:
            bias.accumulate(g.sum(axis=0))
    out._backward = _backward
    return out


def sine(x: Node, omega: float) -> Node:
    """Activación periódica ``sin(omega x)``"""
    omega = float(omega)
    arg = omega * x.value
    out = Node(np.sin(arg), (x,), "sine")

    def _backward(g):
        x.accumulate(g * omega * np.cos(arg))
    out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Álgebra tensorial
# ---------------------------------------------------------------------------

def mode_product(t: Node, a: Node, mode: int) -> Node:
    """Producto modo-n diferenciable respecto al tensor y al factor"""
    t, a = as_node(t), as_node(a)
    out = Node(tensor.mode_product(t.value, a.value, mode), (t, a), "mode-product")

    def _backward(g):
        if t.requires_grad:
            t.accumulate(tensor.mode_product(g, a.value.T, mode))
        if a.requires_grad:
            a.accumulate(tensor.unfold(g, mode) @ tensor.unfold(t.value, mode).T)
    out._backward = _backward
    return out


def reshape(x: Node, shape: Sequence[int], order: str = "C") -> Node:
    original = x.shape
    out = Node(np.reshape(x.value, tuple(shape), order=order), (x,), "reshape")

    def _backward(g):
        x.accumulate(np.reshape(g, original, order=order))
    out._backward = _backward
    return out


def transpose(x: Node, axes: Sequence[int]) -> Node:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Node(np.ascontiguousarray(np.transpose(x.value, axes)), (x,), "transpose")

    def _backward(g):
        x.accumulate(np.transpose(g, inverse))
    out._backward = _backward
    return out


def crop(x: Node, extents: Sequence[int]) -> Node:
    """Quedarse con la esquina inicial ``[:n0, :n1, ...]`` de los primeros ejes"""
    index = tuple(slice(0, int(n)) for n in extents)
    out = Node(np.ascontiguousarray(x.value[index]), (x,), "crop")

    def _backward(g):
        full = np.zeros_like(x.value)
        full[index] = g
        x.accumulate(full)
    out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Selección de parches (operadores P y P^T)
# ---------------------------------------------------------------------------

def _check_rows(index: np.ndarray, n_rows: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64).ravel()
    if index.size and (index.min() < 0 or index.max() >= n_rows):
        raise InvalidArgumentError(
            f"Índices fuera de rango [0, {n_rows}): min={index.min()}, max={index.max()}")
    return index


def scatter_rows_array(values: np.ndarray, index: np.ndarray, n_rows: int) -> np.ndarray:
    """Suma por filas en orden fijo (bincount recorre los datos secuencialmente)"""
    n_cols = values.shape[1]
    flat = (index[:, None] * n_cols + np.arange(n_cols)[None, :]).ravel()
    summed = np.bincount(flat, weights=values.ravel(), minlength=n_rows * n_cols)
    return summed.reshape(n_rows, n_cols)


def gather_rows(x: Node, index: np.ndarray) -> Node:
    """Extraer filas ``x[index]`` de una matriz (n_rows, n_cols)"""
    index = _check_rows(index, x.shape[0])
    out = Node(x.value[index], (x,), "gather")

    def _backward(g):
        x.accumulate(scatter_rows_array(g, index, x.shape[0]))
    out._backward = _backward
    return out


def scatter_add_rows(x: Node, index: np.ndarray, n_rows: int) -> Node:
    """Acumular las filas de ``x`` en una matriz de ``n_rows`` filas (adjunto de gather)"""
    index = _check_rows(index, n_rows)
    if index.size != x.shape[0]:
        raise InvalidArgumentError(f"{index.size} índices para {x.shape[0]} filas")
    out = Node(scatter_rows_array(x.value, index, n_rows), (x,), "scatter-add")

    def _backward(g):
        x.accumulate(g[index])
    out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Operadores de resonancia sobre pares de canales
# ---------------------------------------------------------------------------

def fft2c(x: Node, axes: Tuple[int, int] = (0, 1)) -> Node:
    """FFT 2-D centrada y ortonormal sobre pares (real, imaginario)"""
    out = Node(_to_channels(fft2c_array(_to_complex(x.value), axes)), (x,), "centered-fft2")

    def _backward(g):
        x.accumulate(_to_channels(ifft2c_array(_to_complex(g), axes)))
    out._backward = _backward
    return out


def ifft2c(x: Node, axes: Tuple[int, int] = (0, 1)) -> Node:
    out = Node(_to_channels(ifft2c_array(_to_complex(x.value), axes)), (x,), "centered-ifft2")

    def _backward(g):
        x.accumulate(_to_channels(fft2c_array(_to_complex(g), axes)))
    out._backward = _backward
    return out


def coil_multiply(x: Node, sensitivities: np.ndarray) -> Node:
    """
    Multiplicar la serie (nx, ny, nt, 2) por cada mapa de bobina complejo
    (nx, ny, ns); el resultado tiene forma (nx, ny, nt, ns, 2)
    """
    s = np.asarray(sensitivities)[:, :, None, :]
    z = _to_complex(x.value)[..., None] * s
    out = Node(_to_channels(z), (x,), "coil-multiply")

    def _backward(g):
        back = (np.conj(s) * _to_complex(g)).sum(axis=-1)
        x.accumulate(_to_channels(back))
    out._backward = _backward
    return out


def complex_abs(x: Node, eps: float = 1e-12) -> Node:
    """Magnitud suavizada ``sqrt(re^2 + im^2 + eps)`` de un par de canales"""
    magnitude = np.sqrt(x.value[..., 0] ** 2 + x.value[..., 1] ** 2 + eps)
    out = Node(magnitude, (x,), "complex-abs")

    def _backward(g):
        x.accumulate(x.value * (g / magnitude)[..., None])
    out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Regularizadores
# ---------------------------------------------------------------------------

def abs_sum_of_differences(x: Node, axes: Sequence[int]) -> Node:
    """
    Variación total anisótropa: suma de |diferencias hacia delante| a lo
    largo de ``axes``, sin condición periódica. ``sign(0) = 0``.
    """
    axes = tuple(axes)
    diffs = [np.diff(x.value, axis=axis) for axis in axes]
    total = sum(float(np.abs(d).sum()) for d in diffs)
    out = Node(np.array(total), (x,), "abs-sum-of-differences")

    def _backward(g):
        grad = np.zeros_like(x.value)
        n_dims = x.value.ndim
        for axis, d in zip(axes, diffs):
            sg = np.sign(d)
            head = [slice(None)] * n_dims
            tail = [slice(None)] * n_dims
            head[axis] = slice(0, -1)
            tail[axis] = slice(1, None)
            grad[tuple(head)] -= sg
            grad[tuple(tail)] += sg
        x.accumulate(float(g) * grad)
    out._backward = _backward
    return out


def _condition_report(matrix: np.ndarray) -> str:
    finite = bool(np.all(np.isfinite(matrix)))
    if not finite:
        return f"matriz {matrix.shape} con valores no finitos"
    norm = float(np.linalg.norm(matrix))
    return f"matriz {matrix.shape}, norma de Frobenius {norm:.3e}, max|a| {float(np.abs(matrix).max()):.3e}"


def nuclear_norm(x: Node, complex_channels: bool = False) -> Node:
    """
    Norma nuclear con subgradiente ``U V^H`` (constante respecto a x)

    Args:
        x: Matriz real (m, n) o, con ``complex_channels``, matriz compleja
           representada como (m, n, 2)

    Raises:
        NumericalError: si la SVD no converge
    """
    expected = 3 if complex_channels else 2
    if x.value.ndim != expected:
        raise InvalidArgumentError(f"Norma nuclear sobre un valor de forma {x.shape}")
    matrix = _to_complex(x.value) if complex_channels else x.value
    try:
        u, sigma, vh = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"La SVD no converge: {e}; {_condition_report(matrix)}") from e
    subgradient = u @ vh
    out = Node(np.array(float(sigma.sum())), (x,), "nuclear-norm")

    def _backward(g):
        if complex_channels:
            x.accumulate(float(g) * _to_channels(subgradient))
        else:
            x.accumulate(float(g) * subgradient)
    out._backward = _backward
    return out
