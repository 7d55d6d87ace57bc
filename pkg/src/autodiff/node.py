# src/autodiff/node.py

"""
Nodo del grafo de diferenciación automática en modo inverso.

El grafo se construye en cada iteración (define-by-run). Cada nodo guarda su
valor (``numpy.ndarray`` float64), sus entradas y una clausura ``_backward``
que reparte el gradiente recibido entre sus entradas. Solo se propagan
gradientes hacia nodos con ``requires_grad``.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.utils.errors import GraphError, InvalidArgumentError

logger = logging.getLogger(__name__)


class Node:
    """Valor tensorial con su gradiente y la operación que lo produjo"""

    __slots__ = ("value", "grad", "op", "inputs", "name", "requires_grad", "_backward")

    def __init__(self, value, inputs: Sequence["Node"] = (), op: str = "leaf",
                 name: Optional[str] = None, requires_grad: Optional[bool] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.op = op
        self.inputs = tuple(inputs)
        self.name = name
        if requires_grad is None:
            requires_grad = any(node.requires_grad for node in self.inputs)
        self.requires_grad = requires_grad
        self._backward: Callable[[np.ndarray], None] = lambda g: None

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g: np.ndarray) -> None:
        """Sumar una contribución al gradiente (solo si el nodo lo requiere)"""
        if not self.requires_grad:
            return
        g = np.asarray(g, dtype=np.float64)
        if g.shape != self.value.shape:
            raise GraphError(f"Gradiente {g.shape} para un nodo de forma {self.value.shape} ({self.op})")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    # Azúcar sintáctico al estilo micrograd
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __mul__(self, other):
        from . import ops
        if np.isscalar(other):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    def __rmul__(self, other):
        return self * other

    def __repr__(self):
        label = f" '{self.name}'" if self.name else ""
        return f"Node({self.op}{label}, shape={self.value.shape})"


def leaf(value, name: Optional[str] = None, requires_grad: bool = True) -> Node:
    """Crear un parámetro (hoja que recibe gradiente)"""
    return Node(np.array(value, dtype=np.float64), op="leaf", name=name, requires_grad=requires_grad)


def constant(value, name: Optional[str] = None) -> Node:
    """Crear una hoja constante (sin gradiente)"""
    return Node(value, op="leaf", name=name, requires_grad=False)


def as_node(value) -> Node:
    """Envolver un valor como constante si no es ya un nodo"""
    return value if isinstance(value, Node) else constant(value)


def topological_order(root: Node) -> List[Node]:
    """
    Orden topológico iterativo (entradas antes que salidas)

    Raises:
        GraphError: si se detecta un ciclo
    """
    order: List[Node] = []
    state: Dict[int, int] = {}  # 1 = en curso, 2 = terminado
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        key = id(node)
        if expanded:
            state[key] = 2
            order.append(node)
            continue
        current = state.get(key)
        if current == 2:
            continue
        if current == 1:
            raise GraphError(f"Ciclo detectado en el grafo en el nodo {node!r}")
        state[key] = 1
        stack.append((node, True))
        for child in reversed(node.inputs):
            child_state = state.get(id(child))
            if child_state == 1:
                raise GraphError(f"Ciclo detectado en el grafo en el nodo {child!r}")
            if child_state is None:
                stack.append((child, False))
    return order


def backward(loss: Node) -> Dict[str, np.ndarray]:
    """
    Propagar gradientes desde una pérdida escalar

    Args:
        loss: Nodo escalar

    Returns:
        Dict: gradiente de cada hoja con nombre que requiere gradiente

    Raises:
        InvalidArgumentError: si la pérdida no es escalar
    """
    if loss.value.size != 1:
        raise InvalidArgumentError(f"La pérdida debe ser escalar, forma {loss.value.shape}")
    order = topological_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.grad is not None and node.inputs:
            node._backward(node.grad)

    gradients = {}
    for node in order:
        if node.op == "leaf" and node.requires_grad and node.name is not None:
            gradients[node.name] = node.grad if node.grad is not None else np.zeros_like(node.value)
    return gradients
