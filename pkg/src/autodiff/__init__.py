# src/autodiff/__init__.py

"""
Módulo de diferenciación automática en modo inverso.
Contiene el grafo, el vocabulario de operaciones, Adam y la comprobación
de gradientes.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from . import ops
from .gradcheck import check_gradients
from .node import Node, backward, constant, leaf
from .optim import AdamOptimizer, AdamState, LrSchedule, adam_step, lr_at

__all__ = ['ops', 'check_gradients', 'Node', 'backward', 'constant', 'leaf',
           'AdamOptimizer', 'AdamState', 'LrSchedule', 'adam_step', 'lr_at']
