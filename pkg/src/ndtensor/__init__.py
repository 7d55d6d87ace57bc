# src/ndtensor/__init__.py

"""
Módulo de álgebra tensorial densa.
Contiene el desplegado/plegado por modos, el producto modo-n y Tucker.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .tensor import (
    DenseTensor,
    ModeMatrix,
    as_dense,
    fold,
    from_storage,
    mode_product,
    to_storage,
    tucker_reconstruct,
    unfold,
)

__all__ = ['DenseTensor', 'ModeMatrix', 'as_dense', 'fold', 'from_storage',
           'mode_product', 'to_storage', 'tucker_reconstruct', 'unfold']
