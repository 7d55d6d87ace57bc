# src/losses/__init__.py

"""
Módulo de la función objetivo.
Contiene los términos de pérdida y la sustitución del k-espacio.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .objective import (
    LossWeights,
    composite_loss,
    dc_loss,
    kspace_replacement,
    loss_values,
    lr_loss,
    total_loss,
    tv_loss,
)

__all__ = ['LossWeights', 'composite_loss', 'dc_loss', 'kspace_replacement', 'loss_values',
           'lr_loss', 'total_loss', 'tv_loss']
