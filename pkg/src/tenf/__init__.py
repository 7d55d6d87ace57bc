# src/tenf/__init__.py

"""
Módulo del modelo de función tensorial.
Contiene los núcleos, las redes de factores y los puntos de control.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    COORDINATE_CONVENTION,
    CoordinateGrid,
    FactorNetwork,
    TenfModel,
    coordinates,
    evaluate_factors,
    evaluate_global,
    evaluate_group,
    evaluate_groups,
    global_ranks,
    image_node,
    init_global_model,
    init_model,
    reconstruct_image,
)

__all__ = ['load_checkpoint', 'save_checkpoint', 'COORDINATE_CONVENTION', 'CoordinateGrid',
           'FactorNetwork', 'TenfModel', 'coordinates', 'evaluate_factors', 'evaluate_global',
           'evaluate_group', 'evaluate_groups', 'global_ranks', 'image_node', 'init_global_model',
           'init_model', 'reconstruct_image']
