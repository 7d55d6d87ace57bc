# src/patching/__init__.py

"""
Módulo de parches no locales.
Contiene el block matching y los operadores P / P^T.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .block_matching import (
    PadRecord,
    PatchIndexMap,
    block_match,
    crop_padding,
    min_candidate_count,
    pad_replicate,
)
from .operators import (
    NonlocalTensorBatch,
    assemble_average,
    assemble_node,
    contribution_count,
    gather_groups,
    gather_node,
    scatter_adjoint,
)

__all__ = ['PadRecord', 'PatchIndexMap', 'block_match', 'crop_padding', 'min_candidate_count',
           'pad_replicate', 'NonlocalTensorBatch', 'assemble_average', 'assemble_node',
           'contribution_count', 'gather_groups', 'gather_node', 'scatter_adjoint']
