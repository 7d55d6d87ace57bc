# src/harness/__init__.py

"""
Módulo de orquestación de experimentos.
Contiene el fantoma, el bucle de entrenamiento, las ablaciones y la exportación.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .ablation import run_ablation_suite, run_grid
from .export import export_views
from .phantom import generate_phantom
from .trainer import RunReport, run_reconstruction

__all__ = ['run_ablation_suite', 'run_grid', 'export_views', 'generate_phantom',
           'RunReport', 'run_reconstruction']
