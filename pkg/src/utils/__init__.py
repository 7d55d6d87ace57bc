# src/utils/__init__.py

"""
Módulo de utilidades del motor de reconstrucción.
Contiene la configuración, los errores, la E/S de datos y la medida de tiempos.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .config import PhantomSpec, TrainConfig
from .data_io import ArrayStore
from .errors import TenfError, exit_code_for
from .performance import PerformanceBenchmark

__all__ = ['PhantomSpec', 'TrainConfig', 'ArrayStore', 'TenfError', 'exit_code_for',
           'PerformanceBenchmark']
