# src/utils/errors.py

"""
Jerarquía de excepciones del motor de reconstrucción.

Cada familia de error se corresponde con un código de salida de la CLI
(ver ``main.py``): argumentos inválidos -> 2, fallos numéricos -> 3,
fallos de entrada/salida o de formato -> 4.
"""

from typing import Optional


class TenfError(Exception):
    """Error base del proyecto"""


class InvalidArgumentError(TenfError, ValueError):
    """Argumento, forma o configuración inconsistente"""


class NumericalError(TenfError, ArithmeticError):
    """Fallo numérico (SVD que no converge, valores no finitos)"""


class TrainingError(NumericalError):
    """Gradiente o pérdida no finitos durante el entrenamiento"""

    def __init__(self, message: str, parameter: Optional[str] = None,
                 snapshot_path: Optional[str] = None):
        super().__init__(message)
        self.parameter = parameter
        self.snapshot_path = snapshot_path


class GraphError(TenfError, RuntimeError):
    """Error interno del grafo de diferenciación (p.ej. ciclo)"""


class FormatError(TenfError):
    """Fichero de datos con magic, versión o tipo incorrectos"""


class StorageError(TenfError, OSError):
    """Fichero truncado o directorio no escribible"""


EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def exit_code_for(error: BaseException) -> int:
    """Traducir una excepción al código de salida de la CLI"""
    if isinstance(error, InvalidArgumentError):
        return EXIT_INVALID_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (FormatError, StorageError, OSError)):
        return EXIT_IO
    if isinstance(error, ValueError):
        return EXIT_INVALID_CONFIG
    return 1
