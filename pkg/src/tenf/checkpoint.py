# src/tenf/checkpoint.py

"""
Puntos de control del modelo: un fichero de datos por parámetro y un
manifiesto ``checkpoint.json`` con rangos, extensiones, omega y la
convención de coordenadas.
"""

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Union

from src.patching.block_matching import PatchIndexMap
from src.utils.data_io import ArrayStore
from src.utils.errors import FormatError, StorageError

from .model import COORDINATE_CONVENTION, FactorNetwork, TenfModel

logger = logging.getLogger(__name__)

MANIFEST = "checkpoint.json"


def save_checkpoint(model: TenfModel, directory: Union[str, Path]) -> Path:
    """
    Guardar todos los parámetros y la geometría del modelo

    Returns:
        Path: ruta del manifiesto
    """
    directory = Path(directory)
    files = OrderedDict()
    for name, value in model.params.items():
        filename = f"{name}.tenf"
        ArrayStore.save_array(directory / filename, value)
        files[name] = filename
    if model.index_map is not None:
        model.index_map.save(directory)

    manifest = {
        'coordinate_convention': COORDINATE_CONVENTION,
        'mode': model.mode,
        'extents': list(model.extents),
        'ranks': list(model.ranks),
        'hidden': model.hidden,
        'omega': model.omega,
        'image_shape': list(model.image_shape) if model.image_shape else None,
        'parameters': files,
        'parameter_counts': model.parameter_counts(),
    }
    path = directory / MANIFEST
    try:
        with open(path, 'w') as f:
            json.dump(manifest, f, indent=2)
    except OSError as e:
        raise StorageError(f"No se puede escribir {path}: {e}") from e
    logger.info(f"Punto de control guardado en {directory}")
    return path


def load_checkpoint(directory: Union[str, Path]) -> TenfModel:
    """
    Restaurar un modelo guardado con ``save_checkpoint``

    Raises:
        FormatError: convención de coordenadas distinta o manifiesto incompleto
    """
    directory = Path(directory)
    try:
        with open(directory / MANIFEST, 'r') as f:
            manifest = json.load(f)
    except OSError as e:
        raise StorageError(f"No se puede leer el manifiesto en {directory}: {e}") from e

    convention = manifest.get('coordinate_convention')
    if convention != COORDINATE_CONVENTION:
        raise FormatError(f"Convención de coordenadas '{convention}' no soportada")
    try:
        ranks = manifest['ranks']
        networks = [FactorNetwork(i, r, manifest['hidden'], manifest['omega'])
                    for i, r in enumerate(ranks)]
        params = OrderedDict((name, ArrayStore.load_array(directory / filename))
                             for name, filename in manifest['parameters'].items())
        index_map = PatchIndexMap.load(directory) if manifest['mode'] == "patch" else None
        image_shape = tuple(manifest['image_shape']) if manifest['image_shape'] else None
        return TenfModel(manifest['extents'], ranks, params, networks, index_map, image_shape)
    except KeyError as e:
        raise FormatError(f"Falta la clave {e} en {MANIFEST}") from e
