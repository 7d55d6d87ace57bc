# src/utils/data_io.py

"""
Lectura y escritura de los ficheros de datos de la reconstrucción.

Formato de un contenedor por array:

    8 bytes   magic ``TENFARR\\0``
    uint32    versión del formato
    uint16    código de tipo (1 = float64, 2 = int64)
    uint16    número de modos d
    d x uint64 extensiones
    datos     little-endian, modo 0 más rápido (orden de almacenamiento)

Todos los enteros de cabecera son little-endian, de modo que el fichero es
idéntico sea cual sea la arquitectura que lo escribe.
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.ndtensor.tensor import MAX_MODES, from_storage, to_storage
from src.utils.errors import FormatError, InvalidArgumentError, StorageError

logger = logging.getLogger(__name__)

MAGIC = b"TENFARR\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIHH")
_DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODES = {"f": 1, "i": 2, "u": 2, "b": 2}

DATASET_FILES = {
    'truth': "truth.tenf",
    'sensitivities': "sensitivities.tenf",
    'kspace': "kspace_full.tenf",
}

PathLike = Union[str, Path]


def mask_tiles(pattern: np.ndarray) -> np.ndarray:
    """Fotogramas de la máscara (nx, ny, nt) uno junto a otro: (nx, nt*ny)"""
    return np.concatenate([pattern[:, :, t] for t in range(pattern.shape[2])], axis=1)


class ArrayStore:
    """Utilidades estáticas de entrada/salida de arrays y artefactos"""

    @staticmethod
    def encode_array(array: np.ndarray) -> bytes:
        """
        Serializar un array al formato contenedor

        Raises:
            InvalidArgumentError: tipo no soportado o número de modos fuera de [1, 6]
        """
        array = np.asarray(array)
        code = _CODES.get(array.dtype.kind)
        if code is None:
            raise InvalidArgumentError(f"Tipo de dato no soportado: {array.dtype}")
        if not 1 <= array.ndim <= MAX_MODES:
            raise InvalidArgumentError(f"Número de modos fuera de rango: {array.ndim}")
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, code, array.ndim)
        extents = struct.pack(f"<{array.ndim}Q", *array.shape)
        payload = to_storage(array, _DTYPES[code]).tobytes()
        return header + extents + payload

    @staticmethod
    def decode_array(raw: bytes, source: str = "<memoria>") -> np.ndarray:
        """
        Reconstruir un array desde los bytes del contenedor

        Raises:
            FormatError: magic, versión o tipo incorrectos
            StorageError: datos truncados
        """
        if len(raw) < _HEADER.size:
            raise StorageError(f"{source}: cabecera truncada ({len(raw)} bytes)")
        magic, version, code, ndim = _HEADER.unpack_from(raw, 0)
        if magic != MAGIC:
            raise FormatError(f"{source}: magic incorrecto {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"{source}: versión de formato {version} no soportada")
        if code not in _DTYPES:
            raise FormatError(f"{source}: código de tipo desconocido {code}")
        if not 1 <= ndim <= MAX_MODES:
            raise FormatError(f"{source}: número de modos inválido {ndim}")

        offset = _HEADER.size
        extents_size = 8 * ndim
        if len(raw) < offset + extents_size:
            raise StorageError(f"{source}: extensiones truncadas")
        shape = struct.unpack_from(f"<{ndim}Q", raw, offset)
        offset += extents_size

        dtype = _DTYPES[code]
        count = int(np.prod(shape, dtype=np.int64))
        expected = count * dtype.itemsize
        if len(raw) - offset < expected:
            raise StorageError(f"{source}: datos truncados ({len(raw) - offset} de {expected} bytes)")
        if len(raw) - offset > expected:
            raise FormatError(f"{source}: {len(raw) - offset - expected} bytes sobrantes")
        flat = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        native = np.int64 if code == 2 else np.float64
        return from_storage(flat, shape, native)

    @staticmethod
    def save_array(path: PathLike, array: np.ndarray) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(ArrayStore.encode_array(array))
        except OSError as e:
            raise StorageError(f"No se puede escribir {path}: {e}") from e
        logger.debug(f"Guardado {path} {np.shape(array)}")

    @staticmethod
    def load_array(path: PathLike) -> np.ndarray:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise StorageError(f"No se puede leer {path}: {e}") from e
        return ArrayStore.decode_array(raw, str(path))

    # --- tipos del modelo de adquisición ---------------------------------

    @staticmethod
    def save_image(path: PathLike, x: ComplexImageSeries) -> None:
        ArrayStore.save_array(path, x.data)

    @staticmethod
    def load_image(path: PathLike) -> ComplexImageSeries:
        return ComplexImageSeries(ArrayStore.load_array(path))

    @staticmethod
    def save_kspace(path: PathLike, y: MultiCoilKSpace) -> None:
        ArrayStore.save_array(path, y.data)

    @staticmethod
    def load_kspace(path: PathLike) -> MultiCoilKSpace:
        return MultiCoilKSpace(ArrayStore.load_array(path))

    @staticmethod
    def save_sensitivities(path: PathLike, s: CoilSensitivities) -> None:
        ArrayStore.save_array(path, s.maps)

    @staticmethod
    def load_sensitivities(path: PathLike) -> CoilSensitivities:
        return CoilSensitivities(ArrayStore.load_array(path))

    @staticmethod
    def save_mask(path: PathLike, mask: SamplingMask) -> None:
        """
        Guardar el patrón y, al lado, un JSON con el tipo y la R nominal y
        un PGM con los fotogramas de la máscara en mosaico horizontal
        """
        path = Path(path)
        ArrayStore.save_array(path, mask.pattern)
        ArrayStore.write_pgm(path.with_suffix(".pgm"), mask_tiles(mask.pattern))
        meta = {'kind': mask.kind, 'nominal_r': mask.nominal_r,
                'achieved_r': mask.achieved_acceleration}
        with open(path.with_suffix(".json"), 'w') as f:
            json.dump(meta, f, indent=2, sort_keys=True)

    @staticmethod
    def load_mask(path: PathLike) -> SamplingMask:
        path = Path(path)
        pattern = ArrayStore.load_array(path)
        meta_path = path.with_suffix(".json")
        if meta_path.exists():
            with open(meta_path, 'r') as f:
                meta = json.load(f)
            return SamplingMask(pattern, float(meta['nominal_r']), meta['kind'])
        logger.warning(f"{meta_path} no existe; se asume máscara de densidad variable")
        sampled = max(int(np.count_nonzero(pattern)), 1)
        return SamplingMask(pattern, pattern.size / sampled, "variable-density")

    # --- conjuntos de datos ------------------------------------------------

    @staticmethod
    def save_dataset(directory: PathLike, truth: ComplexImageSeries, s: CoilSensitivities,
                     y_full: MultiCoilKSpace) -> Dict[str, str]:
        """Guardar verdad, sensibilidades y k-espacio completo en un directorio"""
        directory = Path(directory)
        ArrayStore.save_image(directory / DATASET_FILES['truth'], truth)
        ArrayStore.save_sensitivities(directory / DATASET_FILES['sensitivities'], s)
        ArrayStore.save_kspace(directory / DATASET_FILES['kspace'], y_full)
        logger.info(f"Conjunto de datos guardado en {directory}")
        return {key: str(directory / name) for key, name in DATASET_FILES.items()}

    @staticmethod
    def load_dataset(directory: PathLike) -> Tuple[ComplexImageSeries, CoilSensitivities, MultiCoilKSpace]:
        directory = Path(directory)
        truth_path = directory / DATASET_FILES['truth']
        truth = ArrayStore.load_image(truth_path) if truth_path.exists() else None
        s = ArrayStore.load_sensitivities(directory / DATASET_FILES['sensitivities'])
        y = ArrayStore.load_kspace(directory / DATASET_FILES['kspace'])
        return truth, s, y

    # --- imágenes de salida -------------------------------------------------

    @staticmethod
    def write_pgm(path: PathLike, image: np.ndarray) -> None:
        """
        Escribir una imagen en escala de grises de 16 bits (PGM binario P5)

        Args:
            path: Ruta de destino
            image: Valores en [0, 1]; se recortan y se escalan a 0..65535
        """
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 2:
            raise InvalidArgumentError(f"Se esperaba una imagen 2-D, forma {image.shape}")
        height, width = image.shape
        levels = np.rint(np.clip(image, 0.0, 1.0) * 65535.0).astype(">u2")
        header = f"P5\n{width} {height}\n65535\n".encode("ascii")
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(header + levels.tobytes(order="C"))
        except OSError as e:
            raise StorageError(f"No se puede escribir {path}: {e}") from e

    @staticmethod
    def read_pgm(path: PathLike) -> np.ndarray:
        """Leer un PGM P5 de 16 bits escrito por ``write_pgm`` (enteros 0..65535)"""
        raw = Path(path).read_bytes()
        parts = raw.split(b"\n", 3)
        if len(parts) < 4 or parts[0] != b"P5":
            raise FormatError(f"{path}: no es un PGM P5")
        width, height = (int(v) for v in parts[1].split())
        if int(parts[2]) != 65535:
            raise FormatError(f"{path}: solo se admiten PGM de 16 bits")
        levels = np.frombuffer(parts[3], dtype=">u2", count=width * height)
        return levels.reshape(height, width).astype(np.int64)

    @staticmethod
    def generate_data_hash(*arrays: np.ndarray) -> str:
        """Hash MD5 de uno o varios arrays para verificar integridad"""
        digest = hashlib.md5()
        for array in arrays:
            digest.update(ArrayStore.encode_array(np.asarray(array)))
        return digest.hexdigest()
