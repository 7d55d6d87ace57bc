# src/patching/block_matching.py

"""
Partición en parches clave, relleno por replicación y búsqueda de bloques
similares (block matching) sobre la imagen inicial de relleno con ceros.

El emparejamiento se hace una sola vez y el mapa resultante es inmutable.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.mri.types import ComplexImageSeries
from src.utils.data_io import ArrayStore
from src.utils.errors import FormatError, InvalidArgumentError

logger = logging.getLogger(__name__)

PATCH_MAP_FILE = "patch_origins.tenf"
PATCH_META_FILE = "patch_map.json"


@dataclass(frozen=True)
class PadRecord:
    """Relleno aplicado a la derecha/abajo para que nx, ny sean múltiplos de p"""
    nx: int
    ny: int
    pad_x: int
    pad_y: int


@dataclass(frozen=True)
class PatchIndexMap:
    """Orígenes (x0, y0) de los K parches de cada uno de los L grupos"""
    p: int
    pad: PadRecord
    padded_shape: Tuple[int, int]
    origins: np.ndarray  # (L, K, 2), enteros, solo lectura

    def __post_init__(self):
        origins = np.array(self.origins, dtype=np.int64)
        if origins.ndim != 3 or origins.shape[2] != 2:
            raise InvalidArgumentError(f"Orígenes con forma inválida {origins.shape}")
        nxp, nyp = self.padded_shape
        if origins.size and (origins.min() < 0 or origins[..., 0].max() > nxp - self.p
                             or origins[..., 1].max() > nyp - self.p):
            raise InvalidArgumentError("Hay orígenes de parche fuera de la imagen rellenada")
        origins.flags.writeable = False
        object.__setattr__(self, "origins", origins)

    @property
    def l_count(self) -> int:
        return self.origins.shape[0]

    @property
    def k(self) -> int:
        return self.origins.shape[1]

    def pixel_rows(self) -> np.ndarray:
        """
        Índice plano de píxel (x * nyp + y) de cada elemento de parche, en
        orden (L, K, p, p)
        """
        p = self.p
        nyp = self.padded_shape[1]
        offsets = np.arange(p)
        xs = self.origins[:, :, 0][:, :, None, None] + offsets[None, None, :, None]
        ys = self.origins[:, :, 1][:, :, None, None] + offsets[None, None, None, :]
        return (xs * nyp + ys).reshape(-1)

    def contribution_count(self) -> np.ndarray:
        """Número de parches que cubren cada píxel (nxp, nyp)"""
        nxp, nyp = self.padded_shape
        counts = np.bincount(self.pixel_rows(), minlength=nxp * nyp)
        return counts.reshape(nxp, nyp).astype(np.float64)

    def save(self, directory) -> None:
        """Guardar el mapa en el directorio de la ejecución"""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ArrayStore.save_array(directory / PATCH_MAP_FILE, self.origins)
        meta = {'p': self.p, 'nx': self.pad.nx, 'ny': self.pad.ny,
                'pad_x': self.pad.pad_x, 'pad_y': self.pad.pad_y,
                'padded_shape': list(self.padded_shape)}
        with open(directory / PATCH_META_FILE, 'w') as f:
            json.dump(meta, f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, directory) -> "PatchIndexMap":
        directory = Path(directory)
        with open(directory / PATCH_META_FILE, 'r') as f:
            meta = json.load(f)
        try:
            pad = PadRecord(meta['nx'], meta['ny'], meta['pad_x'], meta['pad_y'])
            padded_shape = tuple(int(n) for n in meta['padded_shape'])
            p = int(meta['p'])
        except KeyError as e:
            raise FormatError(f"Falta la clave {e} en {PATCH_META_FILE}") from e
        origins = ArrayStore.load_array(directory / PATCH_MAP_FILE)
        return cls(p, pad, padded_shape, origins)


def pad_replicate(x: ComplexImageSeries, p: int) -> Tuple[ComplexImageSeries, PadRecord]:
    """
    Rellenar por replicación del borde (derecha y abajo) hasta múltiplos de p

    Returns:
        Tuple: serie rellenada y el registro del relleno
    """
    if p < 1:
        raise InvalidArgumentError(f"Tamaño de parche inválido: {p}")
    nx, ny, _ = x.shape
    pad_x = (-nx) % p
    pad_y = (-ny) % p
    padded = np.pad(x.data, ((0, pad_x), (0, pad_y), (0, 0), (0, 0)), mode='edge')
    return ComplexImageSeries(padded), PadRecord(nx, ny, pad_x, pad_y)


def crop_padding(x: np.ndarray, pad: PadRecord) -> np.ndarray:
    """Recortar el relleno: inversa de ``pad_replicate`` en la región original"""
    return np.ascontiguousarray(x[:pad.nx, :pad.ny])


def min_candidate_count(padded_shape: Tuple[int, int], p: int, window: int) -> int:
    """Menor número de candidatos de búsqueda entre todos los parches clave"""
    nxp, nyp = padded_shape
    nox, noy = nxp - p + 1, nyp - p + 1
    smallest = None
    for x0 in range(0, nxp, p):
        cx = min(nox - 1, x0 + window) - max(0, x0 - window) + 1
        for y0 in range(0, nyp, p):
            cy = min(noy - 1, y0 + window) - max(0, y0 - window) + 1
            smallest = cx * cy if smallest is None else min(smallest, cx * cy)
    return int(smallest)


def block_match(x_init: ComplexImageSeries, p: int, k: int, window: int,
                pad: PadRecord = None) -> PatchIndexMap:
    """
    Seleccionar los K parches más parecidos a cada parche clave

    Los candidatos son todos los orígenes enteros a distancia de Chebyshev
    <= ``window`` del origen clave (paso 1, recortados al borde). La
    distancia es la suma de diferencias al cuadrado sobre (p, p, nt, 2).
    El propio parche clave va siempre primero; el resto son las K-1
    distancias menores, con empates resueltos por orden de fila.

    Args:
        x_init: Serie ya rellenada (extensiones múltiplo de p)
        p: Tamaño de parche
        k: Parches por grupo (incluye el parche clave)
        window: Radio de búsqueda
        pad: Registro de relleno (por defecto, sin relleno)

    Raises:
        InvalidArgumentError: si k excede el número de candidatos o la serie no está rellenada
    """
    if k < 1 or window < 0 or p < 1:
        raise InvalidArgumentError(f"Parámetros de búsqueda inválidos: p={p}, k={k}, window={window}")
    data = x_init.data
    nxp, nyp = data.shape[:2]
    if nxp % p or nyp % p:
        raise InvalidArgumentError(f"La serie {data.shape[:2]} no está rellenada a múltiplos de {p}")
    if pad is None:
        pad = PadRecord(nxp, nyp, 0, 0)
    available = min_candidate_count((nxp, nyp), p, window)
    if k > available:
        raise InvalidArgumentError(f"K={k} excede los {available} candidatos disponibles")

    # (nox, noy, D): todos los parches posibles aplanados
    windows = sliding_window_view(data, (p, p), axis=(0, 1))
    nox, noy = windows.shape[:2]
    features = windows.reshape(nox, noy, -1)

    keys = [(x0, y0) for x0 in range(0, nxp, p) for y0 in range(0, nyp, p)]
    origins = np.zeros((len(keys), k, 2), dtype=np.int64)
    for l, (x0, y0) in enumerate(keys):
        x_lo, x_hi = max(0, x0 - window), min(nox - 1, x0 + window)
        y_lo, y_hi = max(0, y0 - window), min(noy - 1, y0 + window)
        candidates = features[x_lo:x_hi + 1, y_lo:y_hi + 1]
        distances = ((candidates - features[x0, y0]) ** 2).sum(axis=-1).ravel()
        gx, gy = np.meshgrid(np.arange(x_lo, x_hi + 1), np.arange(y_lo, y_hi + 1), indexing='ij')
        coords = np.stack([gx.ravel(), gy.ravel()], axis=1)
        is_key = (coords[:, 0] == x0) & (coords[:, 1] == y0)
        rest = np.flatnonzero(~is_key)
        ranked = rest[np.argsort(distances[rest], kind='stable')[:k - 1]]
        origins[l, 0] = (x0, y0)
        origins[l, 1:] = coords[ranked]

    logger.info(f"Block matching: {len(keys)} grupos de K={k} parches {p}x{p} (ventana {window})")
    return PatchIndexMap(p, pad, (nxp, nyp), origins)
