# src/harness/export.py

"""
Exportación de vistas de una reconstrucción: fotogramas de magnitud,
perfiles x-t / y-t por el centro de la imagen y mapas de error, como PGM de
16 bits normalizados al máximo de la referencia, el espectro de valores
singulares de la matriz de Casorati y una tabla CSV de métricas.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.mri.metrics import evaluate_all, frame_metrics
from src.mri.operators import casorati
from src.mri.types import ComplexImageSeries
from src.utils.data_io import ArrayStore
from src.utils.errors import InvalidArgumentError, StorageError

logger = logging.getLogger(__name__)


def profile_views(magnitude: np.ndarray) -> Dict[str, np.ndarray]:
    """Perfiles temporales por la fila y la columna centrales: x-t (nx, nt) e y-t (ny, nt)"""
    nx, ny, _ = magnitude.shape
    return {'x_t': magnitude[:, ny // 2, :], 'y_t': magnitude[nx // 2, :, :]}


def casorati_spectrum(x: ComplexImageSeries) -> pd.DataFrame:
    """Valores singulares de la matriz de Casorati (píxeles x fotogramas), en bruto y relativos al mayor"""
    sigma = np.linalg.svd(casorati(x), compute_uv=False)
    relative = sigma / sigma[0] if sigma[0] > 0 else np.zeros_like(sigma)
    return pd.DataFrame({'index': np.arange(sigma.size), 'sigma': sigma, 'relative': relative})


def export_views(x: ComplexImageSeries, directory, reference: Optional[ComplexImageSeries] = None,
                 prefix: str = "recon") -> List[str]:
    """
    Escribir las vistas de ``x`` en ``directory``

    Args:
        x: Serie a exportar
        directory: Directorio de salida (se crea si no existe)
        reference: Referencia opcional (normalización, mapas de error y métricas)
        prefix: Prefijo de los ficheros

    Returns:
        List: rutas escritas

    Raises:
        StorageError: si el directorio no se puede escribir
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"No se puede crear {directory}: {e}") from e

    magnitude = np.abs(x.to_complex())
    if reference is not None:
        if reference.shape != x.shape:
            raise InvalidArgumentError(f"Referencia {reference.shape} frente a {x.shape}")
        ref_magnitude = np.abs(reference.to_complex())
        peak = float(ref_magnitude.max())
    else:
        ref_magnitude = None
        peak = float(magnitude.max())
    scale = 1.0 / peak if peak > 0 else 1.0

    written = []

    def write(name: str, image: np.ndarray) -> None:
        path = directory / f"{prefix}_{name}.pgm"
        ArrayStore.write_pgm(path, image * scale)
        written.append(str(path))

    for t in range(magnitude.shape[2]):
        write(f"frame_{t:03d}", magnitude[:, :, t])
    for name, view in profile_views(magnitude).items():
        write(name, view)

    spectrum_path = directory / f"{prefix}_casorati_spectrum.csv"
    casorati_spectrum(x).to_csv(spectrum_path, index=False)
    written.append(str(spectrum_path))

    if ref_magnitude is not None:
        error = np.abs(magnitude - ref_magnitude)
        for t in range(error.shape[2]):
            write(f"error_{t:03d}", error[:, :, t])
        rows = frame_metrics(x, reference)
        overall = evaluate_all(x, reference)
        overall['frame'] = 'all'
        rows.append(overall)
        table = pd.DataFrame(rows, columns=['frame', 'psnr', 'ssim', 'rmse'])
        csv_path = directory / f"{prefix}_metrics.csv"
        table.to_csv(csv_path, index=False)
        written.append(str(csv_path))

    logger.info(f"Exportadas {len(written)} vistas a {directory}")
    return written
