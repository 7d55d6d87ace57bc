# src/harness/ablation.py

"""
Estudios de ablación y ejecución secuencial de una rejilla de
configuraciones sobre un mismo conjunto de datos.

Ablación: {full, tv-only, lr-only, dc-only} x {patch, global} para cada
factor de aceleración, con la misma máscara y la misma imagen inicial en
todas las ejecuciones de un mismo R.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.mri.masks import make_mask
from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace
from src.utils.config import LOSS_VARIANTS, MODEL_MODES, TrainConfig

from .trainer import RunReport, run_reconstruction

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ['acceleration', 'model', 'variant', 'tv', 'low_rank', 'psnr', 'ssim', 'rmse',
                      'zero_filled_psnr', 'dc_after', 'mask_hash', 'x_init_hash']


def _row(report: RunReport, acceleration: float, model: str, variant: str) -> Dict[str, object]:
    final = report.final_after_replacement
    return {
        'acceleration': acceleration,
        'model': model,
        'variant': variant,
        'tv': report.model['lambda_s'] > 0,
        'low_rank': report.model['lambda_l'] > 0,
        'psnr': final.get('psnr'),
        'ssim': final.get('ssim'),
        'rmse': final.get('rmse'),
        'zero_filled_psnr': report.zero_filled.get('psnr'),
        'dc_after': report.dc_after_replacement,
        'mask_hash': report.data_hashes['mask'],
        'x_init_hash': report.data_hashes['x_init'],
    }


def _write_table(table: pd.DataFrame, directory: Path, stem: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    table.to_csv(directory / f"{stem}.csv", index=False)
    with open(directory / f"{stem}.txt", 'w') as f:
        f.write(table.to_string(index=False) + "\n")
    logger.info(f"Tabla comparativa guardada en {directory / (stem + '.csv')}")


def run_ablation_suite(config: TrainConfig, y: MultiCoilKSpace, s: CoilSensitivities,
                       truth: Optional[ComplexImageSeries] = None,
                       accelerations: Optional[Sequence[float]] = None,
                       variants: Sequence[str] = LOSS_VARIANTS,
                       modes: Sequence[str] = MODEL_MODES,
                       output_dir: Optional[str] = None) -> Tuple[Dict[str, RunReport], pd.DataFrame]:
    """
    Ejecutar todas las combinaciones de variante de pérdida y de modelo

    Args:
        config: Configuración base
        y: k-espacio completamente muestreado (cada R genera su máscara)
        s: Sensibilidades
        truth: Verdad opcional para las métricas
        accelerations: Factores de aceleración (por defecto el de la configuración)
        output_dir: Directorio raíz (una subcarpeta por ejecución)

    Returns:
        Tuple: informes por ejecución y tabla comparativa
    """
    accelerations = [config.acceleration] if not accelerations else list(accelerations)
    root = Path(output_dir) if output_dir else None
    reports: Dict[str, RunReport] = {}
    rows: List[Dict[str, object]] = []

    for r in accelerations:
        mask = make_mask(config.mask_kind, config.nx, config.ny, config.nt, r,
                         config.mask_seed, config.center_lines)
        for mode in modes:
            for variant in variants:
                name = f"R{r:g}_{mode}_{variant}"
                logger.info("=" * 60)
                logger.info(f"ABLACIÓN {name}")
                logger.info("=" * 60)
                run_config = config.with_overrides(acceleration=float(r), model_mode=mode,
                                                   loss_variant=variant)
                run_dir = str(root / name) if root is not None else None
                _, report = run_reconstruction(run_config, y, s, mask, truth, run_dir)
                reports[name] = report
                rows.append(_row(report, float(r), mode, variant))

    table = pd.DataFrame(rows, columns=COMPARISON_COLUMNS)
    if root is not None:
        _write_table(table, root, "ablation")
    return reports, table


def run_grid(configs: Sequence[Tuple[str, TrainConfig]], y: MultiCoilKSpace, s: CoilSensitivities,
             truth: Optional[ComplexImageSeries] = None,
             output_dir: Optional[str] = None) -> pd.DataFrame:
    """
    Ejecutar secuencialmente una lista de configuraciones y ordenar por PSNR final

    Args:
        configs: Pares (nombre, configuración)
    """
    root = Path(output_dir) if output_dir else None
    rows = []
    for name, config in configs:
        logger.info(f"Rejilla: ejecutando {name} (hash {config.config_hash()})")
        mask = make_mask(config.mask_kind, config.nx, config.ny, config.nt, config.acceleration,
                         config.mask_seed, config.center_lines)
        run_dir = str(root / name) if root is not None else None
        _, report = run_reconstruction(config, y, s, mask, truth, run_dir)
        row = _row(report, config.acceleration, config.model_mode, config.loss_variant)
        row.update({'name': name, 'config_hash': report.config_hash})
        rows.append(row)

    table = pd.DataFrame(rows, columns=['name', 'config_hash'] + COMPARISON_COLUMNS)
    if truth is not None and not table.empty:
        table = table.sort_values('psnr', ascending=False, kind='mergesort').reset_index(drop=True)
    if root is not None:
        _write_table(table, root, "grid")
    return table
