#!/usr/bin/env python3
# main.py - Script principal de la reconstrucción TenF

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# El número de hilos de BLAS debe fijarse antes de importar numpy
_THREADS = os.getenv('TENF_NUM_THREADS')
if _THREADS:
    for _var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS'):
        os.environ[_var] = _THREADS

from src.harness.ablation import run_ablation_suite, run_grid  # noqa: E402
from src.harness.export import export_views  # noqa: E402
from src.harness.phantom import generate_phantom  # noqa: E402
from src.harness.trainer import run_reconstruction  # noqa: E402
from src.mri.masks import make_mask  # noqa: E402
from src.mri.metrics import evaluate_all  # noqa: E402
from src.utils.config import PhantomSpec, TrainConfig, desk_scale  # noqa: E402
from src.utils.data_io import ArrayStore  # noqa: E402
from src.utils.errors import EXIT_OK, exit_code_for  # noqa: E402

LOG_DIR = os.getenv('TENF_LOG_DIR', 'logs')
RESULTS_DIR = os.getenv('TENF_RESULTS_DIR', 'results')

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False) -> None:
    """Configurar logging a fichero y consola"""
    Path(LOG_DIR).mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(f"{LOG_DIR}/tenf_recon_{datetime.now().strftime('%Y%b%d_%H%M').upper()}.log"),
            logging.StreamHandler()
        ]
    )


def _apply_flags(args, config: TrainConfig) -> TrainConfig:
    if getattr(args, 'desk', False):
        config = desk_scale(config)
    if getattr(args, 'quiet', False):
        config = config.with_overrides(progress=False)
    return config


def _load_config(args) -> TrainConfig:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    return _apply_flags(args, config)


def _mask_for(config: TrainConfig, mask_path):
    if mask_path:
        return ArrayStore.load_mask(mask_path)
    return make_mask(config.mask_kind, config.nx, config.ny, config.nt, config.acceleration,
                     config.mask_seed, config.center_lines)


def cmd_phantom(args) -> int:
    spec = PhantomSpec.from_file(args.spec) if args.spec else PhantomSpec()
    truth, s, y = generate_phantom(spec)
    out = Path(args.out)
    ArrayStore.save_dataset(out, truth, s, y)
    spec.to_file(out / "phantom.cfg")
    print(f"\nConjunto de datos generado en: {out}")
    return EXIT_OK


def cmd_mask(args) -> int:
    config = _load_config(args)
    mask = make_mask(args.kind or config.mask_kind, config.nx, config.ny, config.nt,
                     args.r if args.r is not None else config.acceleration,
                     config.mask_seed, config.center_lines)
    ArrayStore.save_mask(args.out, mask)
    print(f"\nMáscara {mask.kind} guardada en {args.out} (R conseguida {mask.achieved_acceleration:.2f})")
    print(f"Vista de la máscara: {Path(args.out).with_suffix('.pgm')}")
    return EXIT_OK


def cmd_recon(args) -> int:
    config = _load_config(args)
    truth, s, y = ArrayStore.load_dataset(args.data)
    mask = _mask_for(config, args.mask)
    out = args.out or str(Path(RESULTS_DIR) / config.output_dir)
    _, report = run_reconstruction(config, y, s, mask, truth, out)
    print(f"\nReporte generado en: {Path(out) / 'report.json'}")
    print((Path(out) / "summary.txt").read_text())
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _load_config(args)
    truth, s, y = ArrayStore.load_dataset(args.data)
    out = args.out or str(Path(RESULTS_DIR) / "ablation")
    _, table = run_ablation_suite(config, y, s, truth, args.accelerations, output_dir=out)
    print("\n" + "=" * 60)
    print("ESTUDIO DE ABLACIÓN")
    print("=" * 60)
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_grid(args) -> int:
    truth, s, y = ArrayStore.load_dataset(args.data)
    configs = [(Path(path).stem, _apply_flags(args, TrainConfig.from_file(path))) for path in args.configs]
    out = args.out or str(Path(RESULTS_DIR) / "grid")
    table = run_grid(configs, y, s, truth, out)
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_metrics(args) -> int:
    x = ArrayStore.load_image(args.image)
    reference = ArrayStore.load_image(args.reference)
    print(json.dumps(evaluate_all(x, reference), indent=2))
    return EXIT_OK


def cmd_export(args) -> int:
    x = ArrayStore.load_image(args.image)
    reference = ArrayStore.load_image(args.reference) if args.reference else None
    written = export_views(x, args.out, reference)
    print(f"\n{len(written)} ficheros escritos en {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Reconstrucción no supervisada de RM dinámica (TenF)')
    parser.add_argument('--verbose', action='store_true', help='Logging en nivel DEBUG')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('phantom', help='Generar un conjunto de datos sintético')
    p.add_argument('--spec', help='Fichero de descripción del fantoma')
    p.add_argument('--out', required=True, help='Directorio de salida')
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser('mask', help='Generar una máscara de submuestreo')
    p.add_argument('--config', help='Configuración (extensiones, tipo, semilla)')
    p.add_argument('--kind', choices=['variable-density', 'pseudo-radial', 'pseudo-spiral'])
    p.add_argument('--r', type=float, help='Factor de aceleración')
    p.add_argument('--out', required=True, help='Fichero de salida')
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser('recon', help='Reconstruir un conjunto de datos')
    p.add_argument('--config', help='Fichero de configuración')
    p.add_argument('--data', required=True, help='Directorio del conjunto de datos')
    p.add_argument('--mask', help='Fichero de máscara (por defecto se genera desde la configuración)')
    p.add_argument('--out', help='Directorio de resultados')
    p.add_argument('--quiet', action='store_true', help='Sin barra de progreso')
    p.add_argument('--desk', action='store_true',
                   help='Escala de escritorio: 3000 pasos, tasa reducida cada 1500')
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser('ablate', help='Estudio de ablación completo')
    p.add_argument('--config', help='Fichero de configuración base')
    p.add_argument('--data', required=True, help='Directorio del conjunto de datos')
    p.add_argument('--accelerations', type=float, nargs='+', help='Factores de aceleración')
    p.add_argument('--out', help='Directorio de resultados')
    p.add_argument('--quiet', action='store_true', help='Sin barra de progreso')
    p.add_argument('--desk', action='store_true',
                   help='Escala de escritorio: 3000 pasos, tasa reducida cada 1500')
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser('grid', help='Ejecutar una lista de configuraciones')
    p.add_argument('configs', nargs='+', help='Ficheros de configuración')
    p.add_argument('--data', required=True, help='Directorio del conjunto de datos')
    p.add_argument('--out', help='Directorio de resultados')
    p.add_argument('--quiet', action='store_true', help='Sin barra de progreso')
    p.add_argument('--desk', action='store_true',
                   help='Escala de escritorio: 3000 pasos, tasa reducida cada 1500')
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser('metrics', help='Comparar dos imágenes')
    p.add_argument('image')
    p.add_argument('reference')
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser('export', help='Exportar vistas de una imagen')
    p.add_argument('image')
    p.add_argument('--reference')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    """Función principal"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        code = args.func(args)
        logger.info("Ejecución completada")
        return code
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            logger.exception(f"Error inesperado durante la ejecución: {e}")
        else:
            logger.error(f"Error durante la ejecución ({type(e).__name__}): {e}")
        return code


if __name__ == "__main__":
    sys.exit(main())
