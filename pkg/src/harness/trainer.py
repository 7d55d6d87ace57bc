# src/harness/trainer.py

"""
Bucle de reconstrucción no supervisada: imagen de relleno con ceros,
block matching, inicialización del modelo, optimización de la pérdida
compuesta, sustitución final del k-espacio y generación del informe.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.autodiff.node import backward
from src.autodiff.optim import AdamOptimizer, LrSchedule
from src.losses.objective import LossWeights, composite_loss, kspace_replacement, loss_values
from src.mri.metrics import evaluate_all
from src.mri.operators import adjoint_encode
from src.mri.types import CoilSensitivities, ComplexImageSeries, MultiCoilKSpace, SamplingMask
from src.patching.block_matching import block_match, min_candidate_count, pad_replicate
from src.tenf.checkpoint import save_checkpoint
from src.tenf.model import (
    CORE,
    TenfModel,
    clip_ranks,
    evaluate_global,
    image_node,
    init_global_model,
    init_model,
    reconstruct_image,
)
from src.utils.config import TrainConfig
from src.utils.data_io import ArrayStore
from src.utils.errors import InvalidArgumentError, StorageError, TrainingError
from src.utils.performance import PerformanceBenchmark, plot_training_curves

logger = logging.getLogger(__name__)

STEP_TIMER = "training_step"
INFERENCE_TIMER = "inference"


@dataclass
class RunReport:
    """Resultado reproducible de una reconstrucción (sin tiempos ni fechas)"""
    config: Dict[str, object]
    config_hash: str
    data_hashes: Dict[str, str]
    model: Dict[str, object]
    checkpoints: List[Dict[str, object]] = field(default_factory=list)
    window_min_loss: List[float] = field(default_factory=list)
    zero_filled: Dict[str, float] = field(default_factory=dict)
    final_before_replacement: Dict[str, float] = field(default_factory=dict)
    final_after_replacement: Dict[str, float] = field(default_factory=dict)
    dc_before_replacement: float = 0.0
    dc_after_replacement: float = 0.0
    timing: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        """Contenido de ``report.json`` (la medida de tiempos va aparte)"""
        data = asdict(self)
        data.pop('timing')
        return data


def _check_consistency(config: TrainConfig, y: MultiCoilKSpace, s: CoilSensitivities,
                       m: SamplingMask) -> None:
    nx, ny, nt, ns = y.shape
    if (config.nx, config.ny, config.nt) != (nx, ny, nt):
        raise InvalidArgumentError(
            f"La configuración declara {(config.nx, config.ny, config.nt)} y los datos son {(nx, ny, nt)}")
    if m.pattern.shape != (nx, ny, nt):
        raise InvalidArgumentError(f"Máscara {m.pattern.shape} frente a datos {(nx, ny, nt)}")
    if s.maps.shape[:3] != (nx, ny, ns):
        raise InvalidArgumentError(f"Sensibilidades {s.maps.shape[:3]} frente a datos {(nx, ny, ns)}")


def decay_names(model: TenfModel, target: str) -> List[str]:
    """Parámetros a los que se aplica el decaimiento de pesos"""
    if target == "cores":
        return model.core_names()
    if target == "networks":
        return model.network_names()
    return model.core_names() + model.network_names()


def build_model(config: TrainConfig, x_init: ComplexImageSeries) -> TenfModel:
    """
    Block matching sobre la imagen inicial e inicialización del modelo

    K y los rangos se recortan a lo disponible, registrando cada recorte.
    """
    nx, ny, nt = x_init.shape
    if config.model_mode == "global":
        return init_global_model((nx, ny, nt), None, config.seed, config.hidden, config.omega,
                                 config.core_init_std, config.strict_init)

    p = config.patch_size
    padded, pad = pad_replicate(x_init, p)
    available = min_candidate_count(padded.shape[:2], p, config.search_window)
    k = config.k_similar
    if k > available:
        logger.warning(f"K={k} recortado a los {available} candidatos disponibles")
        k = available
    index_map = block_match(padded, p, k, config.search_window, pad)
    ranks = clip_ranks(config.ranks, (p, p, nt, 2, k))
    return init_model(index_map, nt, ranks, config.seed, config.hidden, config.omega,
                      config.core_init_std, config.strict_init)


def _group_gradient_mask(rng: np.random.Generator, l_count: int, batch: int) -> np.ndarray:
    selected = np.zeros(l_count, dtype=bool)
    selected[rng.choice(l_count, size=min(batch, l_count), replace=False)] = True
    return selected


def _snapshot(model: TenfModel, output_dir: Optional[Path]) -> Optional[str]:
    if output_dir is None:
        return None
    target = output_dir / "failure_snapshot"
    try:
        save_checkpoint(model, target)
    except (StorageError, OSError) as e:
        logger.error(f"No se pudo guardar la instantánea de diagnóstico: {e}")
        return None
    return str(target)


def run_reconstruction(config: TrainConfig, y: MultiCoilKSpace, s: CoilSensitivities,
                       m: SamplingMask, truth: Optional[ComplexImageSeries] = None,
                       output_dir: Optional[str] = None) -> Tuple[ComplexImageSeries, RunReport]:
    """
    Reconstrucción completa

    Args:
        config: Hiperparámetros
        y: k-espacio adquirido (se enmascara con ``m``)
        s: Sensibilidades de bobina
        m: Máscara de submuestreo
        truth: Verdad opcional para las métricas
        output_dir: Directorio de resultados (None = no escribir nada)

    Returns:
        Tuple: (reconstrucción final tras la sustitución del k-espacio, informe)

    Raises:
        InvalidArgumentError: configuración inconsistente con los datos
        TrainingError: pérdida o gradiente no finitos
    """
    _check_consistency(config, y, s, m)
    out = Path(output_dir) if output_dir else None
    y = MultiCoilKSpace(y.data * m.pattern[..., None, None])
    weights = LossWeights(config.lambda_s, config.lambda_l, config.loss_variant)
    benchmark = PerformanceBenchmark()

    x_init = adjoint_encode(y, s, m)
    model = build_model(config, x_init)
    if out is not None and model.index_map is not None:
        model.index_map.save(out)

    lambda_s, lambda_l = weights.effective()
    report = RunReport(
        config=config.to_dict(include_runtime=False),
        config_hash=config.config_hash(),
        data_hashes={
            'mask': ArrayStore.generate_data_hash(m.pattern),
            'x_init': ArrayStore.generate_data_hash(x_init.data),
            'kspace': ArrayStore.generate_data_hash(y.data),
        },
        model={
            'mode': model.mode,
            'ranks': list(model.ranks),
            'extents': list(model.extents),
            'groups': model.index_map.l_count if model.index_map is not None else 1,
            'parameter_counts': model.parameter_counts(),
            'lambda_s': lambda_s,
            'lambda_l': lambda_l,
        },
    )
    if truth is not None:
        report.zero_filled = evaluate_all(x_init, truth)
        logger.info(f"Relleno con ceros: PSNR {report.zero_filled['psnr']:.2f} dB, "
                    f"SSIM {report.zero_filled['ssim']:.4f}")

    optimizer = AdamOptimizer(
        LrSchedule(config.base_lr, config.lr_decay, config.lr_decay_every),
        config.weight_decay, decay_names(model, config.weight_decay_target),
        config.decoupled_weight_decay)
    batch_rng = np.random.default_rng(config.seed + 1)
    use_batches = config.group_batch_size > 0 and model.index_map is not None
    window_min = float("inf")

    progress = tqdm(range(config.iterations), desc=f"TenF {model.mode}/{config.loss_variant}",
                    disable=not config.progress)
    start_training = time.perf_counter()
    for step in progress:
        step_start = time.perf_counter()
        leaves = model.leaves()
        x_node = image_node(model, leaves)
        terms = composite_loss(x_node, y, s, m, weights, config.tv_on_magnitude)
        loss = float(terms['total'].value)
        if not np.isfinite(loss):
            path = _snapshot(model, out)
            logger.error(f"Pérdida no finita en la iteración {step}; instantánea en {path}")
            raise TrainingError(f"Pérdida no finita en la iteración {step}", parameter="loss",
                                snapshot_path=path)
        grads = backward(terms['total'])
        if use_batches:
            selected = _group_gradient_mask(batch_rng, model.index_map.l_count, config.group_batch_size)
            grads[CORE][~selected] = 0.0
        try:
            lr = optimizer.step(model.params, grads)
        except TrainingError as e:
            e.snapshot_path = _snapshot(model, out)
            logger.error(f"Iteración {step}: {e} (instantánea en {e.snapshot_path})")
            raise
        benchmark.record(STEP_TIMER, time.perf_counter() - step_start)

        window_min = min(window_min, loss)
        if (step + 1) % config.lr_decay_every == 0 or step + 1 == config.iterations:
            report.window_min_loss.append(window_min)
            window_min = float("inf")

        if (step + 1) % config.metric_every == 0 or step + 1 == config.iterations:
            entry = {'iteration': step + 1, 'lr': lr,
                     'loss': {name: float(node.value) for name, node in terms.items()}}
            if truth is not None:
                entry.update(evaluate_all(ComplexImageSeries(x_node.value), truth))
                progress.set_postfix(loss=f"{loss:.4e}", psnr=f"{entry['psnr']:.2f}")
            report.checkpoints.append(entry)
            logger.info(f"Iteración {step + 1}: pérdida {loss:.6e}, lr {lr:.2e}"
                        + (f", PSNR {entry['psnr']:.2f} dB" if truth is not None else ""))
    training_time = time.perf_counter() - start_training

    if config.iterations == 0:
        x_model = x_init
    else:
        infer = evaluate_global if model.index_map is None else reconstruct_image
        x_model = benchmark.timed(INFERENCE_TIMER, infer, model)
    x_final = kspace_replacement(x_model, y, s, m)

    before = loss_values(x_model, y, s, m, weights, config.tv_on_magnitude)
    after = loss_values(x_final, y, s, m, weights, config.tv_on_magnitude)
    report.dc_before_replacement = before['dc']
    report.dc_after_replacement = after['dc']
    if truth is not None:
        report.final_before_replacement = evaluate_all(x_model, truth)
        report.final_after_replacement = evaluate_all(x_final, truth)
        logger.info(f"Final: PSNR {report.final_after_replacement['psnr']:.2f} dB "
                    f"(antes de la sustitución {report.final_before_replacement['psnr']:.2f} dB)")

    report.timing = {
        'training_time': training_time,
        'per_step': benchmark.stats(STEP_TIMER),
        'inference': benchmark.stats(INFERENCE_TIMER),
        'parameter_counts': model.parameter_counts(),
    }

    if out is not None:
        write_run_outputs(out, config, report, model, x_init, x_final)
    return x_final, report


def write_run_outputs(out: Path, config: TrainConfig, report: RunReport, model: TenfModel,
                      x_init: ComplexImageSeries, x_final: ComplexImageSeries) -> Path:
    """Escribir config, informe, tiempos, resumen, imágenes y punto de control"""
    logger.info("Generando reporte completo...")
    out.mkdir(parents=True, exist_ok=True)
    config.to_file(out / "config.cfg")
    report_path = out / "report.json"
    with open(report_path, 'w') as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    with open(out / "timing.json", 'w') as f:
        json.dump(report.timing, f, indent=2, default=str)
    with open(out / "summary.txt", 'w') as f:
        f.write(generate_summary(report))
    ArrayStore.save_image(out / "reconstruction.tenf", x_final)
    ArrayStore.save_image(out / "zero_filled.tenf", x_init)
    save_checkpoint(model, out / "checkpoint")
    plot_training_curves(report.checkpoints, str(out / "training_curves.png"))
    logger.info(f"Reporte guardado en: {report_path}")
    return report_path


def _metric_line(label: str, metrics: Dict[str, float]) -> str:
    if not metrics:
        return f"- {label}: sin referencia"
    return (f"- {label}: PSNR {metrics['psnr']:.2f} dB, SSIM {metrics['ssim']:.4f}, "
            f"RMSE {metrics['rmse']:.5f}")


def generate_summary(report: RunReport) -> str:
    """Resumen ejecutivo de una reconstrucción"""
    config = report.config
    counts = report.model['parameter_counts']
    lines = [
        "=" * 60,
        "RECONSTRUCCIÓN TENF - RESUMEN",
        "=" * 60,
        f"Configuración: {report.config_hash}",
        f"Modelo: {report.model['mode']}, rangos {tuple(report.model['ranks'])}, "
        f"grupos {report.model['groups']}",
        f"Parámetros: {counts['total']} (núcleos {counts['cores']}, redes {counts['networks']})",
        f"Pérdida: {config['loss_variant']} (lambda_s={report.model['lambda_s']}, "
        f"lambda_l={report.model['lambda_l']})",
        f"Máscara: {config['mask_kind']}, R={config['acceleration']}",
        f"Iteraciones: {config['iterations']}",
        "",
        "RESULTADOS:",
        _metric_line("Relleno con ceros", report.zero_filled),
        _metric_line("Modelo", report.final_before_replacement),
        _metric_line("Tras sustituir k-espacio", report.final_after_replacement),
        f"- Consistencia de datos: {report.dc_before_replacement:.6e} -> {report.dc_after_replacement:.6e}",
        "=" * 60,
    ]
    return "\n".join(lines) + "\n"
