# src/utils/performance.py

import time
import logging
from typing import Dict, List, Any, Callable, Optional, Sequence
import statistics

logger = logging.getLogger(__name__)


def summarize_times(times: Sequence[float]) -> Dict[str, float]:
    """Estadísticas (total, media, mínimo, máximo, desviación) de una serie de tiempos"""
    if not times:
        return {'count': 0, 'total_time': 0.0, 'avg_time': 0.0,
                'min_time': 0.0, 'max_time': 0.0, 'std_time': 0.0}
    return {
        'count': len(times),
        'total_time': sum(times),
        'avg_time': statistics.mean(times),
        'min_time': min(times),
        'max_time': max(times),
        'std_time': statistics.stdev(times) if len(times) > 1 else 0.0,
    }


class PerformanceBenchmark:
    """Clase para medir tiempos de entrenamiento e inferencia"""

    def __init__(self):
        self._samples: Dict[str, List[float]] = {}

    def record(self, name: str, seconds: float) -> None:
        """Añadir una medida suelta (p.ej. un paso de entrenamiento)"""
        self._samples.setdefault(name, []).append(float(seconds))

    def timed(self, name: str, func: Callable, *args, **kwargs) -> Any:
        """Ejecutar ``func`` registrando su duración bajo ``name``"""
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        self.record(name, time.perf_counter() - start_time)
        return result

    def stats(self, name: str) -> Dict[str, float]:
        return summarize_times(self._samples.get(name, []))


def plot_training_curves(checkpoints: List[Dict], output_file: str) -> Optional[str]:
    """Gráfica de los términos de pérdida y del PSNR por punto de control (requiere matplotlib)"""
    if not checkpoints:
        return None
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("Matplotlib no instalado. No se genera la gráfica de entrenamiento.")
        return None

    iterations = [c['iteration'] for c in checkpoints]
    has_metrics = 'psnr' in checkpoints[0]
    fig, axes = plt.subplots(1, 2 if has_metrics else 1, figsize=(12 if has_metrics else 6, 4.5))
    loss_ax = axes[0] if has_metrics else axes

    for term in ('total', 'dc', 'tv', 'lr'):
        values = [c['loss'][term] for c in checkpoints if term in c['loss']]
        if len(values) == len(iterations) and any(v > 0 for v in values):
            loss_ax.semilogy(iterations, values, label=term)
    loss_ax.set_title('Términos de la pérdida')
    loss_ax.set_xlabel('Iteración')
    loss_ax.legend()

    if has_metrics:
        axes[1].plot(iterations, [c['psnr'] for c in checkpoints], marker='o')
        axes[1].set_title('PSNR (dB)')
        axes[1].set_xlabel('Iteración')

    plt.tight_layout()
    plt.savefig(output_file, dpi=100)
    plt.close(fig)
    logger.info(f"Gráfico guardado como {output_file}")
    return output_file
