# src/autodiff/gradcheck.py

"""
Comprobación de gradientes por diferencias finitas centradas.
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from .node import Node, backward, leaf

logger = logging.getLogger(__name__)


def check_gradients(loss_fn: Callable[[Dict[str, Node]], Node], params: Dict[str, np.ndarray],
                    step: float = 1e-6, samples_per_param: Optional[int] = 20,
                    seed: int = 0, floor: float = 1e-8) -> float:
    """
    Comparar ``backward`` con diferencias finitas centradas

    Args:
        loss_fn: Construye la pérdida escalar a partir de hojas con nombre
        params: Valores de los parámetros (no se modifican)
        step: Paso de las diferencias finitas
        samples_per_param: Coordenadas muestreadas por parámetro (None = todas)
        seed: Semilla del submuestreo
        floor: Denominador mínimo del error relativo

    Returns:
        float: máximo error relativo ``|a - n| / max(|a|, |n|, floor)``
    """
    rng = np.random.default_rng(seed)
    values = {name: np.array(p, dtype=np.float64) for name, p in params.items()}

    def evaluate() -> float:
        leaves = {name: leaf(v, name=name) for name, v in values.items()}
        return float(loss_fn(leaves).value)

    leaves = {name: leaf(v, name=name) for name, v in values.items()}
    analytic = backward(loss_fn(leaves))

    worst = 0.0
    for name, value in values.items():
        flat = value.reshape(-1)
        if samples_per_param is None or samples_per_param >= flat.size:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=samples_per_param, replace=False))
        grad_flat = analytic[name].reshape(-1)
        for c in coords:
            original = flat[c]
            flat[c] = original + step
            plus = evaluate()
            flat[c] = original - step
            minus = evaluate()
            flat[c] = original
            numeric = (plus - minus) / (2.0 * step)
            a = grad_flat[c]
            error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            if error > worst:
                worst = error
                logger.debug(f"{name}[{c}]: analítico={a:.6e}, numérico={numeric:.6e}, error={error:.2e}")
    return worst
