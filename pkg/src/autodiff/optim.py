# src/autodiff/optim.py

"""
Optimizador Adam con decaimiento de pesos y la planificación escalonada de
la tasa de aprendizaje (x0.2 cada 500 iteraciones por defecto).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from src.utils.errors import InvalidArgumentError, TrainingError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LrSchedule:
    """Tasa de aprendizaje escalonada ``base_lr * decay_factor^(step // decay_every)``"""
    base_lr: float = 1e-4
    decay_factor: float = 0.2
    decay_every: int = 500

    def __post_init__(self):
        if self.base_lr <= 0 or self.decay_factor <= 0 or self.decay_every < 1:
            raise InvalidArgumentError(f"Planificación de LR inválida: {self}")


def lr_at(schedule: LrSchedule, step: int) -> float:
    """Tasa de aprendizaje en la iteración ``step`` (desde 0)"""
    if step < 0:
        raise InvalidArgumentError(f"Iteración negativa: {step}")
    return schedule.base_lr * schedule.decay_factor ** (step // schedule.decay_every)


@dataclass
class AdamState:
    """Momentos de Adam por parámetro"""
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState,
              lr: float, weight_decay: float = 0.0, decay_names: Optional[Iterable[str]] = None,
              decoupled: bool = True) -> AdamState:
    """
    Un paso de Adam con corrección de sesgo, actualizando ``params`` en sitio

    Args:
        params: Parámetros por nombre (se modifican en sitio)
        grads: Gradientes por nombre
        state: Estado de Adam (se actualiza en sitio y se devuelve)
        lr: Tasa de aprendizaje (> 0)
        weight_decay: Coeficiente de decaimiento de pesos
        decay_names: Parámetros a los que se aplica el decaimiento (None = todos)
        decoupled: Decaimiento desacoplado ``p <- p - lr*wd*p`` antes del
                   incremento de Adam; si es False se suma ``wd*p`` al gradiente

    Raises:
        TrainingError: si algún gradiente no es finito
    """
    if lr <= 0:
        raise InvalidArgumentError(f"La tasa de aprendizaje debe ser positiva: {lr}")
    decay_set = set(params) if decay_names is None else set(decay_names)

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"Gradiente no finito en el parámetro '{name}'", parameter=name)

    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step

    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise InvalidArgumentError(f"Gradiente {g.shape} para el parámetro '{name}' {p.shape}")
        decays = weight_decay > 0 and name in decay_set
        if decays and not decoupled:
            g = g + weight_decay * p
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        if decays and decoupled:
            p -= lr * weight_decay * p
        p -= lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return state


class AdamOptimizer:
    """Envoltorio con estado de Adam + planificación de la tasa de aprendizaje"""

    def __init__(self, schedule: LrSchedule, weight_decay: float = 0.0,
                 decay_names: Optional[Iterable[str]] = None, decoupled: bool = True):
        self.schedule = schedule
        self.weight_decay = weight_decay
        self.decay_names = None if decay_names is None else list(decay_names)
        self.decoupled = decoupled
        self.state = AdamState()

    @property
    def current_lr(self) -> float:
        return lr_at(self.schedule, self.state.step)

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> float:
        """Aplicar un paso y devolver la tasa usada"""
        lr = self.current_lr
        adam_step(params, grads, self.state, lr, self.weight_decay, self.decay_names, self.decoupled)
        return lr
