# src/utils/config.py

"""
Configuración de entrenamiento y del fantoma sintético.

Los ficheros de configuración son texto plano ``clave = valor`` (con
comentarios ``#``) leídos con ``python-dotenv``; las claves coinciden con
los campos de los dataclasses.
"""

import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Tuple, Union

from dotenv import dotenv_values

from src.utils.errors import InvalidArgumentError, StorageError

logger = logging.getLogger(__name__)

DEFAULT_RANKS = (2, 2, 16, 2, 5)
DESK_SCALE_ITERATIONS = 3000
DESK_SCALE_LR_DECAY_EVERY = 1500
LOSS_VARIANTS = ("full", "tv-only", "lr-only", "dc-only")
MASK_KINDS = ("variable-density", "pseudo-radial", "pseudo-spiral")
MODEL_MODES = ("patch", "global")
DECAY_TARGETS = ("networks", "cores", "both")
# no afectan al resultado numérico
RUNTIME_FIELDS = ("output_dir", "progress")
_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _coerce(name: str, raw: str, default):
    """Convertir un valor de texto al tipo del valor por defecto del campo"""
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            items = [item.strip() for item in text.split(",") if item.strip()]
            kind = type(default[0]) if default else float
            return tuple(kind(item) for item in items)
        return text
    except ValueError as e:
        raise InvalidArgumentError(f"Valor inválido para '{name}': {raw!r}") from e


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _read_pairs(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise StorageError(f"No existe el fichero de configuración {path}")
    values = dotenv_values(path)
    return {key: ("" if value is None else value) for key, value in values.items()}


@dataclass(frozen=True)
class TrainConfig:
    """Hiperparámetros de una reconstrucción (valores por defecto del protocolo de referencia)"""
    # datos y máscara
    nx: int = 64
    ny: int = 64
    nt: int = 8
    acceleration: float = 8.0
    mask_kind: str = "variable-density"
    mask_seed: int = 0
    center_lines: int = 4
    # modelo
    model_mode: str = "patch"
    ranks: Tuple[int, ...] = DEFAULT_RANKS
    patch_size: int = 2
    k_similar: int = 20
    search_window: int = 10
    hidden: int = 126
    omega: float = 30.0
    core_init_std: float = 0.1
    strict_init: bool = False
    # optimización
    base_lr: float = 1e-4
    lr_decay: float = 0.2
    lr_decay_every: int = 500
    weight_decay: float = 0.38
    weight_decay_target: str = "networks"
    decoupled_weight_decay: bool = True
    iterations: int = 12000
    group_batch_size: int = 0
    # pérdida
    loss_variant: str = "full"
    lambda_s: float = 1e-3
    lambda_l: float = 5e-6
    tv_on_magnitude: bool = False
    # ejecución
    metric_every: int = 250
    output_dir: str = "recon"
    seed: int = 0
    progress: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Comprobar la coherencia de los valores

        Raises:
            InvalidArgumentError: si algún valor está fuera de rango
        """
        problems: List[str] = []
        if min(self.nx, self.ny, self.nt) < 1:
            problems.append(f"extensiones no positivas ({self.nx}, {self.ny}, {self.nt})")
        if self.acceleration < 1:
            problems.append(f"acceleration={self.acceleration} < 1")
        if self.mask_kind not in MASK_KINDS:
            problems.append(f"mask_kind desconocido '{self.mask_kind}'")
        if self.model_mode not in MODEL_MODES:
            problems.append(f"model_mode desconocido '{self.model_mode}'")
        if self.loss_variant not in LOSS_VARIANTS:
            problems.append(f"loss_variant desconocida '{self.loss_variant}'")
        if self.weight_decay_target not in DECAY_TARGETS:
            problems.append(f"weight_decay_target desconocido '{self.weight_decay_target}'")
        if len(self.ranks) != 5 or min(self.ranks) < 1:
            problems.append(f"ranks debe tener 5 enteros positivos, recibido {self.ranks}")
        if self.patch_size < 1 or self.k_similar < 1 or self.search_window < 0:
            problems.append("patch_size, k_similar deben ser >= 1 y search_window >= 0")
        if self.hidden < 1 or self.omega <= 0:
            problems.append("hidden debe ser >= 1 y omega > 0")
        if self.iterations < 0 or self.metric_every < 1 or self.group_batch_size < 0:
            problems.append("iterations >= 0, metric_every >= 1, group_batch_size >= 0")
        if min(self.lambda_s, self.lambda_l, self.weight_decay, self.core_init_std) < 0:
            problems.append("lambda_s, lambda_l, weight_decay y core_init_std deben ser >= 0")
        if self.base_lr <= 0 or self.lr_decay <= 0 or self.lr_decay_every < 1:
            problems.append("planificación de la tasa de aprendizaje inválida")
        if problems:
            raise InvalidArgumentError("Configuración inválida: " + "; ".join(problems))

    @classmethod
    def from_dict(cls, values: Dict[str, str]) -> "TrainConfig":
        defaults = {f.name: f.default for f in fields(cls)}
        unknown = sorted(set(values) - set(defaults))
        if unknown:
            raise InvalidArgumentError(f"Claves de configuración desconocidas: {unknown}")
        kwargs = {name: _coerce(name, raw, defaults[name]) for name, raw in values.items()}
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        """
        Cargar una configuración desde un fichero ``clave = valor``

        Raises:
            InvalidArgumentError: claves desconocidas o valores no convertibles
            StorageError: si el fichero no existe
        """
        config = cls.from_dict(_read_pairs(path))
        logger.info(f"Configuración cargada de {path} (hash {config.config_hash()})")
        return config

    def canonical_text(self, include_runtime: bool = True) -> str:
        """Todos los campos ordenados, uno por línea"""
        pairs = sorted((f.name, getattr(self, f.name)) for f in fields(self)
                       if include_runtime or f.name not in RUNTIME_FIELDS)
        return "".join(f"{name} = {_format(value)}\n" for name, value in pairs)

    def to_file(self, path: Union[str, Path]) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.canonical_text())
        except OSError as e:
            raise StorageError(f"No se puede escribir {path}: {e}") from e

    def config_hash(self) -> str:
        """MD5 del texto canónico sin los campos de ejecución"""
        return hashlib.md5(self.canonical_text(include_runtime=False).encode()).hexdigest()

    def with_overrides(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self, include_runtime: bool = True) -> Dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)
                if include_runtime or f.name not in RUNTIME_FIELDS}


def desk_scale(config: TrainConfig) -> TrainConfig:
    """
    Misma configuración con el presupuesto de fantomas pequeños: 3000 pasos
    y la tasa de aprendizaje reducida cada 1500 en lugar de cada 500
    """
    return config.with_overrides(iterations=DESK_SCALE_ITERATIONS,
                                 lr_decay_every=DESK_SCALE_LR_DECAY_EVERY)


@dataclass(frozen=True)
class EllipseSpec:
    """Elipse del fantoma; el centro y los semiejes son fracciones del campo de visión"""
    cx: float
    cy: float
    ax: float
    ay: float
    intensity: float
    motion_amplitude: float = 0.0
    motion_phase: float = 0.0

    def __post_init__(self):
        if self.ax <= 0 or self.ay <= 0 or not 0 <= self.motion_amplitude < 1:
            raise InvalidArgumentError(f"Elipse inválida: {self}")


DEFAULT_ELLIPSES = (
    EllipseSpec(0.0, 0.0, 0.72, 0.85, 0.35),
    EllipseSpec(0.0, 0.0, 0.60, 0.72, -0.15),
    EllipseSpec(-0.12, 0.05, 0.20, 0.22, 0.55, 0.25, 0.0),
    EllipseSpec(0.18, -0.05, 0.13, 0.16, 0.35, 0.20, 1.5708),
    EllipseSpec(0.05, 0.38, 0.10, 0.06, 0.25, 0.0, 0.0),
)


@dataclass(frozen=True)
class PhantomSpec:
    """Descripción del fantoma dinámico sintético"""
    nx: int = 64
    ny: int = 64
    nt: int = 8
    n_coils: int = 4
    noise_std: float = 0.01
    seed: int = 7
    ellipses: Tuple[EllipseSpec, ...] = field(default=DEFAULT_ELLIPSES)

    def __post_init__(self):
        if min(self.nx, self.ny, self.nt, self.n_coils) < 1:
            raise InvalidArgumentError(f"Fantoma con extensiones inválidas: {self}")
        if self.noise_std < 0:
            raise InvalidArgumentError(f"noise_std negativo: {self.noise_std}")
        if not self.ellipses:
            raise InvalidArgumentError("El fantoma necesita al menos una elipse")

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PhantomSpec":
        """
        Cargar un fantoma; las elipses se declaran como
        ``ellipse_<i> = cx, cy, ax, ay, intensity, motion_amplitude, motion_phase``
        """
        pairs = _read_pairs(path)
        scalars = {f.name: f.default for f in fields(cls) if f.name != "ellipses"}
        kwargs = {}
        ellipses = []
        for key in sorted(pairs, key=_ellipse_order):
            raw = pairs[key]
            if key.startswith("ellipse_"):
                numbers = _coerce(key, raw, (0.0,))
                if not 5 <= len(numbers) <= 7:
                    raise InvalidArgumentError(f"'{key}' necesita entre 5 y 7 valores, recibido {len(numbers)}")
                ellipses.append(EllipseSpec(*numbers))
            elif key in scalars:
                kwargs[key] = _coerce(key, raw, scalars[key])
            else:
                raise InvalidArgumentError(f"Clave de fantoma desconocida: {key}")
        if ellipses:
            kwargs['ellipses'] = tuple(ellipses)
        return cls(**kwargs)

    def to_file(self, path: Union[str, Path]) -> None:
        lines = [f"{name} = {_format(getattr(self, name))}"
                 for name in ("nx", "ny", "nt", "n_coils", "noise_std", "seed")]
        for i, e in enumerate(self.ellipses):
            values = (e.cx, e.cy, e.ax, e.ay, e.intensity, e.motion_amplitude, e.motion_phase)
            lines.append(f"ellipse_{i} = {_format(values)}")
        Path(path).write_text("\n".join(lines) + "\n")


def _ellipse_order(key: str):
    if key.startswith("ellipse_"):
        suffix = key[len("ellipse_"):]
        return (1, int(suffix) if suffix.isdigit() else 0, key)
    return (0, 0, key)
