# src/tenf/model.py

"""
Modelo de función tensorial: L tensores núcleo entrenables y una red de
factores con activación seno por modo, compartida por todos los grupos.

Cada grupo no local se evalúa como una reconstrucción de Tucker
``C_l x_0 U0 x_1 U1 ... x_4 U4`` donde ``U_i`` es la red del modo i evaluada
sobre la rejilla de coordenadas de ese modo. La variante global usa un único
núcleo de 4 modos sobre la imagen completa, sin parches.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.autodiff import ops
from src.autodiff.node import Node, constant, leaf
from src.mri.types import ComplexImageSeries
from src.ndtensor.tensor import tucker_reconstruct
from src.patching.block_matching import PatchIndexMap
from src.patching.operators import assemble_node
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

COORDINATE_CONVENTION = "linspace-[-1,1]/v1"
DEFAULT_HIDDEN = 126
DEFAULT_OMEGA = 30.0
DEFAULT_CORE_STD = 0.1
CORE = "core"

# rangos de referencia de la variante global para imágenes de 256 x 256
GLOBAL_REFERENCE_RANKS = (160, 160, 15, 2)
GLOBAL_REFERENCE_EXTENT = 256


def coordinates(n: int) -> np.ndarray:
    """n posiciones equiespaciadas en [-1, 1] (un único punto va a 0), forma (n, 1)"""
    if n < 1:
        raise InvalidArgumentError(f"Extensión de modo no positiva: {n}")
    if n == 1:
        return np.zeros((1, 1))
    return np.linspace(-1.0, 1.0, n).reshape(n, 1)


@dataclass(frozen=True)
class CoordinateGrid:
    """Posiciones de muestreo de cada modo"""
    positions: Tuple[np.ndarray, ...]

    @classmethod
    def for_extents(cls, extents: Sequence[int]) -> "CoordinateGrid":
        return cls(tuple(coordinates(int(n)) for n in extents))

    @property
    def extents(self) -> Tuple[int, ...]:
        return tuple(p.shape[0] for p in self.positions)


@dataclass(frozen=True)
class FactorNetwork:
    """
    MLP ``1 -> hidden -> rank`` con seno de frecuencia ``omega`` en la capa
    oculta; los parámetros viven en el diccionario del modelo con el prefijo
    ``net<i>.``
    """
    index: int
    rank: int
    hidden: int = DEFAULT_HIDDEN
    omega: float = DEFAULT_OMEGA

    @property
    def prefix(self) -> str:
        return f"net{self.index}"

    def names(self) -> Tuple[str, str, str, str]:
        p = self.prefix
        return (f"{p}.w1", f"{p}.b1", f"{p}.w2", f"{p}.b2")

    def bounds(self, strict_init: bool = False) -> Tuple[float, float]:
        """Cotas uniformes de la primera capa y de la capa de salida"""
        first = 1.0  # fan-in 1 en la primera capa
        later = math.sqrt(6.0) / self.hidden
        if not strict_init:
            later /= self.omega
        return first, later

    def init_params(self, rng: np.random.Generator,
                    strict_init: bool = False) -> Dict[str, np.ndarray]:
        first, later = self.bounds(strict_init)
        w1, b1, w2, b2 = self.names()
        return OrderedDict([
            (w1, rng.uniform(-first, first, size=(self.hidden, 1))),
            (b1, rng.uniform(-first, first, size=(self.hidden,))),
            (w2, rng.uniform(-later, later, size=(self.rank, self.hidden))),
            (b2, rng.uniform(-later, later, size=(self.rank,))),
        ])

    def forward(self, leaves: Dict[str, Node], coords: np.ndarray) -> Node:
        """Matriz de factores (n, rank) para las coordenadas (n, 1)"""
        w1, b1, w2, b2 = (leaves[name] for name in self.names())
        hidden = ops.sine(ops.linear(coords, w1, b1), self.omega)
        return ops.linear(hidden, w2, b2)

    def forward_array(self, params: Dict[str, np.ndarray], coords: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = (params[name] for name in self.names())
        return np.sin(self.omega * (coords @ w1.T + b1)) @ w2.T + b2


class TenfModel:
    """
    Parámetros del modelo (núcleos y redes) más la geometría que los usa

    Args:
        extents: Extensión de cada modo del tensor representado
                 ((p, p, nt, 2, K) por parche o (nx, ny, nt, 2) global)
        ranks: Rango de Tucker por modo
        params: Diccionario ordenado nombre -> array
        networks: Una red por modo
        index_map: Mapa de parches (None en la variante global)
    """

    def __init__(self, extents: Sequence[int], ranks: Sequence[int], params: Dict[str, np.ndarray],
                 networks: Sequence[FactorNetwork], index_map: Optional[PatchIndexMap] = None,
                 image_shape: Optional[Tuple[int, int, int]] = None):
        self.extents = tuple(int(n) for n in extents)
        self.ranks = tuple(int(r) for r in ranks)
        self.params = params
        self.networks = tuple(networks)
        self.index_map = index_map
        self.image_shape = image_shape
        self.grid = CoordinateGrid.for_extents(self.extents)

    @property
    def mode(self) -> str:
        return "global" if self.index_map is None else "patch"

    @property
    def omega(self) -> float:
        return self.networks[0].omega

    @property
    def hidden(self) -> int:
        return self.networks[0].hidden

    def core_names(self) -> List[str]:
        return [CORE]

    def network_names(self) -> List[str]:
        return [name for net in self.networks for name in net.names()]

    def parameter_counts(self) -> Dict[str, int]:
        cores = int(self.params[CORE].size)
        networks = int(sum(self.params[name].size for name in self.network_names()))
        return {'cores': cores, 'networks': networks, 'total': cores + networks}

    def leaves(self) -> Dict[str, Node]:
        """Envolver cada parámetro como hoja del grafo de esta iteración"""
        return OrderedDict((name, leaf(value, name)) for name, value in self.params.items())

    def constants(self) -> Dict[str, Node]:
        return OrderedDict((name, constant(value, name)) for name, value in self.params.items())


def _check_ranks(ranks: Sequence[int], extents: Sequence[int]) -> None:
    if len(ranks) != len(extents):
        raise InvalidArgumentError(f"{len(ranks)} rangos para {len(extents)} modos")
    for i, (r, n) in enumerate(zip(ranks, extents)):
        if not 1 <= r <= n:
            raise InvalidArgumentError(f"Rango r{i}={r} fuera de [1, {n}] en el modo {i}")


def _build(ranks, core_shape, seed, hidden, omega, core_std, strict_init):
    rng = np.random.default_rng(seed)
    params: Dict[str, np.ndarray] = OrderedDict()
    params[CORE] = rng.normal(0.0, core_std, size=core_shape)
    networks = [FactorNetwork(i, r, hidden, omega) for i, r in enumerate(ranks)]
    for net in networks:
        params.update(net.init_params(rng, strict_init))
    return params, networks


def clip_ranks(ranks: Sequence[int], extents: Sequence[int]) -> Tuple[int, ...]:
    """Recortar cada rango a la extensión de su modo, avisando de cada recorte"""
    clipped = []
    for i, (r, n) in enumerate(zip(ranks, extents)):
        if r > n:
            logger.warning(f"Rango r{i}={r} recortado a la extensión del modo ({n})")
        clipped.append(min(int(r), int(n)))
    return tuple(clipped)


def init_model(index_map: PatchIndexMap, nt: int, ranks: Sequence[int], seed: int,
               hidden: int = DEFAULT_HIDDEN, omega: float = DEFAULT_OMEGA,
               core_std: float = DEFAULT_CORE_STD, strict_init: bool = False) -> TenfModel:
    """
    Inicializar el modelo por parches

    Los núcleos siguen N(0, core_std^2); la primera capa de cada red
    U[-1/n_l, 1/n_l] y la capa de salida U[-sqrt(6)/n_l/omega, ...] (sin el
    factor 1/omega con ``strict_init``).

    Raises:
        InvalidArgumentError: si algún rango excede la extensión de su modo
    """
    p = index_map.p
    extents = (p, p, nt, 2, index_map.k)
    _check_ranks(ranks, extents)
    core_shape = (index_map.l_count,) + tuple(ranks)
    params, networks = _build(ranks, core_shape, seed, hidden, omega,
                              core_std, strict_init)
    pad = index_map.pad
    model = TenfModel(extents, ranks, params, networks, index_map, (pad.nx, pad.ny, nt))
    logger.info(f"Modelo por parches: L={index_map.l_count}, rangos {tuple(ranks)}, "
                f"parámetros {model.parameter_counts()}")
    return model


def global_ranks(nx: int, ny: int, nt: int) -> Tuple[int, int, int, int]:
    """Rangos de la variante global escalados desde la referencia de 256 x 256"""
    r1, r2, r3, r4 = GLOBAL_REFERENCE_RANKS
    scaled = (max(1, round(r1 * nx / GLOBAL_REFERENCE_EXTENT)),
              max(1, round(r2 * ny / GLOBAL_REFERENCE_EXTENT)),
              min(r3, nt), r4)
    return clip_ranks(scaled, (nx, ny, nt, 2))


def init_global_model(shape: Tuple[int, int, int], ranks: Optional[Sequence[int]], seed: int,
                      hidden: int = DEFAULT_HIDDEN, omega: float = DEFAULT_OMEGA,
                      core_std: float = DEFAULT_CORE_STD, strict_init: bool = False) -> TenfModel:
    """Variante global: un núcleo de 4 modos sobre (nx, ny, nt, 2)"""
    nx, ny, nt = shape
    extents = (nx, ny, nt, 2)
    ranks = global_ranks(nx, ny, nt) if ranks is None else tuple(ranks)
    _check_ranks(ranks, extents)
    params, networks = _build(ranks, tuple(ranks), seed, hidden, omega,
                              core_std, strict_init)
    model = TenfModel(extents, ranks, params, networks, None, (nx, ny, nt))
    logger.info(f"Modelo global: rangos {tuple(ranks)}, parámetros {model.parameter_counts()}")
    return model


def evaluate_factors(model: TenfModel, leaves: Optional[Dict[str, Node]] = None) -> List[Node]:
    """Matrices de factores U_i (n_i, r_i), una evaluación por iteración para todos los grupos"""
    leaves = model.constants() if leaves is None else leaves
    return [net.forward(leaves, coords) for net, coords in zip(model.networks, model.grid.positions)]


def _tucker_node(core: Node, factors: Sequence[Node], first_mode: int) -> Node:
    out = core
    for i, factor in enumerate(factors):
        out = ops.mode_product(out, factor, first_mode + i)
    return out


def evaluate_group(model: TenfModel, l: int, factors: Sequence[Node],
                   leaves: Optional[Dict[str, Node]] = None) -> Node:
    """Tensor (p, p, nt, 2, K) del grupo l"""
    if model.index_map is None:
        raise InvalidArgumentError("evaluate_group solo aplica al modelo por parches")
    l_count = model.index_map.l_count
    if not 0 <= l < l_count:
        raise InvalidArgumentError(f"Grupo {l} fuera de rango [0, {l_count})")
    leaves = model.constants() if leaves is None else leaves
    core_all = leaves[CORE]
    flat = ops.reshape(core_all, (l_count, -1))
    core_l = ops.reshape(ops.gather_rows(flat, np.array([l])), model.ranks)
    return _tucker_node(core_l, factors, 0)


def evaluate_groups(model: TenfModel, factors: Sequence[Node],
                    leaves: Optional[Dict[str, Node]] = None) -> Node:
    """Todos los grupos a la vez: (L, p, p, nt, 2, K)"""
    leaves = model.constants() if leaves is None else leaves
    return _tucker_node(leaves[CORE], factors, 1)


def image_node(model: TenfModel, leaves: Optional[Dict[str, Node]] = None) -> Node:
    """Imagen (nx, ny, nt, 2) dentro del grafo"""
    leaves = model.constants() if leaves is None else leaves
    factors = evaluate_factors(model, leaves)
    if model.index_map is None:
        return _tucker_node(leaves[CORE], factors, 0)
    groups = evaluate_groups(model, factors, leaves)
    padded = assemble_node(groups, model.index_map)
    pad = model.index_map.pad
    return ops.crop(padded, (pad.nx, pad.ny))


def reconstruct_image(model: TenfModel, index_map: Optional[PatchIndexMap] = None) -> ComplexImageSeries:
    """
    Evaluar todos los grupos, promediar las contribuciones, recortar el
    relleno y devolver la serie compleja
    """
    if index_map is not None and (model.index_map is None
                                  or not np.array_equal(index_map.origins, model.index_map.origins)):
        raise InvalidArgumentError("El mapa de parches no corresponde al del modelo")
    return ComplexImageSeries(image_node(model).value)


def evaluate_global(model: TenfModel) -> ComplexImageSeries:
    """Una única evaluación de Tucker sobre la rejilla completa (variante global)"""
    if model.index_map is not None:
        raise InvalidArgumentError("evaluate_global necesita el modelo global")
    factors = [net.forward_array(model.params, coords)
               for net, coords in zip(model.networks, model.grid.positions)]
    return ComplexImageSeries(tucker_reconstruct(model.params[CORE], factors))
