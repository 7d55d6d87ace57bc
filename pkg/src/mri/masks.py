# src/mri/masks.py

"""
Generadores de máscaras de submuestreo cartesianas: densidad variable ky-t
(líneas de fase gaussianas con líneas centrales fijas), pseudo-radial
(radios con ángulo áureo) y pseudo-espiral (brazos de Arquímedes).

Todos son deterministas dada la forma, la aceleración y la semilla.
"""

import logging
import math
from typing import Callable, Tuple

import numpy as np

from src.utils.errors import InvalidArgumentError

from .types import SamplingMask

logger = logging.getLogger(__name__)

GOLDEN_RADIAL = math.pi * (math.sqrt(5.0) - 1.0) / 2.0     # ~111.25 grados
GOLDEN_SPIRAL = 2.0 * math.pi * (1.0 - 2.0 / (1.0 + math.sqrt(5.0)))  # ~137.5 grados
SAMPLE_STEP = 0.5
MAX_CURVES = 20000


def _check_acceleration(r: float) -> None:
    if not r >= 1:
        raise InvalidArgumentError(f"La aceleración debe ser >= 1, recibido {r}")


def make_vds_mask(nx: int, ny: int, nt: int, r: float, center_lines: int = 4,
                  seed: int = 0) -> SamplingMask:
    """
    Máscara ky-t de densidad variable

    Cada fotograma muestrea la lectura (x) completa y ``round(ny / r)``
    líneas de fase: las ``center_lines`` centrales siempre, el resto sin
    reemplazo con densidad gaussiana centrada en ky=0 (sigma = ny/6).

    Raises:
        InvalidArgumentError: si r < 1, center_lines < 1 o no caben las líneas centrales
    """
    _check_acceleration(r)
    if center_lines < 1:
        raise InvalidArgumentError(f"Se necesita al menos una línea central, recibido {center_lines}")
    n_lines = min(ny, max(1, int(round(ny / r))))
    if n_lines < center_lines:
        raise InvalidArgumentError(
            f"Con r={r} solo hay {n_lines} líneas por fotograma y se piden {center_lines} centrales")

    rng = np.random.default_rng(seed)
    ky = np.arange(ny)
    middle = ny // 2
    first = middle - center_lines // 2
    center = np.arange(first, first + center_lines)
    sigma = ny / 6.0
    density = np.exp(-((ky - middle) ** 2) / (2.0 * sigma ** 2))
    density[center] = 0.0
    density /= density.sum() if density.sum() > 0 else 1.0

    pattern = np.zeros((nx, ny, nt))
    extra = n_lines - center_lines
    for t in range(nt):
        pattern[:, center, t] = 1.0
        if extra > 0:
            chosen = rng.choice(ny, size=extra, replace=False, p=density)
            pattern[:, chosen, t] = 1.0

    mask = SamplingMask(pattern, float(r), "variable-density")
    logger.info(f"Máscara de densidad variable: {n_lines} líneas/fotograma, "
                f"R conseguida {mask.achieved_acceleration:.2f} (nominal {r})")
    return mask


def _fill_frame(nx: int, ny: int, target: float,
                curve: Callable[[int, int], Tuple[np.ndarray, np.ndarray]],
                curve_length: Callable[[int], int]) -> np.ndarray:
    """
    Añadir curvas completas hasta alcanzar ``target`` puntos y recortar la
    última para quedar lo más cerca posible del objetivo
    """
    occupied = np.zeros((nx, ny), dtype=bool)
    occupied[nx // 2, ny // 2] = True

    for j in range(MAX_CURVES):
        full = curve_length(j)
        xs, ys = curve(j, full)
        trial = occupied.copy()
        trial[xs, ys] = True
        if trial.sum() < target:
            occupied = trial
            if trial.all():
                break
            continue

        def count(level: int) -> np.ndarray:
            cand = occupied.copy()
            px, py = curve(j, level)
            cand[px, py] = True
            return cand

        lo, hi = 0, full
        while lo < hi:
            mid = (lo + hi) // 2
            if count(mid).sum() >= target:
                hi = mid
            else:
                lo = mid + 1
        above = count(lo)
        below = count(max(lo - 1, 0))
        if abs(below.sum() - target) < abs(above.sum() - target):
            return below
        return above
    return occupied


def _radial_curve(nx: int, ny: int, offset: float):
    cx, cy = nx // 2, ny // 2
    max_steps = int(math.ceil(0.5 * math.hypot(nx, ny) / SAMPLE_STEP))

    def curve(j: int, level: int):
        angle = offset + j * GOLDEN_RADIAL
        t = SAMPLE_STEP * np.arange(-level, level + 1)
        xs = np.rint(cx + t * math.cos(angle)).astype(int)
        ys = np.rint(cy + t * math.sin(angle)).astype(int)
        keep = (xs >= 0) & (xs < nx) & (ys >= 0) & (ys < ny)
        return xs[keep], ys[keep]

    return curve, (lambda j: max_steps)


def _spiral_curve(nx: int, ny: int, offset: float, turns: float):
    cx, cy = nx // 2, ny // 2
    radius = 0.5 * math.hypot(nx, ny)
    n_samples = int(math.ceil(radius * math.sqrt(1.0 + (2.0 * math.pi * turns) ** 2) / SAMPLE_STEP)) + 1

    def curve(j: int, level: int):
        s = np.arange(level + 1) / (n_samples - 1)
        rho = s * radius
        theta = offset + j * GOLDEN_SPIRAL + 2.0 * math.pi * turns * s
        xs = np.rint(cx + rho * np.cos(theta)).astype(int)
        ys = np.rint(cy + rho * np.sin(theta)).astype(int)
        keep = (xs >= 0) & (xs < nx) & (ys >= 0) & (ys < ny)
        return xs[keep], ys[keep]

    return curve, (lambda j: n_samples - 1)


def _make_curve_mask(nx: int, ny: int, nt: int, r: float, seed: int, kind: str,
                     builder) -> SamplingMask:
    _check_acceleration(r)
    rng = np.random.default_rng(seed)
    base = float(rng.uniform(0.0, 2.0 * math.pi))
    target = nx * ny / float(r)
    pattern = np.zeros((nx, ny, nt))
    for t in range(nt):
        if r == 1:
            pattern[:, :, t] = 1.0
            continue
        curve, length = builder(base + t * GOLDEN_SPIRAL)
        pattern[:, :, t] = _fill_frame(nx, ny, target, curve, length)
    mask = SamplingMask(pattern, float(r), kind)
    logger.info(f"Máscara {kind}: R conseguida {mask.achieved_acceleration:.2f} (nominal {r})")
    return mask


def make_pseudo_radial_mask(nx: int, ny: int, nt: int, r: float, seed: int = 0) -> SamplingMask:
    """Puntos cartesianos más cercanos a radios con ángulo áureo, rotados por fotograma"""
    return _make_curve_mask(nx, ny, nt, r, seed, "pseudo-radial",
                            lambda offset: _radial_curve(nx, ny, offset))


def make_pseudo_spiral_mask(nx: int, ny: int, nt: int, r: float, seed: int = 0,
                            turns: float = 1.0) -> SamplingMask:
    """Puntos cartesianos más cercanos a brazos de espiral de Arquímedes"""
    return _make_curve_mask(nx, ny, nt, r, seed, "pseudo-spiral",
                            lambda offset: _spiral_curve(nx, ny, offset, turns))


def make_mask(kind: str, nx: int, ny: int, nt: int, r: float, seed: int = 0,
              center_lines: int = 4) -> SamplingMask:
    """Despachar por tipo de máscara"""
    if kind == "variable-density":
        return make_vds_mask(nx, ny, nt, r, center_lines, seed)
    if kind == "pseudo-radial":
        return make_pseudo_radial_mask(nx, ny, nt, r, seed)
    if kind == "pseudo-spiral":
        return make_pseudo_spiral_mask(nx, ny, nt, r, seed)
    raise InvalidArgumentError(f"Tipo de máscara desconocido: {kind}")
