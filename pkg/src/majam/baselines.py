"""Reference schemes: alternating optimization, fixed array, random strategy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import array_model, positioning
from .config import LAYOUT_TOL, R_MIN, ConfigError, Scene, SystemConfig


class Strategy(NamedTuple):
    layout: np.ndarray
    beamformer: np.ndarray
    sinr: float


class AoResult(NamedTuple):
    layout: np.ndarray
    beamformer: np.ndarray
    sinr: float
    sweeps: int
    trace: list  # optimal SINR after initialization and after each sweep


@dataclass(frozen=True)
class AoConfig:
    grid_points: int = 200
    max_sweeps: int = 50
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.grid_points < 2:
            raise ConfigError("grid_points must be >= 2")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be >= 1")


def fpv_layout(cfg: SystemConfig) -> np.ndarray:
    """Uniform array at twice the minimum spacing, starting at 0."""
    spacing = 2.0 * cfg.min_spacing
    if (cfg.num_elements - 1) * spacing > cfg.region_size + LAYOUT_TOL:
        raise ConfigError(
            f"fixed array with spacing {spacing:g} does not fit N={cfg.num_elements} "
            f"elements in L={cfg.region_size:g}"
        )
    return np.arange(cfg.num_elements) * spacing


def fpv_feasible(cfg: SystemConfig) -> bool:
    return (cfg.num_elements - 1) * 2.0 * cfg.min_spacing <= cfg.region_size + LAYOUT_TOL


def fpv(scene: Scene, cfg: SystemConfig) -> Strategy:
    layout = fpv_layout(cfg)
    w, eta = array_model.optimal_beamformer(layout, scene, cfg)
    return Strategy(layout, w, eta)


def rpb(scene: Scene, cfg: SystemConfig, rng) -> Strategy:
    """Random feasible layout (uniform spacing ratios) and random unit beamformer."""
    ratios = rng.uniform(R_MIN, 1.0, size=cfg.num_elements - 1)
    layout = positioning.ratios_to_positions(ratios, cfg).positions
    w = rng.standard_normal(cfg.num_elements) + 1j * rng.standard_normal(cfg.num_elements)
    w /= np.linalg.norm(w)
    return Strategy(layout, w, array_model.sinr(layout, w, scene, cfg))


def ao_initial_layout(cfg: SystemConfig) -> np.ndarray:
    if fpv_feasible(cfg):
        return fpv_layout(cfg)
    if cfg.num_elements == 1:
        return np.zeros(1)
    return np.linspace(0.0, cfg.region_size, cfg.num_elements)


def ao(scene: Scene, cfg: SystemConfig, ao_cfg: AoConfig | None = None) -> AoResult:
    """Coordinate-wise grid search on the optimal SINR.

    The beamformer is kept optimal implicitly (closed form for every
    candidate layout), so each 1-D search alternates with a beamforming
    update. Element ``n`` is searched over the interval its neighbours and
    the region leave free; moves are taken only when they strictly improve.
    """
    ao_cfg = ao_cfg or AoConfig()
    x = ao_initial_layout(cfg)
    n = cfg.num_elements
    cos = np.cos(scene.angles)
    c0, cj = cos[0], cos[1:]
    eta = float(array_model.optimal_sinr_batch(x, c0, cj, cfg)[0])
    trace = [eta]
    sweeps = 0
    for sweeps in range(1, ao_cfg.max_sweeps + 1):
        start = eta
        for i in range(n):
            lo = 0.0 if i == 0 else x[i - 1] + cfg.min_spacing
            hi = cfg.region_size if i == n - 1 else x[i + 1] - cfg.min_spacing
            if hi < lo:  # neighbours exactly d_min apart up to rounding
                continue
            grid = np.linspace(lo, hi, ao_cfg.grid_points)
            cand = np.repeat(x[None], len(grid), axis=0)
            cand[:, i] = grid
            values = array_model.optimal_sinr_batch(cand, c0, cj, cfg)
            best = int(np.argmax(values))
            if values[best] > eta:
                eta = float(values[best])
                x = cand[best]
        trace.append(eta)
        if eta - start < ao_cfg.tolerance * start:
            break
    w, eta_final = array_model.optimal_beamformer(x, scene, cfg)
    return AoResult(x, w, eta_final, sweeps, trace)
