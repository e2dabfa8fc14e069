"""Spacing-ratio parametrization of feasible antenna layouts.

A ratio ``r_n = d_min / (x_{n+1} - x_n)`` in ``(0, 1]`` fixes one gap. The
tentative layout puts gap ``n`` at ``d_min / r_n``; if that overruns the
region, every gap's excess over ``d_min`` is shrunk by a common factor so
the last element lands exactly on ``L``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import LAYOUT_TOL, R_MIN, SystemConfig


class Branch(enum.Enum):
    TENTATIVE = "tentative"
    RESCALED = "rescaled"


@dataclass(frozen=True)
class LayoutResult:
    positions: np.ndarray
    branch: Branch
    delta: float


@dataclass(frozen=True)
class Violation:
    kind: str  # "range" or "spacing"
    index: int  # 1-based element index
    magnitude: float


def clamp_ratios(r):
    return np.clip(np.asarray(r, dtype=float), R_MIN, 1.0)


def _check_ratios(r, cfg):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != cfg.num_elements - 1:
        raise ValueError(
            f"expected {cfg.num_elements - 1} ratios for N={cfg.num_elements}, got {r.shape[-1]}"
        )
    if np.any(r < R_MIN) or np.any(r > 1.0) or not np.all(np.isfinite(r)):
        raise ValueError(f"spacing ratios must lie in [{R_MIN}, 1]")
    return r


def ratios_to_positions_batch(r, cfg: SystemConfig):
    """Vectorized map from ratios ``(B, N-1)`` to positions ``(B, N)``.

    Returns ``(positions, rescaled_mask, delta)``.
    """
    r = _check_ratios(np.atleast_2d(r), cfg)
    d = cfg.min_spacing
    inv = 1.0 / r
    pos = np.zeros((r.shape[0], cfg.num_elements))
    pos[:, 1:] = d * np.cumsum(inv, axis=1)
    rescaled = pos[:, -1] > cfg.region_size
    delta = np.full(r.shape[0], d)
    if np.any(rescaled):
        excess = np.cumsum(inv[rescaled] - 1.0, axis=1)
        total = excess[:, -1]
        assert np.all(total > 1e-12), "rescale branch with all-unit ratios"
        slack = cfg.region_size - (cfg.num_elements - 1) * d
        delta[rescaled] = slack / total
        steps = np.arange(1, cfg.num_elements)
        sub = np.zeros((len(total), cfg.num_elements))
        sub[:, 1:] = steps * d + delta[rescaled][:, None] * excess
        # x_N = L exactly, not up to rounding of the cumulative sum
        sub[:, -1] = cfg.region_size
        pos[rescaled] = sub
    return pos, rescaled, delta


def ratios_to_positions(r, cfg: SystemConfig) -> LayoutResult:
    """Feasible layout from ``N-1`` spacing ratios (first element at 0)."""
    pos, rescaled, delta = ratios_to_positions_batch(np.asarray(r, float)[None], cfg)
    branch = Branch.RESCALED if rescaled[0] else Branch.TENTATIVE
    return LayoutResult(pos[0], branch, float(delta[0]))


def positions_jacobian_batch(r, cfg: SystemConfig) -> np.ndarray:
    """``d x_n / d r_m`` for each batch row; shape ``(B, N, N-1)``."""
    r = _check_ratios(np.atleast_2d(r), cfg)
    nb, m = r.shape
    n = m + 1
    d = cfg.min_spacing
    inv2 = 1.0 / r**2
    lower = np.tril(np.ones((n, m)), k=-1)  # [m < n] in 0-based terms
    jac = -d * lower[None] * inv2[:, None, :]
    # branch decided exactly as in the forward map; boundary uses the tentative side
    tentative_end = d * np.cumsum(1.0 / r, axis=1)[:, -1]
    rescaled = tentative_end > cfg.region_size
    if np.any(rescaled):
        rr = r[rescaled]
        excess = np.zeros((len(rr), n))
        excess[:, 1:] = np.cumsum(1.0 / rr - 1.0, axis=1)
        total = excess[:, -1]
        delta = (cfg.region_size - (n - 1) * d) / total
        # x_n = (n-1) d + delta * S_n,  delta = slack / S_N
        # => dx_n/dr_m = (delta / r_m^2) * (S_n / S_N - [m < n])
        share = excess / total[:, None]
        jac[rescaled] = (delta[:, None, None] / rr[:, None, :] ** 2) * (
            share[:, :, None] - lower[None]
        )
    return jac


def positions_jacobian(r, cfg: SystemConfig) -> np.ndarray:
    return positions_jacobian_batch(np.asarray(r, float)[None], cfg)[0]


def validate_layout(layout, cfg: SystemConfig, tol: float = LAYOUT_TOL) -> list[Violation]:
    """List every violated range or spacing constraint; empty when feasible."""
    x = np.asarray(layout, dtype=float)
    out = []
    for i, xi in enumerate(x, start=1):
        if xi < -tol:
            out.append(Violation("range", i, float(-xi)))
        elif xi > cfg.region_size + tol:
            out.append(Violation("range", i, float(xi - cfg.region_size)))
    gaps = np.diff(x)
    for i, g in enumerate(gaps, start=2):
        if g < cfg.min_spacing - tol:
            out.append(Violation("spacing", i, float(cfg.min_spacing - g)))
    return out
