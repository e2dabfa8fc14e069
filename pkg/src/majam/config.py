"""Configuration and scene types shared by every module.

Lengths are expressed in wavelengths throughout; ``wavelength`` is carried
only so that outputs can be labelled in physical units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Absolute slack (in wavelengths) allowed on spacing and range constraints.
LAYOUT_TOL = 1e-9

#: Clamping floor on spacing ratios; bounds a tentative spacing at 1e3 * d_min.
R_MIN = 1e-3


class ConfigError(ValueError):
    """Raised for an inconsistent system, training or sweep configuration."""


@dataclass(frozen=True)
class SystemConfig:
    """Physical parameters of the movable-antenna receiver.

    Parameters
    ----------
    num_elements : int
        Number of array elements ``N``.
    num_jammers : int
        Number of jammers ``K``.
    region_size : float
        Length ``L`` of the region the elements move in (wavelengths).
    min_spacing : float
        Minimum spacing ``d_min`` between adjacent elements (wavelengths).
    noise_power : float
        Background noise power; transmit powers are unit by default.
    wavelength : float
        Reference wavelength, used for labelling only.
    source_power, jammer_power : float
        Optional per-transmitter power scales.
    """

    num_elements: int = 8
    num_jammers: int = 3
    region_size: float = 7.0
    min_spacing: float = 0.5
    noise_power: float = 0.1
    wavelength: float = 1.0
    source_power: float = 1.0
    jammer_power: float = 1.0

    def __post_init__(self):
        if self.num_elements < 1:
            raise ConfigError(f"num_elements must be >= 1, got {self.num_elements}")
        if self.num_jammers < 0:
            raise ConfigError(f"num_jammers must be >= 0, got {self.num_jammers}")
        if not self.min_spacing > 0:
            raise ConfigError(f"min_spacing must be > 0, got {self.min_spacing}")
        if not self.noise_power > 0:
            raise ConfigError(f"noise_power must be > 0, got {self.noise_power}")
        if not (self.source_power > 0 and self.jammer_power > 0):
            raise ConfigError("transmit powers must be positive")
        span = (self.num_elements - 1) * self.min_spacing
        if span > self.region_size + LAYOUT_TOL:
            raise ConfigError(
                f"(N-1)*d_min = {span:g} exceeds region size L = {self.region_size:g}"
            )

    def replace(self, **changes) -> "SystemConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Scene:
    """Directions of arrival: the source angle first, then the jammers (radians)."""

    source_angle: float
    jammer_angles: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "source_angle", float(self.source_angle))
        object.__setattr__(self, "jammer_angles", tuple(float(a) for a in self.jammer_angles))
        for a in self.angles:
            if not math.isfinite(a) or a < 0.0 or a > math.pi:
                raise ValueError(f"angle {a!r} outside [0, pi]")

    @property
    def angles(self) -> tuple[float, ...]:
        return (self.source_angle, *self.jammer_angles)

    @property
    def num_jammers(self) -> int:
        return len(self.jammer_angles)

    @classmethod
    def from_angles(cls, angles) -> "Scene":
        angles = list(angles)
        return cls(angles[0], tuple(angles[1:]))

    def with_jammers(self, k: int) -> "Scene":
        """Return the scene restricted to its first ``k`` jammers."""
        return Scene(self.source_angle, self.jammer_angles[:k])


def scenes_to_cosines(scenes) -> tuple[np.ndarray, np.ndarray]:
    """Stack scenes into (source cosines ``(B,)``, jammer cosines ``(B, K)``)."""
    scenes = list(scenes)
    if not scenes:
        return np.zeros(0), np.zeros((0, 0))
    k = scenes[0].num_jammers
    if any(s.num_jammers != k for s in scenes):
        raise ValueError("all scenes in a batch must have the same jammer count")
    angles = np.array([s.angles for s in scenes], dtype=float)
    cosines = np.cos(angles)
    return cosines[:, 0].copy(), np.ascontiguousarray(cosines[:, 1:])
