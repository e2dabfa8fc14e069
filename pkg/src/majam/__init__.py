"""Anti-jamming reception with a movable linear antenna array.

Receive beamforming is solved in closed form (generalized Rayleigh
quotient); element positions come from a small MLP trained without labels
against the reciprocal of the optimal SINR.
"""

from .config import R_MIN, ConfigError, Scene, SystemConfig
from .kernels import BACKEND

__all__ = ["BACKEND", "ConfigError", "R_MIN", "Scene", "SystemConfig"]
__version__ = "0.1.0"
