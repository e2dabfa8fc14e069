"""Steering vectors, SINR and the closed-form optimal receive beamformer.

Single-instance functions here use scipy's Hermitian Cholesky solve and are
the reference path. ``optimal_sinr_batch`` and ``optimal_sinr_and_grad_batch``
route through :mod:`majam.kernels` and are what training and the baselines
call in their inner loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .config import Scene, SystemConfig

TWO_PI = 2.0 * np.pi

UNIT_NORM_TOL = 1e-6


class BeamformerSolveError(np.linalg.LinAlgError):
    """The jamming-plus-noise covariance could not be factorized."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class Covariances:
    """Signal outer product ``A`` and jamming-plus-noise covariance ``B``."""

    A: np.ndarray
    B: np.ndarray


def steering_vector(layout, angle: float, cfg: SystemConfig | None = None) -> np.ndarray:
    """Unit-modulus phase response ``exp(j 2 pi x_n cos(angle))`` of each element."""
    x = np.asarray(layout, dtype=float)
    return np.exp(1j * TWO_PI * x * np.cos(angle))


def _check_unit(w):
    norm = np.linalg.norm(w)
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"beamformer must have unit norm, got |w| = {norm:.9g}")


def sinr(layout, w, scene: Scene, cfg: SystemConfig) -> float:
    """Post-beamforming SINR of weights ``w`` on ``layout``."""
    w = np.asarray(w, dtype=complex)
    _check_unit(w)
    x = np.asarray(layout, dtype=float)
    signal = cfg.source_power * abs(np.vdot(w, steering_vector(x, scene.source_angle)))**2
    interference = sum(
        abs(np.vdot(w, steering_vector(x, th)))**2 for th in scene.jammer_angles
    )
    return float(signal / (cfg.jammer_power * interference + cfg.noise_power))


def build_covariances(layout, scene: Scene, cfg: SystemConfig) -> Covariances:
    x = np.asarray(layout, dtype=float)
    a0 = steering_vector(x, scene.source_angle)
    A = cfg.source_power * np.outer(a0, a0.conj())
    B = cfg.noise_power * np.eye(len(x), dtype=complex)
    for th in scene.jammer_angles:
        ak = steering_vector(x, th)
        B += cfg.jammer_power * np.outer(ak, ak.conj())
    return Covariances(A, B)


def condition_estimate(B) -> float:
    if not np.all(np.isfinite(B)):
        return float("inf")
    return float(np.linalg.cond(B))


def _cho_solve(B, rhs):
    try:
        factor = scipy.linalg.cho_factor(B, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise BeamformerSolveError(str(exc), condition_estimate(B)) from None
    return scipy.linalg.cho_solve(factor, rhs)


def optimal_beamformer(layout, scene: Scene, cfg: SystemConfig) -> tuple[np.ndarray, float]:
    """Maximum-SINR unit-norm beamformer and the SINR it attains.

    The generalized Rayleigh quotient ``w^H A w / w^H B w`` with rank-one
    ``A = a0 a0^H`` is maximized by ``w ~ B^-1 a0``, with value
    ``a0^H B^-1 a0`` (times the source power).

    Returns
    -------
    w : ndarray of complex
        Unit-norm beamformer.
    eta : float
        Optimal SINR.
    """
    x = np.asarray(layout, dtype=float)
    cov = build_covariances(x, scene, cfg)
    a0 = steering_vector(x, scene.source_angle)
    v = _cho_solve(cov.B, a0)
    eta = cfg.source_power * float(np.vdot(a0, v).real)
    return v / np.linalg.norm(v), eta


def sinr_position_gradient(layout, scene: Scene, cfg: SystemConfig) -> np.ndarray:
    """Gradient of the optimal SINR with respect to each element position.

    Differentiates ``a0^H B^-1 a0`` with the beamformer re-optimized
    implicitly, using ``d(B^-1) = -B^-1 dB B^-1``. Only entry ``n`` of each
    steering vector depends on ``x_n``, so the result costs one solve plus
    ``O(NK)`` work.
    """
    x = np.asarray(layout, dtype=float)
    cov = build_covariances(x, scene, cfg)
    a0 = steering_vector(x, scene.source_angle)
    u = _cho_solve(cov.B, a0)
    uc = u.conj()
    grad = 2.0 * np.real(1j * TWO_PI * np.cos(scene.source_angle) * uc * a0)
    for th in scene.jammer_angles:
        ak = steering_vector(x, th)
        t = np.vdot(ak, u)
        grad -= cfg.jammer_power * 2.0 * np.real(1j * TWO_PI * np.cos(th) * ak * t * uc)
    return cfg.source_power * grad


def _scaled_noise(cfg):
    # B = Pj (sum a a^H + (sigma^2 / Pj) I), so eta = (Ps / Pj) a0^H (...)^-1 a0
    return cfg.noise_power / cfg.jammer_power, cfg.source_power / cfg.jammer_power


def _as_batch(positions, cos_source, cos_jammers):
    pos = np.ascontiguousarray(np.atleast_2d(np.asarray(positions, dtype=float)))
    c0 = np.ascontiguousarray(np.broadcast_to(np.asarray(cos_source, float), pos.shape[:1]))
    cj = np.asarray(cos_jammers, dtype=float)
    if cj.ndim <= 1:
        cj = cj.reshape(1, -1)
    cj = np.ascontiguousarray(np.broadcast_to(cj, (pos.shape[0], cj.shape[1])))
    return pos, c0, cj


def _guard(call, pos, c0, cj, cfg):
    noise, gain = _scaled_noise(cfg)
    try:
        return call(pos, c0, cj, noise), gain
    except kernels.KernelSolveError as exc:
        i = exc.index
        s = Scene.from_angles(np.arccos(np.clip(np.r_[c0[i], cj[i]], -1, 1)))
        cond = condition_estimate(build_covariances(pos[i], s, cfg).B)
        raise BeamformerSolveError(str(exc), cond) from None


def optimal_sinr_batch(positions, cos_source, cos_jammers, cfg: SystemConfig) -> np.ndarray:
    """Optimal SINR for a batch of layouts and scenes.

    ``positions`` is ``(B, N)``; ``cos_source`` is ``(B,)`` or scalar;
    ``cos_jammers`` is ``(B, K)`` or ``(K,)`` (broadcast over the batch).
    """
    pos, c0, cj = _as_batch(positions, cos_source, cos_jammers)
    eta, gain = _guard(kernels.eta_batch, pos, c0, cj, cfg)
    return gain * eta


def optimal_sinr_and_grad_batch(positions, cos_source, cos_jammers, cfg: SystemConfig):
    """Batched optimal SINR ``(B,)`` and position gradient ``(B, N)``."""
    pos, c0, cj = _as_batch(positions, cos_source, cos_jammers)
    (eta, grad), gain = _guard(kernels.eta_grad_batch, pos, c0, cj, cfg)
    return gain * eta, gain * grad
