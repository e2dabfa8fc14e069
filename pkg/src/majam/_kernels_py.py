"""Pure numpy implementation of the batched SINR kernels.

Mirrors ``majam._kernels`` (Cython) call for call; used when the compiled
extension is unavailable or ``MAJAM_PURE_PYTHON`` is set.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


class KernelSolveError(np.linalg.LinAlgError):
    """Cholesky factorization of the jamming-plus-noise covariance failed."""

    def __init__(self, index, message="covariance not positive definite"):
        super().__init__(f"{message} (batch index {index})")
        self.index = index


def _steering(pos, c0, cj):
    cos_all = np.concatenate([c0[:, None], cj], axis=1)
    return np.exp(1j * TWO_PI * cos_all[:, :, None] * pos[:, None, :])


def _solve(steer, noise):
    a0 = steer[:, 0, :]
    jam = steer[:, 1:, :]
    n = a0.shape[1]
    cov = np.einsum("bki,bkj->bij", jam, jam.conj())
    cov += noise * np.eye(n)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        bad = next(i for i in range(len(cov)) if np.linalg.eigvalsh(cov[i])[0] <= 0)
        raise KernelSolveError(bad) from None
    # forward substitution L y = a0, then L^H u = y, vectorized over the batch
    y = np.empty_like(a0)
    for i in range(n):
        y[:, i] = (a0[:, i] - np.einsum("bj,bj->b", chol[:, i, :i], y[:, :i])) / chol[:, i, i]
    u = np.empty_like(a0)
    lh = chol.conj()
    for i in range(n - 1, -1, -1):
        u[:, i] = (y[:, i] - np.einsum("bj,bj->b", lh[:, i + 1 :, i], u[:, i + 1 :])) / lh[:, i, i]
    eta = np.einsum("bi,bi->b", y.conj(), y).real
    return eta, u


def eta_batch(pos, c0, cj, noise):
    """Optimal SINR ``a0^H B^-1 a0`` for each row of ``pos``."""
    pos = np.asarray(pos, dtype=float)
    eta, _ = _solve(_steering(pos, np.asarray(c0, float), np.asarray(cj, float)), noise)
    return eta


def eta_grad_batch(pos, c0, cj, noise):
    """Optimal SINR and its gradient with respect to the element positions."""
    pos = np.asarray(pos, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    cj = np.asarray(cj, dtype=float)
    steer = _steering(pos, c0, cj)
    eta, u = _solve(steer, noise)
    a0 = steer[:, 0, :]
    jam = steer[:, 1:, :]
    uc = u.conj()
    grad = 2.0 * np.real(1j * TWO_PI * c0[:, None] * uc * a0)
    if jam.shape[1]:
        t = np.einsum("bki,bi->bk", jam.conj(), u)
        grad -= 2.0 * np.real(
            1j * TWO_PI * np.einsum("bk,bkn,bk->bn", cj, jam, t) * uc
        )
    return eta, grad
