# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched SINR kernels.

Same contract as ``majam._kernels_py``: per batch row, build the
jamming-plus-noise covariance, Cholesky-factor it in place and solve for
``B^-1 a0``.  No explicit inverse is ever formed.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, M_PI

from majam._kernels_py import KernelSolveError

cnp.import_array()

ctypedef double complex cplx


cdef inline cplx cexpj(double phase) nogil:
    return cos(phase) + 1j * sin(phase)


cdef int _solve_one(
    const double[:] pos, double c0, const double[:] cj, double noise,
    cplx[:, :] steer, cplx[:, :] chol, cplx[:] y, cplx[:] u, double* eta,
) noexcept nogil:
    """Fill ``steer`` (K+1, N), factor, solve. Returns 0 or -1 on a bad pivot."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t kk = cj.shape[0]
    cdef Py_ssize_t i, j, k
    cdef cplx acc
    cdef double d, two_pi = 2.0 * M_PI

    for i in range(n):
        steer[0, i] = cexpj(two_pi * c0 * pos[i])
        for k in range(kk):
            steer[k + 1, i] = cexpj(two_pi * cj[k] * pos[i])

    # lower triangle of B = sum_k a_k a_k^H + noise I
    for i in range(n):
        for j in range(i + 1):
            acc = 0
            for k in range(1, kk + 1):
                acc = acc + steer[k, i] * steer[k, j].conjugate()
            if i == j:
                acc = acc + noise
            chol[i, j] = acc

    # in-place Cholesky, B = L L^H
    for j in range(n):
        d = chol[j, j].real
        for k in range(j):
            d -= chol[j, k].real * chol[j, k].real + chol[j, k].imag * chol[j, k].imag
        if not d > 0.0:
            return -1
        d = sqrt(d)
        chol[j, j] = d
        for i in range(j + 1, n):
            acc = chol[i, j]
            for k in range(j):
                acc = acc - chol[i, k] * chol[j, k].conjugate()
            chol[i, j] = acc / d

    for i in range(n):
        acc = steer[0, i]
        for k in range(i):
            acc = acc - chol[i, k] * y[k]
        y[i] = acc / chol[i, i].real
    d = 0.0
    for i in range(n):
        d += y[i].real * y[i].real + y[i].imag * y[i].imag
    eta[0] = d
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc = acc - chol[k, i].conjugate() * u[k]
        u[i] = acc / chol[i, i].real
    return 0


def eta_batch(pos, c0, cj, double noise):
    cdef const double[:, :] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[:] c0v = np.ascontiguousarray(c0, dtype=np.float64)
    cdef const double[:, :] cjv = np.ascontiguousarray(cj, dtype=np.float64)
    cdef Py_ssize_t nb = p.shape[0], n = p.shape[1], kk = cjv.shape[1]
    cdef cplx[:, :] steer = np.empty((kk + 1, n), dtype=np.complex128)
    cdef cplx[:, :] chol = np.empty((n, n), dtype=np.complex128)
    cdef cplx[:] y = np.empty(n, dtype=np.complex128)
    cdef cplx[:] u = np.empty(n, dtype=np.complex128)
    out = np.empty(nb, dtype=np.float64)
    cdef double[:] ov = out
    cdef Py_ssize_t b
    cdef int status = 0
    with nogil:
        for b in range(nb):
            status = _solve_one(p[b], c0v[b], cjv[b], noise, steer, chol, y, u, &ov[b])
            if status != 0:
                break
    if status != 0:
        raise KernelSolveError(b)
    return out


def eta_grad_batch(pos, c0, cj, double noise):
    cdef const double[:, :] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[:] c0v = np.ascontiguousarray(c0, dtype=np.float64)
    cdef const double[:, :] cjv = np.ascontiguousarray(cj, dtype=np.float64)
    cdef Py_ssize_t nb = p.shape[0], n = p.shape[1], kk = cjv.shape[1]
    cdef cplx[:, :] steer = np.empty((kk + 1, n), dtype=np.complex128)
    cdef cplx[:, :] chol = np.empty((n, n), dtype=np.complex128)
    cdef cplx[:] y = np.empty(n, dtype=np.complex128)
    cdef cplx[:] u = np.empty(n, dtype=np.complex128)
    cdef cplx[:] t = np.empty(kk + 1, dtype=np.complex128)
    eta = np.empty(nb, dtype=np.float64)
    grad = np.empty((nb, n), dtype=np.float64)
    cdef double[:] ev = eta
    cdef double[:, :] gv = grad
    cdef Py_ssize_t b, i, k
    cdef int status = 0
    cdef double two_pi = 2.0 * M_PI
    cdef cplx acc, z
    with nogil:
        for b in range(nb):
            status = _solve_one(p[b], c0v[b], cjv[b], noise, steer, chol, y, u, &ev[b])
            if status != 0:
                break
            # t_k = a_k^H u
            for k in range(1, kk + 1):
                acc = 0
                for i in range(n):
                    acc = acc + steer[k, i].conjugate() * u[i]
                t[k] = acc
            for i in range(n):
                z = 1j * two_pi * c0v[b] * steer[0, i]
                for k in range(1, kk + 1):
                    z = z - 1j * two_pi * cjv[b, k - 1] * steer[k, i] * t[k]
                gv[b, i] = 2.0 * (u[i].conjugate() * z).real
    if status != 0:
        raise KernelSolveError(b)
    return eta, grad
