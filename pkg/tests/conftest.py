import numpy as np
import pytest

from majam import Scene, SystemConfig
from majam import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.get_backend(request.param)


def random_instance(rng, n=None, k=None, region=7.0):
    """Random feasible layout and scene on the default 0.5-lambda spacing."""
    n = n or int(rng.integers(1, 5))
    k = int(rng.integers(0, 4)) if k is None else k
    cfg = SystemConfig(num_elements=n, num_jammers=k, region_size=region)
    gaps = rng.uniform(0.5, 2.0, size=n - 1)
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    x = x * min(1.0, region / max(x[-1], 1e-12)) if x[-1] > region else x
    scene = Scene(rng.uniform(0, np.pi), tuple(rng.uniform(0, np.pi, size=k)))
    return x, scene, cfg


def power_iteration_top_eig(B, A, iters=1000):
    """Largest eigenvalue of inv(B) A by power iteration (explicit inverse: oracle only)."""
    M = np.linalg.inv(B) @ A
    v = np.ones(M.shape[0], dtype=complex)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        lam = np.vdot(v, w) / np.vdot(v, v)
        v = w / nrm
    return float(np.real(lam))


def central_diff(f, x, h):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        out.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out
