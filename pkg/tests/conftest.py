import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def power_iteration_top(matrix: np.ndarray, iters: int = 1000, seed: int = 7) -> float:
    """Independent largest-eigenvalue estimate for a PSD matrix."""
    gen = np.random.default_rng(seed)
    v = gen.standard_normal(matrix.shape[0]) + 1j * gen.standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float((v.conj() @ (matrix @ v)).real)
