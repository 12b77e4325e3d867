"""Tensor-product Gauss-Legendre and scrambled Sobol rules on [0, 1]^d."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.stats import qmc

# tensor grids above this dimension are too large; use QMC instead
MAX_TENSOR_DIM = 3
DEFAULT_QMC_POINTS = 2**16
QMC_REPLICATES = 8


@lru_cache(maxsize=64)
def _gl_unit(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_unit(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``m``-point Gauss-Legendre rule on [0, 1]."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return _gl_unit(int(m))


def tensor_grid(m: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened tensor grid: points ``(m**d, d)`` and weights ``(m**d,)``.

    Points are ordered with the last axis varying fastest (C order).
    """
    nodes, weights = gauss_legendre_unit(m)
    mesh = np.meshgrid(*([nodes] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
    w = weights
    for _ in range(d - 1):
        w = np.multiply.outer(w, weights)
    return pts, w.reshape(-1)


def integrate_tensor(values: np.ndarray, m: int, d: int) -> float:
    """Integrate values laid out on ``tensor_grid(m, d)``."""
    _, weights = gauss_legendre_unit(m)
    arr = np.asarray(values, dtype=float).reshape((m,) * d)
    for _ in range(d):
        arr = arr @ weights
    return float(arr)


def sobol_replicates(d: int, n_points: int = DEFAULT_QMC_POINTS, replicates: int = QMC_REPLICATES,
                     seed: int = 0) -> list[np.ndarray]:
    """Independently scrambled Sobol point sets splitting ``n_points`` between replicates."""
    per = max(2, n_points // replicates)
    # Sobol balance properties need a power of two
    per = 1 << int(np.floor(np.log2(per)))
    ss = np.random.SeedSequence(seed)
    out = []
    for child in ss.spawn(replicates):
        engine = qmc.Sobol(d, scramble=True, seed=np.random.Generator(np.random.Philox(child)))
        out.append(engine.random(per))
    return out
