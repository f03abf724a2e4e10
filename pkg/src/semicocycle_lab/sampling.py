"""Seeded low-discrepancy sampling inside complex balls."""

import numpy as np
from scipy.stats import qmc

from .algebra import NormKind, vec_norm


def sample_ball(dim: int, radius: float, count: int, seed: int,
                norm: NormKind = "spectral") -> list[np.ndarray]:
    """Deterministic complex points with ||x|| <= radius in the chosen norm.

    A scrambled-Halton cube in [-1, 1]^{2*dim} is scaled into the ball; the
    scaling keeps every point inside without clumping on the boundary.
    """
    halton = qmc.Halton(d=2 * dim, scramble=True, seed=seed)
    cube = 2.0 * halton.random(count) - 1.0
    pts = []
    for row in cube:
        z = row[:dim] + 1j * row[dim:]
        scale = np.sqrt(2 * dim) if norm == "spectral" else np.sqrt(2.0)
        z = radius * z / scale
        assert vec_norm(z, norm) <= radius + 1e-12
        pts.append(z)
    return pts
