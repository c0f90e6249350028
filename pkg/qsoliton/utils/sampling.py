"""Deterministic low-discrepancy point sets (scrambled Halton / Sobol via scipy.stats.qmc)."""

from __future__ import annotations

import logging

import numpy as np
from scipy.stats import norm, qmc

logger = logging.getLogger(__name__)

_EDGE = 1e-12


def unit_cube(count: int, dim: int, seed: int, method: str = "halton") -> np.ndarray:
    """``count`` points of [0, 1)^dim from a scrambled sequence."""
    if method == "sobol":
        engine = qmc.Sobol(d=dim, scramble=True, seed=seed)
        m = int(np.ceil(np.log2(max(count, 2))))
        points = engine.random_base2(m)[:count]
    elif method == "halton":
        points = qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
    else:
        raise ValueError(f"Unknown low-discrepancy method: {method}")
    logger.debug("Drew %d %s points in dim %d (seed %d)", count, method, dim, seed)
    return points


def sample_box(
    lower: np.ndarray, upper: np.ndarray, count: int, seed: int, method: str = "halton"
) -> np.ndarray:
    return qmc.scale(unit_cube(count, len(lower), seed, method), lower, upper)


def sample_directions(count: int, dim: int, seed: int) -> np.ndarray:
    """Quasi-uniform unit vectors of R^dim (Gaussian directions through ``norm.ppf``)."""
    if dim == 1:
        return np.where(unit_cube(count, 1, seed) < 0.5, -1.0, 1.0)
    gauss = norm.ppf(np.clip(unit_cube(count, dim, seed), _EDGE, 1 - _EDGE))
    return gauss / np.linalg.norm(gauss, axis=1, keepdims=True)


def sample_ball(count: int, dim: int, seed: int) -> np.ndarray:
    """Quasi-uniform points of the closed Euclidean unit ball."""
    cube = unit_cube(count, dim + 1, seed)
    gauss = norm.ppf(np.clip(cube[:, :dim], _EDGE, 1 - _EDGE))
    directions = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
    radii = cube[:, dim] ** (1.0 / dim)
    return directions * radii[:, None]
