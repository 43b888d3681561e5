"""Euclidean projections onto the admissible potential boxes.

Both admissible sets are Cartesian products of intervals, so projecting is a
single coordinatewise clip, O(M):

  * ``cost_box(R)``: the cube [0, 2 R^2]^M, valid whenever the source support
    and all atoms fit in B(0, R).
  * ``lipschitz_box(radii)``: the anchored product of intervals
    [-r_j, r_j] with r_1 = 0, which pins the first coordinate to zero and
    bounds the others by r_j = R * ||y_1 - y_j||.

``None`` stands for "no projection" (used with unbounded sources).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoxProjection:
    """Clip-to-box projection; ``lower``/``upper`` are scalars or (M,) arrays."""

    lower: object
    upper: object

    def __post_init__(self):
        if np.any(np.asarray(self.lower) > np.asarray(self.upper)):
            raise ValueError("lower bound exceeds upper bound")

    def apply(self, g: np.ndarray) -> np.ndarray:
        return np.clip(g, self.lower, self.upper)

    def contains(self, g: np.ndarray) -> bool:
        return bool(np.all(g >= self.lower) and np.all(g <= self.upper))


def cost_box(radius: float) -> BoxProjection:
    """The cube [0, 2 R^2]^M for a source/target radius bound ``radius``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return BoxProjection(0.0, 2.0 * radius * radius)


def lipschitz_box(radii: np.ndarray) -> BoxProjection:
    """Anchored box from per-atom radii, r_1 = 0 and r_j >= 0."""
    radii = np.asarray(radii, dtype=np.float64)
    if radii.ndim != 1:
        raise ValueError("radii must be a 1-D array")
    if radii[0] != 0.0:
        raise ValueError("radii[0] must be 0 (first coordinate is pinned)")
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    return BoxProjection(-radii, radii)


def project(proj: BoxProjection | None, g: np.ndarray) -> np.ndarray:
    """Project ``g`` onto the set (identity when ``proj`` is None)."""
    if proj is None:
        return np.asarray(g, dtype=np.float64)
    return proj.apply(g)
