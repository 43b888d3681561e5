"""Discrete target measures and sampleable source distributions.

The target is a weighted point cloud (atoms ``y_j`` with weights ``w_j``
summing to one). Sources are continuous distributions that can be sampled
through an :class:`~dragot.rng.RngStream`; each source consumes a fixed number
of uniform words per sample, so a batch of ``n`` draws is bit-for-bit equal to
``n`` successive single draws from the same stream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .rng import RngStream

_WEIGHT_SUM_TOL = 1e-9


@dataclass
class DiscreteMeasure:
    """Finitely supported probability measure sum_j w_j * delta(y_j).

    points: (M, d) atom locations, pairwise distinct.
    weights: (M,) strictly positive, summing to one. Weight vectors off by at
        most 1e-9 (file round-off) are renormalized; larger defects raise.
    """

    points: np.ndarray
    weights: np.ndarray
    _half_sq_norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-D array of shape (M, d)")
        if self.weights.ndim != 1 or self.weights.shape[0] != self.points.shape[0]:
            raise ValueError("weights must be 1-D with one entry per atom")
        m, d = self.points.shape
        if m < 1 or d < 1:
            raise ValueError("need at least one atom and one dimension")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("atom locations must be finite")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be finite and strictly positive")
        total = float(self.weights.sum())
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1 within {_WEIGHT_SUM_TOL}")
        if abs(total - 1.0) > 1e-12:
            self.weights = self.weights / total
        if np.unique(self.points, axis=0).shape[0] != m:
            raise ValueError("atom locations must be pairwise distinct")
        self._half_sq_norms = 0.5 * np.einsum("ij,ij->i", self.points, self.points)

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def half_sq_norms(self) -> np.ndarray:
        """Cached 0.5 * ||y_j||^2, shared by the transform kernels."""
        return self._half_sq_norms

    @property
    def sorted_order(self) -> np.ndarray:
        """Atom indices sorted by the first coordinate (cached; 1-D kernels)."""
        if not hasattr(self, "_sorted_order"):
            self._sorted_order = np.argsort(self.points[:, 0], kind="stable")
        return self._sorted_order


def pairwise_radii(measure: DiscreteMeasure, radius_bound: float) -> np.ndarray:
    """Coordinate bounds r_j = R * ||y_1 - y_j|| for the anchored clip set.

    r_1 is zero (the anchor atom); all other radii are positive because atoms
    are pairwise distinct.
    """
    if radius_bound < 0:
        raise ValueError("radius_bound must be nonnegative")
    diffs = measure.points - measure.points[0]
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    if np.any(dists[1:] == 0.0):
        raise ValueError("duplicate atoms: distances to the anchor must be positive")
    return radius_bound * dists


class SourceDistribution:
    """Base class for samplable sources.

    Subclasses fix ``_words_per_sample`` and implement ``_transform`` mapping
    an (n, k) block of open-interval uniforms to (n, dim) samples. They also
    expose ``radius_bound`` (a radius R with the support inside B(0, R), or an
    effective radius for unbounded sources) and ``diameter`` (support
    diameter, or an effective one), used for default step sizes and
    projection boxes.
    """

    dim: int
    bounded: bool
    radius_bound: float
    diameter: float
    _words_per_sample: int

    def _transform(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: RngStream) -> np.ndarray:
        """One draw, shape (dim,)."""
        u = rng.uniforms(self._words_per_sample)
        return self._transform(u.reshape(1, -1))[0]

    def sample_batch(self, n: int, rng: RngStream) -> np.ndarray:
        """``n`` iid draws, shape (n, dim); equals ``n`` single draws."""
        if n < 1:
            raise ValueError("batch size must be at least 1")
        u = rng.uniforms(n * self._words_per_sample)
        return self._transform(u.reshape(n, self._words_per_sample))

    def contains(self, xs: np.ndarray) -> np.ndarray:
        """Support membership for an (n, dim) batch (all True if unbounded)."""
        raise NotImplementedError


class UniformBox(SourceDistribution):
    """Uniform on the axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    bounded = True

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.any(self.hi <= self.lo):
            raise ValueError("hi must exceed lo in every coordinate")
        self.dim = self.lo.shape[0]
        self._words_per_sample = self.dim
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
        self.radius_bound = float(np.linalg.norm(corner))
        self.diameter = float(np.linalg.norm(self.hi - self.lo))

    @classmethod
    def unit(cls, dim: int) -> "UniformBox":
        return cls(np.zeros(dim), np.ones(dim))

    def _transform(self, u):
        return self.lo + u * (self.hi - self.lo)

    def contains(self, xs):
        xs = np.atleast_2d(xs)
        tol = 1e-12 * (1.0 + np.abs(self.hi - self.lo))
        return np.all((xs >= self.lo - tol) & (xs <= self.hi + tol), axis=1)


class UniformBall(SourceDistribution):
    """Uniform on the Euclidean ball B(center, radius)."""

    bounded = True

    def __init__(self, center, radius: float):
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.dim = self.center.shape[0]
        # d words for the direction, one for the radial quantile
        self._words_per_sample = self.dim + 1
        self.radius_bound = float(np.linalg.norm(self.center)) + self.radius
        self.diameter = 2.0 * self.radius

    def _transform(self, u):
        z = ndtri(u[:, : self.dim])
        norms = np.sqrt(np.einsum("ij,ij->i", z, z))
        r = self.radius * u[:, self.dim] ** (1.0 / self.dim)
        return self.center + z * (r / norms)[:, None]

    def contains(self, xs):
        xs = np.atleast_2d(xs)
        d = xs - self.center
        return np.einsum("ij,ij->i", d, d) <= (self.radius * (1.0 + 1e-12)) ** 2


class Gaussian(SourceDistribution):
    """Isotropic or axis-aligned Gaussian; unbounded support.

    ``radius_bound`` and ``diameter`` are effective values (four standard
    deviations around the mean) used only for default step sizes and
    projection boxes when no better bound is available.
    """

    bounded = False

    def __init__(self, mean, std):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.std = np.broadcast_to(
            np.asarray(std, dtype=np.float64), self.mean.shape
        ).copy()
        if np.any(self.std <= 0):
            raise ValueError("std must be positive")
        self.dim = self.mean.shape[0]
        self._words_per_sample = self.dim
        smax = float(self.std.max())
        self.radius_bound = float(np.linalg.norm(self.mean)) + 4.0 * smax
        self.diameter = 8.0 * smax

    def _transform(self, u):
        return self.mean + self.std * ndtri(u)

    def contains(self, xs):
        xs = np.atleast_2d(xs)
        return np.ones(xs.shape[0], dtype=bool)


class ShiftedUniformInterval(SourceDistribution):
    """Uniform on the 1-D interval [delta, delta + length]."""

    bounded = True

    def __init__(self, delta: float, length: float):
        if length <= 0:
            raise ValueError("length must be positive")
        self.delta = float(delta)
        self.length = float(length)
        self.dim = 1
        self._words_per_sample = 1
        self.radius_bound = max(abs(self.delta), abs(self.delta + self.length))
        self.diameter = self.length

    def _transform(self, u):
        return self.delta + u * self.length

    def contains(self, xs):
        xs = np.atleast_2d(xs)
        tol = 1e-12 * (1.0 + self.length)
        lo, hi = self.delta - tol, self.delta + self.length + tol
        return np.all((xs >= lo) & (xs <= hi), axis=1)


def save_measure_csv(path, measure: DiscreteMeasure) -> None:
    """Write a measure as UTF-8 CSV with header ``w,x1,...,xd``."""
    d = measure.dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w"] + [f"x{i + 1}" for i in range(d)])
        for w, y in zip(measure.weights, measure.points):
            writer.writerow([repr(float(w))] + [repr(float(c)) for c in y])


def load_measure_csv(path) -> DiscreteMeasure:
    """Load a measure from the ``w,x1,...,xd`` CSV format and validate it."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty measure file") from None
        d = len(header) - 1
        expected = ["w"] + [f"x{i + 1}" for i in range(d)]
        if d < 1 or [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: expected header 'w,x1,...,xd', got {header!r}")
        weights, points = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                weights.append(float(row[0]))
                points.append([float(c) for c in row[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not weights:
        raise ValueError(f"{path}: no atoms")
    return DiscreteMeasure(np.array(points), np.array(weights))
