"""Cell assignment and map evaluation induced by a potential.

A potential ``g`` partitions the source space into power cells, one per atom;
the transport map induced by ``g`` sends every point of cell j to atom y_j.
Assignment ties on cell boundaries resolve to the smallest atom index, and a
boundary hint is reported when the two best candidates are within a 1e-12
relative tolerance (boundaries carry no source mass, so this only matters for
deterministic testing).
"""

from __future__ import annotations

import csv
from typing import NamedTuple

import numpy as np

from .measures import DiscreteMeasure, SourceDistribution
from .rng import RngStream
from .semidual import MC_CHUNK, _row_half_sq, _scores, hard_values

_TIE_RTOL = 1e-12


class CellAssignment(NamedTuple):
    index: int
    on_boundary: bool


def assign_cell(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure) -> CellAssignment:
    """Cell index of ``x`` under ``g`` (0-based), with a near-tie hint."""
    xs = np.atleast_2d(x)
    s = _scores(g, xs, measure)[0]
    idx = int(np.argmax(s))
    on_boundary = False
    if measure.num_atoms > 1:
        value = float(_row_half_sq(xs)[0]) - s[idx]
        runner_up = -np.partition(-s, 1)[1]  # second largest score
        gap = s[idx] - runner_up  # equals runner-up value minus best value
        on_boundary = gap < _TIE_RTOL * (1.0 + abs(value))
    return CellAssignment(idx, on_boundary)


def assign_cells(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure) -> np.ndarray:
    """Cell indices for an (n, d) batch, shape (n,) of ints."""
    _, idx = hard_values(g, xs, measure)
    return idx


def map_apply(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure) -> np.ndarray:
    """Transport image of one point: the atom of its cell."""
    return measure.points[assign_cell(g, x, measure).index]


def map_apply_batch(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure) -> np.ndarray:
    """Transport images for an (n, d) batch, shape (n, d)."""
    return measure.points[assign_cells(g, xs, measure)]


def cell_masses(
    g: np.ndarray,
    src: SourceDistribution,
    measure: DiscreteMeasure,
    n: int,
    rng: RngStream,
) -> np.ndarray:
    """Monte-Carlo cell masses: assignment frequencies over ``n`` samples."""
    if n < 1:
        raise ValueError("n must be at least 1")
    counts = np.zeros(measure.num_atoms, dtype=np.int64)
    remaining = n
    while remaining > 0:
        m = min(MC_CHUNK, remaining)
        xs = src.sample_batch(m, rng)
        counts += np.bincount(assign_cells(g, xs, measure), minlength=measure.num_atoms)
        remaining -= m
    return counts / n


def mk_quantile_labels(
    g: np.ndarray,
    xs: np.ndarray,
    measure: DiscreteMeasure,
    bands: int,
):
    """Quantile band and cell index for points of the unit ball.

    Band k (1-based) collects points with ||x|| in ((k-1)/bands, k/bands];
    the cell index is the usual assignment. Points outside the unit ball are
    rejected.
    """
    if bands < 1:
        raise ValueError("bands must be at least 1")
    xs = np.atleast_2d(xs)
    norms = np.sqrt(np.einsum("ij,ij->i", xs, xs))
    if np.any(norms > 1.0 + 1e-12):
        raise ValueError("all points must lie inside the unit ball")
    band = np.clip(np.ceil(bands * norms).astype(np.int64), 1, bands)
    return band, assign_cells(g, xs, measure)


def write_pointcloud_csv(path, xs: np.ndarray, bands: np.ndarray, atoms: np.ndarray, mapped: np.ndarray) -> None:
    """Export (x, band, atom, T(x)) rows: ``x1..xd,band,atom,tx1..txd``."""
    xs = np.atleast_2d(xs)
    mapped = np.atleast_2d(mapped)
    d = xs.shape[1]
    header = [f"x{i + 1}" for i in range(d)] + ["band", "atom"] + [f"tx{i + 1}" for i in range(d)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, b, a, t in zip(xs, bands, atoms, mapped):
            row = [repr(float(c)) for c in x] + [int(b), int(a)]
            row += [repr(float(c)) for c in t]
            writer.writerow(row)
