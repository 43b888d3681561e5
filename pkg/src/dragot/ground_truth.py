"""Benchmark instances with known optimal potentials.

Three constructions, each bundling a source, a discrete target, the exact
optimal potential ``g_star``, and a closed-form assignment oracle:

  * ``example1(d, M)``: uniform source on the unit cube, atoms equally spaced
    along the first axis at (j - 1/2) / M with the remaining coordinates
    pinned at 1/2. By symmetry the optimal potential is constant and the
    optimal cells are the slabs with first-coordinate boundaries at j / M.
  * ``example2(d, M, seed, mc_n)``: random atoms in the unit cube with a
    seeded random potential; the target weights are defined as Monte-Carlo
    masses of that potential's cells, making the potential optimal for the
    resulting instance by construction (up to Monte-Carlo accuracy).
  * ``example3(delta, M)``: 1-D uniform source on [delta, 1 + delta], atoms at
    k / M. Optimal cells are the intervals [delta + (j-1)/M, delta + j/M],
    and the potential follows from equating transport values at each
    boundary: g_{j+1} - g_j = 1/(2 M^2) - delta / M.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measures import (
    DiscreteMeasure,
    ShiftedUniformInterval,
    SourceDistribution,
    UniformBox,
    save_measure_csv,
    load_measure_csv,
)
from .rng import RngStream
from .semidual import hard_values
from .transport_map import assign_cells

# Stream namespace for instance construction; solver streams use small ids.
_GT_STREAM_BASE = 2 << 32


@dataclass(frozen=True)
class SlabOracle:
    """Closed-form assignment for 1-D equispaced cells of width 1/M.

    Maps x to the slab of (x[axis] - offset) with boundaries at j / M.
    """

    offset: float
    num_atoms: int
    axis: int = 0

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        raw = np.floor((xs[:, self.axis] - self.offset) * self.num_atoms)
        return np.clip(raw.astype(np.int64), 0, self.num_atoms - 1)


@dataclass(frozen=True)
class ArgminOracle:
    """Assignment by exhaustive transform minimization at a fixed potential."""

    measure: DiscreteMeasure
    g: np.ndarray

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        return assign_cells(self.g, xs, self.measure)


@dataclass
class GroundTruthInstance:
    source: SourceDistribution
    target: DiscreteMeasure
    g_star: np.ndarray
    map_oracle: object
    label: str
    meta: dict = field(default_factory=dict)


def example1(d: int, m: int) -> GroundTruthInstance:
    """Uniform cube source, collinear equispaced atoms, constant potential."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be at least 1")
    points = np.full((m, d), 0.5)
    points[:, 0] = (np.arange(m) + 0.5) / m
    target = DiscreteMeasure(points, np.full(m, 1.0 / m))
    return GroundTruthInstance(
        source=UniformBox.unit(d),
        target=target,
        g_star=np.zeros(m),
        map_oracle=SlabOracle(offset=0.0, num_atoms=m),
        label=f"example1(d={d}, M={m})",
    )


def example2(d: int, m: int, seed: int, mc_n: int = 10_000_000) -> GroundTruthInstance:
    """Random atoms and potential; weights calibrated so the potential is optimal."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be at least 1")
    if mc_n < 100_000:
        raise ValueError("mc_n must be at least 1e5")
    source = UniformBox.unit(d)
    for attempt in range(10):
        rng = RngStream(seed, stream=_GT_STREAM_BASE + attempt)
        points = rng.uniforms(m * d).reshape(m, d)
        g_star = 0.2 * rng.uniforms(m) - 0.1
        g_star[0] = 0.0  # anchor; weights depend only on differences
        scratch = _measure_unchecked(points, m)
        counts = np.zeros(m, dtype=np.int64)
        remaining = mc_n
        chunk = max(1, (1 << 22) // d)  # keep sample blocks ~32 MB even for large d
        while remaining > 0:
            k = min(chunk, remaining)
            xs = source.sample_batch(k, rng)
            _, idx = hard_values(g_star, xs, scratch)
            counts += np.bincount(idx, minlength=m)
            remaining -= k
        if np.all(counts > 0):
            target = DiscreteMeasure(points, counts / mc_n)
            return GroundTruthInstance(
                source=source,
                target=target,
                g_star=g_star,
                map_oracle=ArgminOracle(target, g_star),
                label=f"example2(d={d}, M={m}, seed={seed})",
                meta={"mc_n": mc_n, "attempt": attempt},
            )
    raise ValueError("degenerate weights: some cell stayed empty after 10 resamples")


def _measure_unchecked(points: np.ndarray, m: int) -> DiscreteMeasure:
    # Weights are placeholders during calibration; validated on the final build.
    return DiscreteMeasure(points, np.full(m, 1.0 / m))


def example3(delta: float, m: int) -> GroundTruthInstance:
    """1-D shifted uniform source with atoms at k / M.

    Mass balance forces cell boundaries at delta + j / M; the potential
    increments are constant, 1/(2 M^2) - delta / M.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    points = ((np.arange(m) + 1.0) / m).reshape(m, 1)
    target = DiscreteMeasure(points, np.full(m, 1.0 / m))
    increment = 1.0 / (2.0 * m * m) - delta / m
    g_star = increment * np.arange(m, dtype=np.float64)
    return GroundTruthInstance(
        source=ShiftedUniformInterval(delta, 1.0),
        target=target,
        g_star=g_star,
        map_oracle=SlabOracle(offset=delta, num_atoms=m),
        label=f"example3(delta={delta}, M={m})",
    )


def save_instance(prefix, instance: GroundTruthInstance) -> None:
    """Write ``<prefix>.csv`` (measure) and ``<prefix>.gstar.json`` (potential)."""
    prefix = Path(prefix)
    save_measure_csv(prefix.with_suffix(".csv"), instance.target)
    sidecar = {
        "label": instance.label,
        "g_star": [float(v) for v in instance.g_star],
        "meta": instance.meta,
    }
    prefix.with_suffix(".gstar.json").write_text(json.dumps(sidecar, indent=2))


def load_instance(prefix, source: SourceDistribution) -> GroundTruthInstance:
    """Reload a saved instance; the assignment oracle becomes argmin-based."""
    prefix = Path(prefix)
    target = load_measure_csv(prefix.with_suffix(".csv"))
    sidecar = json.loads(prefix.with_suffix(".gstar.json").read_text())
    g_star = np.asarray(sidecar["g_star"], dtype=np.float64)
    if g_star.shape[0] != target.num_atoms:
        raise ValueError("sidecar potential length does not match the measure")
    return GroundTruthInstance(
        source=source,
        target=target,
        g_star=g_star,
        map_oracle=ArgminOracle(target, g_star),
        label=sidecar.get("label", str(prefix)),
        meta=sidecar.get("meta", {}),
    )
