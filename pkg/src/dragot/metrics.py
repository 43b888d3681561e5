"""Error functionals against ground truth, evaluation records, rate fits.

Potential errors are measured in the quotient norm that ignores constant
shifts (both vectors are mean-centered first). Cost gaps compare Monte-Carlo
objective values for the estimate and the optimum on common random numbers,
which removes the shared sampling variance and leaves the gap itself. Map
errors compare induced transport images against the instance's assignment
oracle on fresh samples.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .ground_truth import GroundTruthInstance
from .rng import RngStream
from .semidual import MC_CHUNK, hard_values, softmax_batch
from .transport_map import assign_cells

RECORD_HEADER = ["t", "eps", "gamma", "pot_err_sq", "cost_gap", "map_err", "wall_ms"]


@dataclass
class EvalRecord:
    t: int
    eps: float
    gamma: float
    pot_err_sq: float
    cost_gap: float
    map_err: float
    wall_ms: float


def write_records(path, records) -> None:
    """Write records as CSV with full float round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        for r in records:
            writer.writerow(
                [r.t] + [repr(float(getattr(r, name))) for name in RECORD_HEADER[1:]]
            )


def read_records(path):
    """Read an evaluation CSV; the header must match the documented schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty records file") from None
        if [h.strip() for h in header] != RECORD_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORD_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(RECORD_HEADER)} fields")
            try:
                out.append(
                    EvalRecord(int(row[0]), *(float(v) for v in row[1:]))
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def average_records(per_seed_records):
    """Seed-mean of parallel record lists sharing the same iteration grid."""
    if not per_seed_records:
        raise ValueError("no record lists to average")
    ts = [tuple(r.t for r in recs) for recs in per_seed_records]
    if len(set(ts)) != 1:
        raise ValueError("record lists do not share an evaluation grid")
    out = []
    for rows in zip(*per_seed_records):
        vals = {
            name: float(np.mean([getattr(r, name) for r in rows]))
            for name in ("eps", "gamma", "pot_err_sq", "cost_gap", "map_err", "wall_ms")
        }
        out.append(EvalRecord(rows[0].t, **vals))
    return out


def potential_error_sq(g: np.ndarray, g_star: np.ndarray) -> float:
    """Squared distance between mean-centered potentials."""
    g = np.asarray(g, dtype=np.float64)
    g_star = np.asarray(g_star, dtype=np.float64)
    if g.shape != g_star.shape:
        raise ValueError("potentials must have equal length")
    d = (g - g.mean()) - (g_star - g_star.mean())
    return float(d @ d)


def cost_gap(
    g: np.ndarray,
    gt: GroundTruthInstance,
    n: int,
    rng: RngStream,
    signed: bool = False,
) -> float:
    """Monte-Carlo objective gap between ``g`` and the optimal potential.

    Both unregularized objectives are estimated on the same ``n`` samples
    (common random numbers). The signed value H(g) - H(g_star) is nonnegative
    up to sampling noise since the optimum minimizes the objective.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    measure = gt.target
    acc = 0.0
    remaining = n
    while remaining > 0:
        m = min(MC_CHUNK, remaining)
        xs = gt.source.sample_batch(m, rng)
        vals_star, _ = hard_values(gt.g_star, xs, measure)
        vals_g, _ = hard_values(g, xs, measure)
        acc += float((vals_star - vals_g).sum())
        remaining -= m
    gap = acc / n - float((np.asarray(g) - gt.g_star) @ measure.weights)
    return gap if signed else abs(gap)


def map_error(
    g: np.ndarray,
    gt: GroundTruthInstance,
    n: int,
    rng: RngStream,
    p: float = 2.0,
) -> float:
    """Mean p-th power transport discrepancy (1/n) sum ||T*(x) - T_g(x)||^p."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if p < 1:
        raise ValueError("p must be at least 1")
    measure = gt.target
    pts = measure.points
    acc = 0.0
    remaining = n
    while remaining > 0:
        m = min(MC_CHUNK, remaining)
        xs = gt.source.sample_batch(m, rng)
        true_idx = gt.map_oracle(xs)
        est_idx = assign_cells(g, xs, measure)
        moved = true_idx != est_idx
        if np.any(moved):
            diff = pts[true_idx[moved]] - pts[est_idx[moved]]
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            acc += float((dist**p).sum())
        remaining -= m
    return acc / n


def rsc_ratio(
    g: np.ndarray,
    gt: GroundTruthInstance,
    eps: float,
    n: int,
    rng: RngStream,
) -> float:
    """Empirical curvature probe <grad H_eps(g), g - g*> / ||g - g*||^2.

    Both the Monte-Carlo gradient and the difference are mean-centered; the
    denominator is the quotient-norm error. Nonnegative up to sampling noise
    by convexity.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    den = potential_error_sq(g, gt.g_star)
    if den == 0.0:
        raise ValueError("g equals the optimum in the quotient norm")
    measure = gt.target
    chi_sum = np.zeros(measure.num_atoms)
    remaining = n
    while remaining > 0:
        m = min(MC_CHUNK, remaining)
        xs = gt.source.sample_batch(m, rng)
        chi_sum += softmax_batch(g, xs, measure, eps).sum(axis=0)
        remaining -= m
    grad = chi_sum / n - measure.weights
    grad = grad - grad.mean()
    diff = np.asarray(g) - gt.g_star
    diff = diff - diff.mean()
    return float(grad @ diff) / den


def fit_rate(records, field: str, window: float = 0.5) -> float:
    """Log-log slope of a record field over the trailing window of records.

    Records with nonpositive field values (or t <= 0) are dropped; at least
    five usable points are required.
    """
    if not 0 < window <= 1:
        raise ValueError("window must be in (0, 1]")
    k = max(int(np.ceil(window * len(records))), 1)
    tail = records[-k:]
    pts = [
        (r.t, getattr(r, field))
        for r in tail
        if r.t > 0 and getattr(r, field) > 0
    ]
    if len(pts) < 5:
        raise ValueError("need at least 5 usable points in the fit window")
    logt = np.log([p[0] for p in pts])
    logv = np.log([p[1] for p in pts])
    slope, _ = np.polyfit(logt, logv, 1)
    return float(slope)
