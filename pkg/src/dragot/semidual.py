"""Semi-dual kernels: c-transforms, softened assignments, and gradients.

Everything here works on a potential vector ``g`` of length M paired with a
:class:`~dragot.measures.DiscreteMeasure`. The hard transform of ``g`` at a
point x is

    min_j [ 0.5 * ||x - y_j||^2 - g_j ],

and the soft transform at temperature ``eps`` replaces the minimum with
``-eps * log(sum_j w_j * exp(-. / eps))``. Exponentials are always evaluated
after subtracting the row maximum, so the kernels stay finite for ``eps`` all
the way down to 1e-12; below that callers are expected to switch to the hard
(eps = 0) code paths. Objective values are invariant under adding a constant
to ``g``; softened assignments and gradients are too.
"""

from __future__ import annotations

import numpy as np

from .measures import DiscreteMeasure, SourceDistribution
from .rng import RngStream

# Samples per chunk when streaming Monte-Carlo reductions; fixed so that
# results are independent of the total sample count's decomposition.
MC_CHUNK = 1 << 16


def _scores(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure) -> np.ndarray:
    """(n, M) array of g_j - 0.5 * ||x_i - y_j||^2, up to a per-row constant.

    The per-row constant -0.5 * ||x_i||^2 is omitted: argmax, softmax and
    max-gaps are unaffected. Value-level quantities add it back.
    """
    xs = np.atleast_2d(xs)
    return (g - measure.half_sq_norms) + xs @ measure.points.T


def _row_half_sq(xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(xs)
    return 0.5 * np.einsum("ij,ij->i", xs, xs)


def hard_values_1d(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure):
    """1-D hard transform via the sorted lower envelope; O(n log M).

    Minimizing 0.5 (x - y_j)^2 - g_j over j is, up to the common 0.5 x^2
    term, the lower envelope of lines -y_j x + (0.5 y_j^2 - g_j), whose
    slopes are strictly decreasing once atoms are sorted; assignment is then
    a binary search over the envelope breakpoints.
    """
    order = measure.sorted_order
    y = measure.points[order, 0]
    c = 0.5 * y * y - np.asarray(g, dtype=np.float64)[order]
    m = y.shape[0]
    seg_pos = np.empty(m, dtype=np.int64)  # positions into the sorted order
    starts = np.empty(m, dtype=np.float64)
    top = 0
    for j in range(m):
        start = -np.inf
        while top > 0:
            p = seg_pos[top - 1]
            # lines -y x + c with strictly decreasing slopes: intersection
            x_cross = (c[j] - c[p]) / (y[j] - y[p])
            if x_cross <= starts[top - 1]:
                top -= 1
            else:
                start = x_cross
                break
        seg_pos[top] = j
        starts[top] = start
        top += 1
    xflat = np.atleast_2d(xs)[:, 0]
    seg = np.searchsorted(starts[1:top], xflat, side="right")
    pos = seg_pos[seg]
    idx = order[pos]
    vals = 0.5 * (xflat - y[pos]) ** 2 - np.asarray(g, dtype=np.float64)[idx]
    return vals, idx


def hard_values(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure):
    """Batch hard transform: values (n,) and argmin indices (n,).

    Ties resolve to the smallest atom index (generic path); the 1-D path
    may differ only on knife-edge ties, which carry no source mass.
    """
    if measure.dim == 1:
        return hard_values_1d(g, np.atleast_2d(xs), measure)
    s = _scores(g, xs, measure)
    idx = np.argmax(s, axis=1)
    vals = _row_half_sq(xs) - s[np.arange(s.shape[0]), idx]
    return vals, idx


def soft_values(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure, eps: float) -> np.ndarray:
    """Batch soft transform at temperature ``eps > 0``, shape (n,)."""
    if eps <= 0:
        raise ValueError("eps must be positive; use the hard transform at eps = 0")
    s = _scores(g, xs, measure)
    m = s.max(axis=1)
    acc = np.exp((s - m[:, None]) / eps) @ measure.weights
    return _row_half_sq(xs) - m - eps * np.log(acc)


def softmax_batch(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure, eps: float) -> np.ndarray:
    """Softened cell assignments chi for a batch, shape (n, M); rows sum to 1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = _scores(g, xs, measure)
    s -= s.max(axis=1, keepdims=True)
    np.divide(s, eps, out=s)
    np.exp(s, out=s)
    s *= measure.weights
    s /= s.sum(axis=1, keepdims=True)
    return s


def ctransform_hard(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure):
    """Hard transform at one point: (value, argmin index), smallest index on ties."""
    vals, idx = hard_values(g, np.atleast_2d(x), measure)
    return float(vals[0]), int(idx[0])


def ctransform_soft(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure, eps: float) -> float:
    """Soft transform at one point; requires ``eps > 0``."""
    return float(soft_values(g, np.atleast_2d(x), measure, eps)[0])


def softmax_weights(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure, eps: float) -> np.ndarray:
    """Softened assignment probabilities chi(x, g) at one point, shape (M,)."""
    return softmax_batch(g, np.atleast_2d(x), measure, eps)[0]


def stochastic_gradient(g: np.ndarray, x: np.ndarray, measure: DiscreteMeasure, eps: float) -> np.ndarray:
    """Unbiased objective gradient from one sample: chi(x, g) - w.

    Entries sum to zero and lie in [-w_j, 1 - w_j] componentwise.
    """
    return softmax_weights(g, x, measure, eps) - measure.weights


def minibatch_gradient(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure, eps: float) -> np.ndarray:
    """Mean of per-sample gradients over an (n, d) batch."""
    xs = np.atleast_2d(xs)
    if xs.shape[0] < 1:
        raise ValueError("batch must contain at least one sample")
    chi = softmax_batch(g, xs, measure, eps)
    return chi.mean(axis=0) - measure.weights


def hard_subgradient_batch(g: np.ndarray, xs: np.ndarray, measure: DiscreteMeasure) -> np.ndarray:
    """eps = 0 subgradient: cell-assignment frequencies minus the weights."""
    xs = np.atleast_2d(xs)
    if xs.shape[0] < 1:
        raise ValueError("batch must contain at least one sample")
    _, idx = hard_values(g, xs, measure)
    freq = np.bincount(idx, minlength=measure.num_atoms) / xs.shape[0]
    return freq - measure.weights


def mc_objective(
    g: np.ndarray,
    src: SourceDistribution,
    measure: DiscreteMeasure,
    eps: float,
    n: int,
    rng: RngStream,
) -> float:
    """Monte-Carlo estimate of the semi-dual objective.

    Returns -(1/n) sum_i g^{c,eps}(x_i) - sum_j g_j w_j, with the hard
    transform when ``eps`` is zero. Chunks of fixed size are reduced in
    order, so the value depends only on the stream position, not on how the
    caller arrived at it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    total = 0.0
    remaining = n
    while remaining > 0:
        m = min(MC_CHUNK, remaining)
        xs = src.sample_batch(m, rng)
        if eps == 0.0:
            vals, _ = hard_values(g, xs, measure)
        else:
            vals = soft_values(g, xs, measure, eps)
        total += float(vals.sum())
        remaining -= m
    return -total / n - float(g @ measure.weights)
