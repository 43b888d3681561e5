"""Projected averaged stochastic gradient loops on the semi-dual.

The main loop draws samples from the source, takes a projected gradient step
on the potential, and maintains a running average:

    gamma_k = gamma1 * k^(-b)
    g_k     = Proj( g_{k-1} - gamma_k * grad_{eps_{k-1}}(X_k, g_{k-1}) )
    gbar_k  = g_k / (k+1) + k/(k+1) * gbar_{k-1}

with the regularization schedule eps_k = eps_scale * k^(-a) (eps_0 =
eps_scale). Note the off-by-one: the gradient at step k is evaluated at the
previous iteration's regularization eps_{k-1}.

Variants share the same loop: ``fixed_eps`` freezes the temperature, ``noreg``
uses the hard-assignment subgradient, and ``adam`` replaces the step rule with
first/second-moment estimates at a constant learning rate (projection and
schedule are kept so the comparison is like for like). Averaging can be plain,
log-weighted, or off. All randomness flows through counter-based streams, so a
configuration and seed fully determine every iterate, and evaluation cadence
cannot perturb the optimization path.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .measures import DiscreteMeasure, SourceDistribution
from .projection import BoxProjection, project
from .rng import RngStream
from .semidual import hard_subgradient_batch, minibatch_gradient

VARIANTS = ("drag", "fixed_eps", "noreg", "adam")
AVERAGING_MODES = ("plain", "weighted", "none")

# Stream ids: the solver owns stream 0 of its seed; evaluations at iteration t
# use stream EVAL_STREAM_BASE + t so that the two never interleave and
# evaluations at the same iteration see the same samples across variants.
SOLVER_STREAM = 0
EVAL_STREAM_BASE = 1 << 32


@dataclass
class SolverConfig:
    """Schedule, projection, averaging and variant selection for one run.

    ``gamma1 = None`` resolves to the source diameter when the run starts.
    With ``scale_gamma_by_batch`` (default), gamma1 is multiplied by
    sqrt(batch_size) as is usual for mini-batched stochastic gradients.
    """

    t_max: int
    gamma1: float | None = None
    a: float = 0.33
    b: float = 2.0 / 3.0
    eps_scale: float = 0.1
    projection: BoxProjection | None = None
    batch_size: int = 1
    scale_gamma_by_batch: bool = True
    averaging: str = "plain"
    omega: float = 2.0
    seed: int = 0
    variant: str = "drag"
    fixed_eps: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_lr: float = 1e-3
    eval_every: np.ndarray | None = None

    def validate(self) -> None:
        if self.t_max < 0:
            raise ValueError("t_max: must be nonnegative")
        if self.gamma1 is not None and self.gamma1 <= 0:
            raise ValueError("gamma1: must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size: must be at least 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant: unknown variant {self.variant!r}")
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"averaging: unknown mode {self.averaging!r}")
        if self.omega < 0:
            raise ValueError("omega: must be nonnegative")
        if self.variant in ("drag", "adam"):
            if self.a <= 0:
                raise ValueError("a: must satisfy 0 < a")
            if not 0.5 < self.b < 1.0:
                raise ValueError("b: must satisfy 1/2 < b < 1")
            if self.eps_scale <= 0:
                raise ValueError("eps_scale: must be positive")
        if self.variant == "fixed_eps":
            if self.fixed_eps is None or self.fixed_eps <= 0:
                raise ValueError("fixed_eps: must be positive for the fixed_eps variant")
            if not 0.5 < self.b < 1.0:
                raise ValueError("b: must satisfy 1/2 < b < 1")
        if self.variant == "noreg" and not 0.5 < self.b < 1.0:
            raise ValueError("b: must satisfy 1/2 < b < 1")

    def effective_gamma1(self) -> float:
        if self.gamma1 is None:
            raise ValueError("gamma1: unresolved; pass a value or resolve from the source")
        if self.scale_gamma_by_batch and self.batch_size > 1:
            return self.gamma1 * math.sqrt(self.batch_size)
        return self.gamma1


@dataclass
class SolverState:
    t: int
    g: np.ndarray
    g_avg: np.ndarray
    weight_accum: float
    rng: RngStream
    adam_m: np.ndarray | None = None
    adam_v: np.ndarray | None = None
    g0_projected: bool = False
    wall_start: float = field(default_factory=time.perf_counter)


def gradient_eps(config: SolverConfig, k: int) -> float | None:
    """Temperature used by the gradient at step k (None means hard)."""
    if config.variant == "noreg":
        return None
    if config.variant == "fixed_eps":
        return float(config.fixed_eps)
    # eps_{k-1} with eps_0 = eps_scale
    if k <= 1:
        return config.eps_scale
    return config.eps_scale * (k - 1) ** (-config.a)


def current_eps(config: SolverConfig, t: int) -> float:
    """Scheduled temperature after step t (0 for the hard variant)."""
    if config.variant == "noreg":
        return 0.0
    if config.variant == "fixed_eps":
        return float(config.fixed_eps)
    if t < 1:
        return config.eps_scale
    return config.eps_scale * t ** (-config.a)


def current_gamma(config: SolverConfig, k: int) -> float:
    """Step size at step k (the constant learning rate for adam)."""
    if config.variant == "adam":
        return config.adam_lr
    return config.effective_gamma1() * k ** (-config.b)


def init(config: SolverConfig, measure: DiscreteMeasure, g0: np.ndarray | None = None) -> SolverState:
    """Fresh state at t = 0; the default start is zero projected onto the set."""
    config.validate()
    m = measure.num_atoms
    if g0 is None:
        g0 = np.zeros(m)
    g0 = np.asarray(g0, dtype=np.float64)
    if g0.shape != (m,):
        raise ValueError("g0: length must match the number of atoms")
    projected = project(config.projection, g0)
    flagged = bool(np.any(projected != g0))
    state = SolverState(
        t=0,
        g=projected.copy(),
        g_avg=projected.copy(),
        weight_accum=math.log(1.0) ** config.omega if config.averaging == "weighted" else 0.0,
        rng=RngStream(config.seed, stream=SOLVER_STREAM),
        g0_projected=flagged,
    )
    if config.variant == "adam":
        state.adam_m = np.zeros(m)
        state.adam_v = np.zeros(m)
    return state


def weighted_average_update(
    g_avg: np.ndarray,
    g_new: np.ndarray,
    t: int,
    omega: float,
    weight_accum: float,
):
    """One step of the online log-weighted average.

    Iterate k carries weight log(k + 1)^omega, so the initial iterate gets
    zero weight for any omega > 0 and the average equals
    sum_k log(k+1)^omega g_k / sum_k log(k+1)^omega without storing iterates.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    w = math.log(t + 1.0) ** omega
    accum = weight_accum + w
    if accum <= 0.0:
        return g_new.copy(), accum
    return g_avg + (w / accum) * (g_new - g_avg), accum


def _update_average(state: SolverState, config: SolverConfig, k: int) -> None:
    if config.averaging == "plain":
        state.g_avg = state.g / (k + 1.0) + (k / (k + 1.0)) * state.g_avg
    elif config.averaging == "weighted":
        state.g_avg, state.weight_accum = weighted_average_update(
            state.g_avg, state.g, k, config.omega, state.weight_accum
        )
    else:
        state.g_avg = state.g


def apply_update(
    state: SolverState,
    config: SolverConfig,
    measure: DiscreteMeasure,
    xs: np.ndarray,
) -> SolverState:
    """Advance the state by one step using the given batch of samples.

    Split out of :func:`step` so tests can inject deterministic samples.
    """
    k = state.t + 1
    eps = gradient_eps(config, k)
    if eps is None:
        grad = hard_subgradient_batch(state.g, xs, measure)
    else:
        grad = minibatch_gradient(state.g, xs, measure, eps)

    if config.variant == "adam":
        state.adam_m = config.adam_beta1 * state.adam_m + (1.0 - config.adam_beta1) * grad
        state.adam_v = config.adam_beta2 * state.adam_v + (1.0 - config.adam_beta2) * grad * grad
        m_hat = state.adam_m / (1.0 - config.adam_beta1**k)
        v_hat = state.adam_v / (1.0 - config.adam_beta2**k)
        move = config.adam_lr * m_hat / (np.sqrt(v_hat) + 1e-8)
    else:
        move = current_gamma(config, k) * grad

    state.g = project(config.projection, state.g - move)
    _update_average(state, config, k)
    state.t = k
    return state


def step(
    state: SolverState,
    config: SolverConfig,
    src: SourceDistribution,
    measure: DiscreteMeasure,
) -> SolverState:
    """Draw a batch from the source and advance one step."""
    if state.t >= config.t_max:
        raise ValueError("t_max reached; increase t_max to continue")
    xs = src.sample_batch(config.batch_size, state.rng)
    return apply_update(state, config, measure, xs)


def default_eval_schedule(t_max: int, num: int = 40, start: int = 10) -> np.ndarray:
    """Geometrically spaced iteration numbers in [start, t_max], unique."""
    if t_max < 1:
        return np.empty(0, dtype=np.int64)
    start = min(start, t_max)
    grid = np.geomspace(start, t_max, num)
    return np.unique(np.rint(grid).astype(np.int64))


def solution(state: SolverState, config: SolverConfig) -> np.ndarray:
    """The estimate a run returns: the average, or the last iterate if off."""
    return state.g if config.averaging == "none" else state.g_avg


def run(
    config: SolverConfig,
    src: SourceDistribution,
    measure: DiscreteMeasure,
    eval_hook=None,
    iterate_hook=None,
):
    """Execute t_max steps; returns (final state, list of hook results).

    ``eval_hook(state, rng, wall_ms)`` is called at the configured iterations
    with a dedicated stream per evaluation, derived from the seed and the
    iteration number; the solver's own stream is untouched, so cadence never
    changes the optimization path. ``iterate_hook(state)`` is called after
    init and after every step (testing aid).
    """
    if config.gamma1 is None:
        config = replace(config, gamma1=src.diameter)
    state = init(config, measure)
    if iterate_hook is not None:
        iterate_hook(state)
    eval_at = config.eval_every
    if eval_at is None:
        eval_at = default_eval_schedule(config.t_max) if eval_hook is not None else ()
    eval_at = set(int(t) for t in eval_at)
    records = []
    for _ in range(config.t_max):
        step(state, config, src, measure)
        if iterate_hook is not None:
            iterate_hook(state)
        if eval_hook is not None and state.t in eval_at:
            eval_rng = RngStream(config.seed, stream=EVAL_STREAM_BASE + state.t)
            wall_ms = (time.perf_counter() - state.wall_start) * 1e3
            rec = eval_hook(state, eval_rng, wall_ms)
            if rec is not None:
                records.append(rec)
    return state, records
