"""Acceptance suite.

Runs the pinned benchmark configurations once per session (shared across
criteria) and checks the fitted convergence rates, the variant orderings, and
the always-on property identities. Each criterion prints a single PASS/FAIL
line (visible with ``pytest -s`` or on failure).

Rate fits use the trailing 20% of the 40 log-spaced evaluation points: at the
desk-scale configuration (M = 100, t_max = 1e5) the first half of the grid is
visibly pre-asymptotic, and rates are asymptotic statements; see the decision
ledger for the measured decade-by-decade slopes behind this choice.
"""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from dragot import (
    DiscreteMeasure,
    RngStream,
    SolverConfig,
    UniformBox,
    cell_masses,
    cost_box,
    ctransform_hard,
    ctransform_soft,
    example1,
    example2,
    example3,
    lipschitz_box,
    pairwise_radii,
    project,
    run,
    softmax_weights,
    stochastic_gradient,
    weighted_average_update,
)
from dragot.metrics import (
    EvalRecord,
    average_records,
    cost_gap,
    fit_rate,
    map_error,
    potential_error_sq,
)
from dragot.semidual import minibatch_gradient
from dragot.solvers import current_eps, current_gamma, default_eval_schedule, solution
from oracles import brute_hard, fd_gradient

SEEDS = range(10)
T_MAX = 100_000
RATE_WINDOW = 0.2
N_EVAL = 1_000_000
WORKERS = 2


def _report(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared heavy runs


def _ex3_worker(seed):
    gt = example3(0.5, 100)
    proj = lipschitz_box(pairwise_radii(gt.target, gt.source.radius_bound))
    cfg = SolverConfig(
        t_max=T_MAX,
        gamma1=gt.source.diameter,
        a=0.33,
        b=2.0 / 3.0,
        eps_scale=0.1,
        projection=proj,
        batch_size=16,
        seed=seed,
    )
    cfg.eval_every = default_eval_schedule(T_MAX, 40, 10)
    records = []

    def hook(state, rng, wall_ms):
        g = solution(state, cfg)
        records.append(
            EvalRecord(
                t=state.t,
                eps=current_eps(cfg, state.t),
                gamma=current_gamma(cfg, state.t),
                pot_err_sq=potential_error_sq(g, gt.g_star),
                cost_gap=cost_gap(g, gt, N_EVAL, rng),
                map_err=map_error(g, gt, N_EVAL, rng, p=1.0),
                wall_ms=wall_ms,
            )
        )

    run(cfg, gt.source, gt.target, eval_hook=hook)
    return records


def _ex1_worker(args):
    label, overrides, seed = args
    gt = example1(2, 200)
    proj = lipschitz_box(pairwise_radii(gt.target, gt.source.radius_bound))
    cfg = SolverConfig(
        t_max=T_MAX, gamma1=gt.source.diameter, projection=proj, seed=seed, **overrides
    )
    state, _ = run(cfg, gt.source, gt.target)
    return label, seed, potential_error_sq(solution(state, cfg), gt.g_star)


EX1_VARIANTS = {
    "drag033": dict(variant="drag", a=0.33),
    "fixed05": dict(variant="fixed_eps", fixed_eps=0.5),
    "fixed005": dict(variant="fixed_eps", fixed_eps=0.05),
    "noreg": dict(variant="noreg"),
    "drag03": dict(variant="drag", a=0.3),
    "drag05": dict(variant="drag", a=0.5),
    "drag033_b16": dict(variant="drag", a=0.33, batch_size=16),
}


@pytest.fixture(scope="session")
def ex3_mean_records():
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        per_seed = list(pool.map(_ex3_worker, SEEDS))
    return average_records(per_seed)


@pytest.fixture(scope="session")
def ex1_final_errors():
    jobs = [(label, ov, seed) for label, ov in EX1_VARIANTS.items() for seed in SEEDS]
    finals = {label: [] for label in EX1_VARIANTS}
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        for label, _, err in pool.map(_ex1_worker, jobs):
            finals[label].append(err)
    return {label: float(np.mean(v)) for label, v in finals.items()}


# ---------------------------------------------------------------------------
# rate reproduction (Example 3, M = 100, DRAG defaults, batch 16, 10 seeds)


def test_rate_potential(ex3_mean_records):
    slope = fit_rate(ex3_mean_records, "pot_err_sq", RATE_WINDOW)
    _report(
        "rate: potential error",
        -1.25 <= slope <= -0.75,
        f"fitted slope {slope:.3f}, window [-1.25, -0.75]",
    )


def test_rate_cost(ex3_mean_records):
    slope = fit_rate(ex3_mean_records, "cost_gap", RATE_WINDOW)
    _report(
        "rate: objective gap",
        -1.3 <= slope <= -0.7,
        f"fitted slope {slope:.3f}, window [-1.3, -0.7]",
    )


def test_rate_map(ex3_mean_records):
    slope = fit_rate(ex3_mean_records, "map_err", RATE_WINDOW)
    _report(
        "rate: map error (p=1)",
        -0.7 <= slope <= -0.3,
        f"fitted slope {slope:.3f}, window [-0.7, -0.3]",
    )


# ---------------------------------------------------------------------------
# schedule comparisons (Example 1, M = 200, 10 seeds)


def test_decreasing_beats_fixed_regularization(ex1_final_errors):
    drag = ex1_final_errors["drag033"]
    rivals = {k: ex1_final_errors[k] for k in ("fixed05", "fixed005", "noreg")}
    _report(
        "ordering: scheduled regularization beats fixed and none",
        all(drag < v for v in rivals.values()),
        f"drag {drag:.3e} vs " + ", ".join(f"{k} {v:.3e}" for k, v in rivals.items()),
    )


def test_decay_exponent_robustness(ex1_final_errors):
    lo, hi = sorted((ex1_final_errors["drag03"], ex1_final_errors["drag05"]))
    ratio = hi / lo
    all_beat = all(
        ex1_final_errors[k] < ex1_final_errors["noreg"]
        for k in ("drag03", "drag033", "drag05")
    )
    _report(
        "robustness: decay exponents a in {0.3, 0.5}",
        ratio < 3.0 and all_beat,
        f"final-error ratio {ratio:.2f} (< 3), decreasing variants beat noreg: {all_beat}",
    )


def test_minibatch_at_equal_iteration_count(ex1_final_errors):
    b16, b1 = ex1_final_errors["drag033_b16"], ex1_final_errors["drag033"]
    _report(
        "mini-batch: batch 16 with sqrt-scaled step at equal t",
        b16 <= b1,
        f"batch16 {b16:.3e} <= batch1 {b1:.3e}",
    )


# ---------------------------------------------------------------------------
# always-on property suite


def _random_instance(rng):
    m = int(rng.integers(2, 8))
    d = int(rng.integers(1, 4))
    pts = rng.normal(size=(m, d))
    w = rng.random(m) + 0.1
    return DiscreteMeasure(pts, w / w.sum())


def test_property_gradient_identities():
    rng = np.random.default_rng(50)
    for _ in range(100):
        meas = _random_instance(rng)
        g = rng.normal(size=meas.num_atoms)
        x = rng.normal(size=meas.dim)
        eps = float(10 ** rng.uniform(-3, 0.5))
        chi = softmax_weights(g, x, meas, eps)
        grad = stochastic_gradient(g, x, meas, eps)
        assert abs(chi.sum() - 1.0) < 1e-12
        assert abs(grad.sum()) < 1e-10
        assert np.max(np.abs(chi - softmax_weights(g + 1.9, x, meas, eps))) < 1e-12
        v, i = ctransform_hard(g, x, meas)
        v2, i2 = ctransform_hard(g + 1.9, x, meas)
        assert i == i2
        hard = v
        soft = ctransform_soft(g, x, meas, eps)
        assert hard <= soft + 1e-12
        assert soft <= hard + eps * math.log(1.0 / meas.weights.min()) + 1e-12
        f = rng.normal(size=meas.num_atoms)
        vf, _ = ctransform_hard(f, x, meas)
        assert abs(v - vf) <= np.max(np.abs(g - f)) + 1e-12
    _report("properties: simplex, zero-sum, shifts, sandwich, non-expansive", True, "100 random instances")


def test_property_projection_suite():
    rng = np.random.default_rng(51)
    radii = np.concatenate([[0.0], rng.random(7)])
    for proj in (lipschitz_box(radii), cost_box(0.9)):
        for _ in range(100):
            g, f = rng.normal(size=8) * 2, rng.normal(size=8) * 2
            pg, pf = project(proj, g), project(proj, f)
            assert np.array_equal(project(proj, pg), pg)
            assert proj.contains(pg)
            assert np.linalg.norm(pg - pf) <= np.linalg.norm(g - f) + 1e-15
    _report("properties: projection idempotent, member, non-expansive", True, "2 sets x 100 pairs")


def test_property_cell_assignment_brute_force():
    rng = np.random.default_rng(52)
    from dragot import assign_cell, assign_cells

    checked = 0
    while checked < 10_000:
        meas = _random_instance(rng)
        g = rng.normal(size=meas.num_atoms)
        xs = rng.normal(size=(50, meas.dim))
        idx = assign_cells(g, xs, meas)
        for i, x in enumerate(xs):
            if assign_cell(g, x, meas).on_boundary:
                continue
            _, bidx = brute_hard(g, x, meas.points)
            assert idx[i] == bidx
            checked += 1
    _report("properties: brute-force assignment equivalence", True, f"{checked} instances")


def test_property_fd_gradient_agreement():
    rng = np.random.default_rng(53)
    meas = DiscreteMeasure(rng.normal(size=(5, 2)), np.full(5, 0.2))
    g = 0.2 * rng.normal(size=5)
    xs = rng.normal(size=(300, 2))
    grad = minibatch_gradient(g, xs, meas, 0.3)
    fd = fd_gradient(g, xs, meas.points, meas.weights, 0.3)
    err = float(np.max(np.abs(grad - fd)))
    _report("properties: gradient matches finite differences", err < 1e-5, f"max dev {err:.2e}")


def test_property_averaging_oracles():
    gt = example1(1, 5)
    cfg = SolverConfig(t_max=100, gamma1=1.0, projection=None, seed=54)
    stored = []
    state, _ = run(cfg, gt.source, gt.target, iterate_hook=lambda s: stored.append(s.g.copy()))
    plain_dev = float(np.max(np.abs(state.g_avg - np.mean(stored, axis=0))))

    omega = 2.0
    g_avg, accum = stored[0].copy(), 0.0
    for t in range(1, 51):
        g_avg, accum = weighted_average_update(g_avg, stored[t], t, omega, accum)
    weights = np.array([math.log(k + 1.0) ** omega for k in range(51)])
    explicit = (weights[:, None] * np.array(stored[:51])).sum(axis=0) / weights.sum()
    weighted_dev = float(np.max(np.abs(g_avg - explicit)))
    _report(
        "properties: averaging recursions vs stored iterates",
        plain_dev < 1e-9 and weighted_dev < 1e-9,
        f"plain dev {plain_dev:.2e}, weighted dev {weighted_dev:.2e}",
    )


def test_property_ground_truth_certificates():
    worst = -np.inf
    for gt in (example1(2, 10), example3(0.5, 10), example2(2, 5, seed=4, mc_n=2_000_000)):
        masses = cell_masses(gt.g_star, gt.source, gt.target, 1_000_000, RngStream(55))
        w = gt.target.weights
        bound = 4.0 * np.sqrt(w * (1.0 - w) / 1_000_000)
        worst = max(worst, float(np.max(np.abs(masses - w) - bound)))
    _report("properties: optimality certificates (4 sigma)", worst < 0.0, f"worst margin {worst:.2e}")


def test_property_run_determinism_csv(tmp_path):
    from dragot.cli import main
    from dragot.metrics import read_records

    cfg_text = (
        "instance.kind = example3\ninstance.m = 6\n"
        "solver.t_max = 400\nsolver.seed = 2\n"
        "eval.n_cost = 2000\neval.n_map = 2000\neval.points = 8\n"
        "repeats = 2\n"
    )
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        cfg = tmp_path / f"{tag}.cfg"
        cfg.write_text(cfg_text + f"output_dir = {out}\n")
        assert main(["run", "--config", str(cfg)]) == 0
        outs.append(out)
    identical = True
    for name in ("run_2.csv", "run_3.csv"):
        for ra, rb in zip(read_records(outs[0] / name), read_records(outs[1] / name)):
            ra.wall_ms = rb.wall_ms = 0.0
            identical = identical and ra == rb
    _report("properties: bit-identical reruns modulo wall time", identical, "2 seeds x 8 evals")
