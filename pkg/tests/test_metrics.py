import math

import numpy as np
import pytest
from scipy.integrate import quad

from dragot import (
    DiscreteMeasure,
    EvalRecord,
    RngStream,
    UniformBox,
    average_records,
    cost_gap,
    example1,
    example3,
    fit_rate,
    map_error,
    potential_error_sq,
    read_records,
    rsc_ratio,
    write_records,
)
from dragot.ground_truth import GroundTruthInstance, SlabOracle
from dragot.semidual import hard_values
from oracles import analytic_map_lp_1d, analytic_objective_1d


def test_potential_error_ignores_constant_shifts():
    g_star = np.array([0.1, -0.4, 0.3])
    assert potential_error_sq(g_star + 7.0, g_star) == pytest.approx(0.0, abs=1e-28)
    pert = np.array([1.0, -1.0, 0.0])
    assert potential_error_sq(g_star + pert, g_star) == pytest.approx(2.0, abs=1e-14)
    assert potential_error_sq(g_star, g_star + pert) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(ValueError):
        potential_error_sq(np.zeros(2), np.zeros(3))


def test_cost_gap_zero_at_optimum_and_under_shifts():
    gt = example3(0.5, 4)
    assert cost_gap(gt.g_star, gt, 10_000, RngStream(1)) == 0.0
    shifted = cost_gap(gt.g_star + 3.0, gt, 100_000, RngStream(1))
    assert abs(shifted) < 1e-12


def test_cost_gap_signed_nonnegative_near_optimum():
    gt = example3(0.5, 4)
    rng = np.random.default_rng(2)
    for _ in range(10):
        pert = 0.05 * rng.normal(size=4)
        pert -= pert.mean()
        signed = cost_gap(gt.g_star + pert, gt, 200_000, RngStream(3), signed=True)
        assert signed > -1e-10


def test_cost_gap_matches_1d_analytic_difference():
    gt = example3(0.5, 4)
    rng = np.random.default_rng(4)
    pert = rng.normal(size=4)
    pert -= pert.mean()
    pert *= 0.01 / np.linalg.norm(pert)
    g = gt.g_star + pert
    ys = gt.target.points[:, 0]
    exact = analytic_objective_1d(g, ys, gt.target.weights, 0.5, 1.5) - analytic_objective_1d(
        gt.g_star, ys, gt.target.weights, 0.5, 1.5
    )
    n = 10_000_000
    est = cost_gap(g, gt, n, RngStream(5), signed=True)
    # 3 standard errors of the CRN difference
    xs = gt.source.sample_batch(200_000, RngStream(6))
    v_star, _ = hard_values(gt.g_star, xs, gt.target)
    v_g, _ = hard_values(g, xs, gt.target)
    se = (v_star - v_g).std() / math.sqrt(n)
    assert abs(est - exact) < 3 * se


def test_map_error_zero_at_optimum_and_shift_invariant():
    gt = example1(2, 10)
    assert map_error(gt.g_star, gt, 50_000, RngStream(7), p=1.0) == 0.0
    assert map_error(gt.g_star + 2.0, gt, 50_000, RngStream(7), p=1.0) == 0.0


def test_map_error_matches_1d_boundary_shift():
    # bumping the first atom's potential by 0.005 moves the first cell
    # boundary from 0.10 to 0.15; the expected L1 discrepancy is
    # (shifted mass 0.05) x (atom gap 0.1) = 0.005
    gt = example1(1, 10)
    g = gt.g_star.copy()
    g[0] += 0.005
    ys = gt.target.points[:, 0]
    exact = analytic_map_lp_1d(g, gt.g_star, ys, 0.0, 1.0, p=1.0)
    assert exact == pytest.approx(0.005, abs=1e-12)
    n = 1_000_000
    est = map_error(g, gt, n, RngStream(8), p=1.0)
    # Bernoulli-at-0.1 noise: var = 0.1^2 * 0.05 * 0.95
    se = math.sqrt(0.01 * 0.05 * 0.95 / n)
    assert abs(est - exact) < 4 * se


def test_map_error_p_sensitivity():
    gt = example1(1, 10)
    g = gt.g_star.copy()
    g[0] += 0.005
    e1 = map_error(g, gt, 200_000, RngStream(9), p=1.0)
    e2 = map_error(g, gt, 200_000, RngStream(9), p=2.0)
    # errors are one-gap jumps of size 0.1, so p=2 scales by another 0.1
    assert e2 == pytest.approx(0.1 * e1, rel=1e-12)


def symmetric_two_atom_instance():
    target = DiscreteMeasure(np.array([[-0.5], [0.5]]), np.array([0.5, 0.5]))
    return GroundTruthInstance(
        source=UniformBox(np.array([-1.0]), np.array([1.0])),
        target=target,
        g_star=np.zeros(2),
        map_oracle=SlabOracle(offset=-1.0, num_atoms=2),
        label="symmetric-pair",
    )


def quad_rsc_ratio(gap, eps):
    # E[chi_1] for g = (-gap/2, +gap/2): chi_1(x) = 1 / (1 + exp((gap + x)/eps))
    val, _ = quad(lambda x: 1.0 / (1.0 + math.exp((gap + x) / eps)), -1.0, 1.0)
    e_chi1 = 0.5 * val
    grad = np.array([e_chi1 - 0.5, 0.5 - e_chi1])
    diff = np.array([-gap / 2.0, gap / 2.0])
    return float(grad @ diff) / float(diff @ diff)


def test_rsc_ratio_against_quadrature():
    gt = symmetric_two_atom_instance()
    gap = 0.1
    g = np.array([-gap / 2.0, gap / 2.0])
    for eps in (0.05, 0.5):
        expected = quad_rsc_ratio(gap, eps)
        est = rsc_ratio(g, gt, eps, 2_000_000, RngStream(10))
        assert est == pytest.approx(expected, abs=0.02)
        assert est > 0
    # the curvature probe depends on the temperature
    assert abs(quad_rsc_ratio(gap, 0.05) - quad_rsc_ratio(gap, 0.5)) > 0.05


def test_rsc_ratio_shift_invariance_and_zero_error():
    gt = symmetric_two_atom_instance()
    g = np.array([-0.05, 0.05])
    a = rsc_ratio(g, gt, 0.2, 100_000, RngStream(11))
    b = rsc_ratio(g + 5.0, gt, 0.2, 100_000, RngStream(11))
    assert a == pytest.approx(b, abs=1e-10)
    with pytest.raises(ValueError):
        rsc_ratio(gt.g_star + 2.0, gt, 0.2, 1000, RngStream(12))


def test_rsc_ratio_nonnegative_for_random_potentials():
    gt = example1(1, 6)
    rng = np.random.default_rng(13)
    for _ in range(10):
        g = 0.1 * rng.normal(size=6)
        if potential_error_sq(g, gt.g_star) < 1e-12:
            continue
        est = rsc_ratio(g, gt, 0.1, 200_000, RngStream(14))
        assert est > -0.01


def make_records(ts, values):
    return [
        EvalRecord(t=int(t), eps=0.0, gamma=0.0, pot_err_sq=float(v), cost_gap=0.0,
                   map_err=0.0, wall_ms=0.0)
        for t, v in zip(ts, values)
    ]


def test_fit_rate_exact_power_laws():
    ts = np.unique(np.geomspace(10, 1e5, 40).astype(int))
    recs = make_records(ts, 1.0 / ts)
    assert fit_rate(recs, "pot_err_sq", window=1.0) == pytest.approx(-1.0, abs=1e-9)
    recs = make_records(ts, 3.0 * ts**-0.5)
    assert fit_rate(recs, "pot_err_sq", window=0.5) == pytest.approx(-0.5, abs=1e-9)
    recs = make_records(ts, np.full(len(ts), 2.7))
    assert fit_rate(recs, "pot_err_sq", window=1.0) == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_drops_nonpositive_and_requires_points():
    ts = [10, 20, 40, 80, 160, 320]
    vals = [1.0, 0.0, 0.5, 0.25, 0.125, 0.0625]
    recs = make_records(ts, vals)
    fit_rate(recs, "pot_err_sq", window=1.0)  # five usable points is enough
    with pytest.raises(ValueError):
        fit_rate(recs[:5], "pot_err_sq", window=1.0)
    with pytest.raises(ValueError):
        fit_rate(recs, "pot_err_sq", window=0.5)


def test_records_csv_roundtrip_and_schema(tmp_path):
    recs = [
        EvalRecord(10, 0.1, 0.5, 1.0 / 3.0, 0.01, 0.2, 12.5),
        EvalRecord(100, 0.05, 0.25, 1.0 / 7.0, 0.001, 0.1, 99.0),
    ]
    path = tmp_path / "records.csv"
    write_records(path, recs)
    text = path.read_text()
    assert text.splitlines()[0] == "t,eps,gamma,pot_err_sq,cost_gap,map_err,wall_ms"
    back = read_records(path)
    assert back == recs  # full float round trip
    path.write_text("t,eps\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        read_records(path)


def test_average_records_requires_shared_grid():
    a = make_records([1, 2], [1.0, 2.0])
    b = make_records([1, 2], [3.0, 4.0])
    mean = average_records([a, b])
    assert mean[0].pot_err_sq == 2.0
    assert mean[1].pot_err_sq == 3.0
    c = make_records([1, 3], [0.0, 0.0])
    with pytest.raises(ValueError):
        average_records([a, c])
