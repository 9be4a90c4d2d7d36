import pytest
import numpy as np

from cc_synth import validation as val
from cc_synth import distributions as dist
from cc_synth import problems as prob
from cc_synth.errors import DimensionMismatch
from .test_problems import small_problem


def test_proportion_ci():
    lo, hi = val.proportion_ci(90, 100)
    assert lo < 0.9 < hi
    assert hi - lo == pytest.approx(
        2 * (val.Z_95 * np.sqrt(0.09 / 100) + 0.005))
    assert val.proportion_ci(100, 100)[1] == 1.0
    assert val.proportion_ci(0, 100)[0] == 0.0
    with pytest.raises(ValueError):
        val.proportion_ci(0, 0)


def test_zero_variance_problem():
    laws = [dist.Deterministic(0.0), dist.Deterministic(0.0)]
    spec = small_problem(laws)
    U = np.full(3, -1.0)
    report = val.estimate_satisfaction(spec, U, n=1000)
    assert report.satisfaction == 1.0
    assert report.cost_stderr == pytest.approx(0.0, abs=1e-6)
    assert report.empirical_cost == pytest.approx(
        prob.objective_value(spec, U))


def test_trivially_satisfied_polytope():
    spec = small_problem(bound=1e6)
    report = val.estimate_satisfaction(spec, np.zeros(3), n=2000)
    assert report.satisfaction == 1.0
    assert np.all(report.row_violations == 0)
    assert report.satisfaction_ci95[1] == 1.0


def test_results_are_deterministic():
    spec = small_problem()
    U = np.array([-1.0, 0.5, 2.0])
    a = val.estimate_satisfaction(spec, U, n=25000, seed=7, shard_size=5000)
    b = val.estimate_satisfaction(spec, U, n=25000, seed=7, shard_size=5000)
    assert a.to_dict() == b.to_dict()
    c = val.estimate_satisfaction(spec, U, n=25000, seed=8, shard_size=5000)
    assert c.empirical_cost != a.empirical_cost


def test_estimates_match_exact_values():
    spec = small_problem()
    U = np.array([20.0, -10.0, -10.0])
    exact = prob.verify_feasibility(spec, U)
    report = val.estimate_satisfaction(spec, U, n=100000, seed=3)
    # Rows are checked one by one, so compare the per-row frequencies
    assert report.row_violations == pytest.approx(exact.delta, abs=5e-3)
    cost = prob.objective_value(spec, U)
    assert report.empirical_cost == pytest.approx(
        cost, abs=4 * report.cost_stderr)
    assert report.n_samples == 100000


def test_dumped_trajectories():
    spec = small_problem()
    report = val.estimate_satisfaction(spec, np.zeros(3), n=50, dump_limit=4)
    frame = report.trajectories
    assert list(frame.columns) == ['sample', 'step', 'x0', 'x1']
    assert len(frame) == 4 * spec.horizon
    assert frame['sample'].max() == 3


def test_simulate_batch():
    spec = small_problem()
    X = val.simulate_batch(spec.stacked, np.array([-1.0, 0.0]), np.zeros(3),
                           spec.disturbance, 1000, seed=1, shard_size=300)
    assert X.shape == (1000, 6)
    mean = spec.stacked.mean_states(np.array([-1.0, 0.0]), np.zeros(3),
                                    spec.disturbance.means())
    assert np.mean(X, axis=0) == pytest.approx(mean, abs=0.01)
    with pytest.raises(DimensionMismatch):
        val.simulate_batch(spec.stacked, np.zeros(3), np.zeros(3),
                           spec.disturbance, 10, seed=0)
    with pytest.raises(ValueError):
        val.simulate_batch(spec.stacked, np.zeros(2), np.zeros(3),
                           spec.disturbance, 0, seed=0)


def test_trajectory_frame():
    X = np.arange(12.0).reshape(2, 6)
    frame = val.trajectory_frame(X, 2)
    assert frame['step'].tolist() == [1, 2, 3, 1, 2, 3]
    assert frame['x0'].tolist() == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
