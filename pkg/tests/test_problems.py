import pytest
import numpy as np
from scipy import special

from cc_synth import problems as prob
from cc_synth import distributions as dist
from cc_synth import dynamics as dyn
from cc_synth import inversion as inv
from cc_synth.qp import qp_solve
from cc_synth.errors import (NotGaussian, DeltaTooLarge, RowInfeasible,
                             DimensionMismatch)


def small_problem(laws=None, x0=(-1.0, 0.0), bound=1.0, Delta=0.1,
                  horizon=3, input_lo=-20.0, input_hi=20.0, eta=0.1):
    """
    Double integrator that has to keep its position below bound at every
    step, disturbed on both states.
    """
    sys = dyn.double_integrator(Ts=0.25, horizon=horizon)
    laws = laws or [dist.Exponential(0.02), dist.Exponential(0.01)]
    W = dist.DisturbanceVector.broadcast(laws, horizon)
    P = np.zeros((horizon, 2 * horizon))
    for k in range(horizon):
        P[k, 2 * k] = 1.0
    return prob.ProblemSpec(
        sys, W, x0 if not isinstance(x0, tuple) else np.array(x0),
        Q=np.tile([10.0, 1.0], horizon), R=1e-3, X_d=np.zeros(2 * horizon),
        input_lo=input_lo, input_hi=input_hi, P=P,
        q=np.full(horizon, bound), Delta=Delta, eta=eta, name='small')


def gaussian_problem(Delta=0.1):
    return small_problem([dist.Gaussian(0.0, 0.05), dist.Gaussian(0.0, 0.02)],
                         Delta=Delta)


def test_problem_spec_validation():
    spec = small_problem()
    assert spec.n_inputs == 3
    assert spec.n_rows == 3
    assert spec.row_names == ['row0', 'row1', 'row2']
    assert spec.summary()['horizon'] == 3
    with pytest.raises(ValueError):
        small_problem(Delta=1.0)
    with pytest.raises(ValueError):
        prob.ProblemSpec(spec.system, spec.disturbance, spec.initial_state,
                         spec.Q, 0.0, spec.X_d, -1, 1, spec.P, spec.q, 0.1)
    with pytest.raises(ValueError):
        prob.ProblemSpec(spec.system, spec.disturbance, spec.initial_state,
                         spec.Q, spec.R, spec.X_d, -1, 1, spec.P, spec.q, 0.1,
                         epsilon=0.95)
    with pytest.raises(DimensionMismatch):
        prob.ProblemSpec(spec.system, spec.disturbance, spec.initial_state,
                         spec.Q, spec.R, spec.X_d, -1, 1, spec.P[:, :2],
                         spec.q, 0.1)
    with pytest.raises(TypeError):
        prob.ProblemSpec('system', spec.disturbance, spec.initial_state,
                         spec.Q, spec.R, spec.X_d, -1, 1, spec.P, spec.q, 0.1)


def test_build_dc_structure():
    spec = small_problem()
    dc = prob.build_dc(spec)
    assert dc.n_rows == 3
    assert dc.n_variables == 6
    assert dc.lse_bound == pytest.approx(np.log(2.9))
    assert dc.t_lo == pytest.approx(np.log(0.9))
    ss = spec.stacked
    assert dc.d == pytest.approx(spec.q - spec.P @ (ss.Abar @ [-1.0, 0.0]))
    A, lb, ub, names = dc.constraint_rows()
    assert A.shape == (len(lb), dc.n_variables)
    assert len(names) == len(ub)
    assert np.all(lb <= ub)
    for row in dc.rows:
        assert row.pwa.slopes[-1] == 0.0
        assert inv.cdf(row.law, row.x_lo) == pytest.approx(spec.epsilon,
                                                           abs=1e-6)
    data = prob.dump_program(dc)
    assert len(data['rows']) == 3
    assert data['lse_bound'] == dc.lse_bound


def test_pwa_rows_underapproximate_log_cdf():
    spec = small_problem()
    dc = prob.build_dc(spec)
    rng = np.random.default_rng(0)
    for _ in range(25):
        U = rng.uniform(-20.0, 20.0, spec.n_inputs)
        for row in dc.rows:
            x = row.d - row.M @ U
            if x < row.x_lo:
                continue
            bound = np.min(row.pwa.slopes * x + row.pwa.intercepts)
            assert bound <= np.log(inv.cdf(row.law, x)) + 1e-6


def test_risk_allocation_identity():
    rng = np.random.default_rng(1)
    for _ in range(10000):
        L = int(rng.integers(1, 51))
        Delta = rng.uniform(0.01, 0.5)
        delta = rng.uniform(0.0, 2.0 * Delta / L, L)
        t = np.log1p(-delta)
        total = np.sum(delta)
        if abs(total - Delta) < 1e-10:
            continue
        assert (total <= Delta) == (special.logsumexp(t) >= np.log(L - Delta))


def test_objective_matches_expectation():
    spec = small_problem()
    dc = prob.build_dc(spec)
    rng = np.random.default_rng(2)
    for _ in range(5):
        U = rng.uniform(-5.0, 5.0, spec.n_inputs)
        value = prob.objective_value(spec, U)
        assert dc.objective(U) == pytest.approx(value, rel=1e-10)
        costs = prob.stage_costs(spec, U)
        assert list(costs.columns) == ['step', 'tracking', 'covariance',
                                       'input', 'total']
        assert costs['total'].sum() == pytest.approx(value, rel=1e-10)
    with pytest.raises(DimensionMismatch):
        prob.objective_value(spec, np.zeros(2))


def test_verify_feasibility():
    spec = small_problem()
    safe = prob.verify_feasibility(spec, np.full(3, -20.0))
    assert safe.satisfied
    assert safe.total_risk <= spec.Delta
    unsafe = prob.verify_feasibility(spec, np.full(3, 20.0))
    assert not unsafe.satisfied
    assert unsafe.worst_row == int(np.argmax(unsafe.delta))
    assert unsafe.to_dict()['total_risk'] == unsafe.total_risk


def test_unreachable_row_is_reported():
    with pytest.raises(RowInfeasible) as err:
        prob.build_dc(small_problem(bound=-100.0))
    assert err.value.row == 0


def test_point_mass_initial_state_matches_fixed():
    fixed = prob.build_dc(small_problem())
    x0 = dist.DisturbanceVector([dist.Deterministic(-1.0),
                                 dist.Deterministic(0.0)])
    point = prob.build_dc(small_problem(x0=x0))
    assert point.d == pytest.approx(fixed.d)
    for a, b in zip(point.rows, fixed.rows):
        assert len(a.pwa) == len(b.pwa)
        assert a.x_lo == pytest.approx(b.x_lo)


def test_random_initial_state():
    x0 = dist.DisturbanceVector([dist.Uniform(-1.05, -0.95),
                                 dist.Uniform(-0.01, 0.01)])
    spec = small_problem(x0=x0)
    assert spec.random_initial_state
    dc = prob.build_dc(spec)
    assert dc.d == pytest.approx(spec.q)
    mean = prob.objective_value(small_problem(), np.zeros(3))
    assert prob.objective_value(spec, np.zeros(3)) > mean


def test_gaussian_quantile_pwa():
    approx = prob.gaussian_quantile_pwa(1e-6, 0.1, 0.05)
    grid = np.linspace(1e-6, 0.1, 500)
    exact = -special.ndtri(1.0 - grid)
    assert np.all(approx(grid) <= exact + 1e-9)
    assert np.all(exact - approx(grid) <= 0.05 + 1e-9)


def test_gaussian_qp():
    spec = gaussian_problem()
    qp = prob.build_gaussian_qp(spec)
    sol = qp_solve(qp)
    assert sol.optimal
    U, delta = sol.z[:3], sol.z[3:]
    assert np.sum(delta) <= spec.Delta + 1e-6
    report = prob.verify_feasibility(spec, U)
    assert report.total_risk <= spec.Delta + 1e-6
    assert sol.objective == pytest.approx(prob.objective_value(spec, U),
                                          rel=1e-8)


def test_gaussian_qp_rejections():
    with pytest.raises(NotGaussian):
        prob.build_gaussian_qp(small_problem())
    with pytest.raises(DeltaTooLarge):
        prob.build_gaussian_qp(gaussian_problem(Delta=0.6))
    with pytest.raises(ValueError):
        prob.build_gaussian_qp(gaussian_problem(), delta_lb=0.5)


def test_moment_baseline_qp():
    spec = small_problem()
    qp = prob.build_moment_baseline_qp(spec)
    sol = qp_solve(qp)
    assert sol.optimal
    report = prob.verify_feasibility(spec, sol.z)
    # Cantelli tightening is conservative for every law
    assert report.total_risk <= spec.Delta
    assert prob.cantelli_multiplier(0.5) == pytest.approx(1.0)
    with pytest.raises(RowInfeasible):
        prob.build_moment_baseline_qp(small_problem(bound=-100.0))
    with pytest.raises(ValueError):
        prob.build_moment_baseline_qp(small_problem(Delta=0.0))


def test_log_cdf_pwa_clipping():
    law = inv.functional_law([1.0], [dist.Gaussian(0.0, 1.0)])
    approx, x_lo, x_hi, clipped = prob.log_cdf_pwa(law, 1e-3, 0.1,
                                                   x_hi=1e3)
    assert clipped
    assert x_hi < 1e3
    assert x_lo == pytest.approx(special.ndtri(1e-3), abs=1e-6)
    with pytest.raises(ValueError):
        prob.log_cdf_pwa(law, 1e-3, 0.1, x_hi=-10.0)


def test_unbounded_inputs():
    spec = small_problem(input_lo=-np.inf, input_hi=np.inf)
    dc = prob.build_dc(spec)
    for row in dc.rows:
        assert row.clipped
        assert np.isfinite(row.x_hi)
    A, lb, ub, names = dc.constraint_rows()
    assert not np.any(np.isnan(lb))
    assert not np.any(np.isnan(ub))
