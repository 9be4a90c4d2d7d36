import pytest
import numpy as np

from cc_synth import dynamics as dyn
from cc_synth import distributions as dist
from cc_synth.errors import DimensionMismatch


def _random_ltv(seed=0, n=3, m=2, p=2, N=4):
    rng = np.random.default_rng(seed)
    A = [np.eye(n) + 0.1 * rng.standard_normal((n, n)) for _ in range(N)]
    B = [rng.standard_normal((n, m)) for _ in range(N)]
    E = [rng.standard_normal((n, p)) for _ in range(N)]
    return dyn.LtvSystem(A, B, E)


def test_stack_matches_simulation():
    sys = _random_ltv()
    ss = dyn.stack(sys)
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal(sys.n)
    U = rng.standard_normal(sys.m * sys.horizon)
    W = rng.standard_normal(sys.p * sys.horizon)
    expected = dyn.simulate(sys, x0, U, W)
    assert ss.Abar @ x0 + ss.H @ U + ss.G @ W == pytest.approx(expected)
    assert ss.mean_states(x0, U, W) == pytest.approx(expected)


def test_stack_is_block_lower_triangular():
    ss = dyn.stack(_random_ltv(N=5))
    n, m = ss.n, ss.m
    for i in range(ss.horizon):
        for k in range(i + 1, ss.horizon):
            assert np.all(ss.H[i * n:(i + 1) * n, k * m:(k + 1) * m] == 0)


def test_time_invariant_and_default_injection():
    sys = dyn.LtvSystem.time_invariant([[1.0]], [[0.5]], horizon=3)
    assert (sys.n, sys.m, sys.p, sys.horizon) == (1, 1, 1, 3)
    ss = dyn.stack(sys)
    assert ss.G == pytest.approx(np.tril(np.ones((3, 3))))
    assert ss.H == pytest.approx(0.5 * np.tril(np.ones((3, 3))))


def test_ltv_shape_errors():
    with pytest.raises(DimensionMismatch):
        dyn.LtvSystem([np.eye(2)] * 3, [np.ones((2, 1))] * 2)
    with pytest.raises(DimensionMismatch):
        dyn.LtvSystem([np.eye(2)] * 2, [np.ones((3, 1))] * 2)
    with pytest.raises(ValueError):
        dyn.LtvSystem(np.eye(2), np.ones((2, 1)))


def test_state_moments():
    sys = _random_ltv()
    ss = dyn.stack(sys)
    W = dist.DisturbanceVector.broadcast(
        [dist.Exponential(0.5), dist.Uniform(-1, 1)], sys.horizon)
    x0 = np.ones(sys.n)
    U = np.zeros(sys.m * sys.horizon)
    mu, cov = dyn.state_moments(ss, x0, U, W)
    assert mu == pytest.approx(ss.Abar @ x0 + ss.G @ W.means())
    dense = ss.G @ np.diag(W.variances()) @ ss.G.T
    assert cov.dense() == pytest.approx(dense)
    q = np.arange(ss.n * ss.horizon, dtype=float)
    assert cov.quad_form(q) == pytest.approx(q @ dense @ q)
    assert cov.norm(q) == pytest.approx(np.sqrt(q @ dense @ q))
    weights = np.linspace(1, 2, len(q))
    assert cov.trace(weights) == pytest.approx(np.trace(np.diag(weights) @
                                                        dense))
    assert cov.trace(np.diag(weights)) == pytest.approx(cov.trace(weights))
    assert cov.diagonal() == pytest.approx(np.diag(dense))
    with pytest.raises(DimensionMismatch):
        dyn.state_moments(ss, x0, U, dist.DisturbanceVector(
            [dist.Gaussian()]))


def test_state_moments_random_initial_state():
    sys = _random_ltv()
    ss = dyn.stack(sys)
    x0 = dist.DisturbanceVector([dist.Uniform(-1, 1)] * sys.n)
    W = dist.DisturbanceVector([dist.Gaussian(0, 0.1)] *
                               (sys.p * sys.horizon))
    U = np.zeros(sys.m * sys.horizon)
    mu, cov = dyn.state_moments(ss, x0.means(), U, W, x0)
    dense = ss.Abar @ np.diag(x0.variances()) @ ss.Abar.T + \
        ss.G @ np.diag(W.variances()) @ ss.G.T
    assert cov.dense() == pytest.approx(dense)
    assert mu == pytest.approx(np.zeros(ss.n * ss.horizon))


def test_covariance_factor_validation():
    with pytest.raises(DimensionMismatch):
        dyn.CovarianceFactor(np.eye(2), [1.0])
    with pytest.raises(ValueError):
        dyn.CovarianceFactor(np.eye(2), [1.0, -1.0])


def test_zoh_double_integrator():
    sys = dyn.double_integrator(Ts=0.25, horizon=2)
    assert sys.A[0] == pytest.approx(np.array([[1.0, 0.25], [0.0, 1.0]]))
    assert sys.B[0] == pytest.approx(np.array([[0.25**2 / 2], [0.25]]))
    with pytest.raises(ValueError):
        dyn.zoh_discretize(np.zeros((2, 2)), np.ones(2), 0.0)
    with pytest.raises(DimensionMismatch):
        dyn.zoh_discretize(np.zeros((2, 2)), np.ones((3, 1)), 0.1)


def test_zoh_scalar_stable_system():
    A_d, B_d = dyn.zoh_discretize([[-2.0]], [[1.0]], 0.5)
    assert A_d[0, 0] == pytest.approx(np.exp(-1.0))
    assert B_d[0, 0] == pytest.approx((1.0 - np.exp(-1.0)) / 2.0)


def test_zoh_two_half_steps_make_one_step():
    rng = np.random.default_rng(3)
    A_c = rng.standard_normal((3, 3))
    B_c = rng.standard_normal((3, 2))
    A_h, B_h = dyn.zoh_discretize(A_c, B_c, 0.1)
    A_d, B_d = dyn.zoh_discretize(A_c, B_c, 0.2)
    assert A_d == pytest.approx(A_h @ A_h, abs=1e-12)
    # Holding u over both halves
    assert B_d == pytest.approx(A_h @ B_h + B_h, abs=1e-12)


def test_quadrotor_jacobian_matches_finite_differences():
    params = dyn.QuadrotorParams()
    A_c, B_c, hover = dyn.linearize_quadrotor(params)
    x0 = np.zeros(12)
    assert dyn.quadrotor_rhs(x0, hover, params) == pytest.approx(
        np.zeros(12), abs=1e-12)
    h = 1e-6
    for j in range(12):
        dx = np.zeros(12)
        dx[j] = h
        col = (dyn.quadrotor_rhs(x0 + dx, hover, params) -
               dyn.quadrotor_rhs(x0 - dx, hover, params)) / (2 * h)
        assert col == pytest.approx(A_c[:, j], abs=1e-6)
    for j in range(4):
        du = np.zeros(4)
        du[j] = h
        col = (dyn.quadrotor_rhs(x0, hover + du, params) -
               dyn.quadrotor_rhs(x0, hover - du, params)) / (2 * h)
        assert col == pytest.approx(B_c[:, j], rel=1e-6)


def test_quadrotor_hover():
    sys, hover = dyn.quadrotor_hover(horizon=10,
                                     E=dyn.translational_injection())
    assert hover[0] == pytest.approx(4.6892, abs=1e-4)
    assert (sys.n, sys.m, sys.p, sys.horizon) == (12, 4, 3, 10)
    # Thrust deviation only moves the vertical channel
    ss = dyn.stack(sys)
    U = np.zeros(40)
    U[0] = 1.0
    X = ss.H @ U
    assert X[2] == pytest.approx(0.25**2 / 2 / 0.478)
    assert X[0] == pytest.approx(0.0)
    with pytest.raises(ValueError):
        dyn.QuadrotorParams(mass=0.0)
