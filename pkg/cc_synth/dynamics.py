"""
Linear time-varying systems over a finite horizon.

A system x(k+1) = A(k) x(k) + B(k) u(k) + E(k) w(k), k = 0..N-1, is stacked
into X = A_bar x(0) + H U + G W with X = [x(1); ...; x(N)]. The covariance of
X is kept in the factored form F diag(var) F^T and only ever evaluated
through quadratic forms and traces.
"""
from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch

logger = logging.getLogger(__name__)


def _is_single(matrices):
    return isinstance(matrices, np.ndarray) and matrices.ndim == 2


def _as_sequence(matrices, horizon, name):
    if _is_single(matrices):
        if horizon is None:
            raise ValueError("A horizon is needed when '{}' is a single "
                             "matrix.".format(name))
        return [matrices.astype(float)] * int(horizon)
    return [np.atleast_2d(np.asarray(M, dtype=float)) for M in matrices]


class LtvSystem:
    """
    Time-varying linear system with additive disturbance

    Args:
        A: List of N state matrices (n x n), or a single matrix together
            with horizon.
        B: List of N input matrices (n x m), or a single matrix.
        E: Optional disturbance injection, list of N (n x p) matrices or a
            single matrix. Defaults to the identity (p = n).
        horizon: Horizon N, needed only when all matrices are given as
            single time-invariant matrices.

    Raises:
        DimensionMismatch: Inconsistent list lengths or matrix shapes.
    """
    def __init__(self, A, B, E=None, horizon=None):
        if horizon is None:
            for matrices in (A, B, E):
                if matrices is not None and not _is_single(matrices):
                    horizon = len(matrices)
                    break
        A = _as_sequence(A, horizon, 'A')
        B = _as_sequence(B, horizon, 'B')
        if E is None:
            E = np.eye(A[0].shape[0])
        E = _as_sequence(E, horizon, 'E')
        if not len(A) == len(B) == len(E) >= 1:
            raise DimensionMismatch(
                "A, B and E should all have N >= 1 entries, got {}, {} and "
                "{}.".format(len(A), len(B), len(E)))
        n, m, p = A[0].shape[0], B[0].shape[1], E[0].shape[1]
        for k in range(len(A)):
            if A[k].shape != (n, n) or B[k].shape != (n, m) \
                    or E[k].shape != (n, p):
                raise DimensionMismatch(
                    "Step {} has shapes A {}, B {}, E {}; expected ({n}, "
                    "{n}), ({n}, {m}) and ({n}, {p}).".format(
                        k, A[k].shape, B[k].shape, E[k].shape, n=n, m=m,
                        p=p))
        self.A = A
        self.B = B
        self.E = E
        self.n = n
        self.m = m
        self.p = p
        self.horizon = len(A)

    @classmethod
    def time_invariant(cls, A, B, horizon, E=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if E is not None:
            E = np.atleast_2d(np.asarray(E, dtype=float))
        return cls(A, B, E, horizon=horizon)

    def __repr__(self):
        return "LtvSystem(n={}, m={}, p={}, N={})".format(
            self.n, self.m, self.p, self.horizon)


class CovarianceFactor:
    """
    Covariance F diag(var) F^T of a linear image of independent components

    Args:
        F: Matrix (d x k) mapping the components to the vector.
        var: Variances of the k components.
    """
    def __init__(self, F, var):
        F = np.atleast_2d(np.asarray(F, dtype=float))
        var = np.asarray(var, dtype=float).ravel()
        if F.shape[1] != len(var):
            raise DimensionMismatch(
                "Factor has {} columns but {} variances were given.".format(
                    F.shape[1], len(var)))
        if np.any(var < 0):
            raise ValueError("Variances should be nonnegative.")
        self.F = F
        self.var = var

    @property
    def dimension(self):
        return self.F.shape[0]

    def quad_form(self, q):
        """
        Returns q^T C q
        """
        q = np.asarray(q, dtype=float)
        if q.shape[0] != self.dimension:
            raise DimensionMismatch(
                "Vector of length {} for a covariance of dimension {}."
                .format(q.shape[0], self.dimension))
        proj = self.F.T @ q
        return float(self.var @ proj**2)

    def norm(self, q):
        """
        Returns ||C^(1/2) q||_2
        """
        return float(np.sqrt(self.quad_form(q)))

    def trace(self, weights):
        """
        Returns tr(Q C).

        Args:
            weights: Either the diagonal of Q as a vector or a full
                square matrix Q.
        """
        weights = np.asarray(weights, dtype=float)
        if weights.ndim == 1:
            if len(weights) != self.dimension:
                raise DimensionMismatch(
                    "Weights of length {} for a covariance of dimension {}."
                    .format(len(weights), self.dimension))
            return float(np.sum(weights @ self.F**2 * self.var))
        if weights.shape != (self.dimension, self.dimension):
            raise DimensionMismatch(
                "Weight matrix of shape {} for a covariance of dimension {}."
                .format(weights.shape, self.dimension))
        return float(np.sum(self.F * (weights @ self.F) * self.var))

    def diagonal(self):
        return self.F**2 @ self.var

    def dense(self):
        return (self.F * self.var) @ self.F.T


@dataclass(frozen=True)
class StackedSystem:
    """
    Horizon-stacked system X = A_bar x(0) + H U + G W

    Attributes:
        Abar: Matrix (nN x n).
        H: Block lower-triangular matrix (nN x mN).
        G: Block lower-triangular matrix (nN x pN).
        n: State dimension.
        m: Input dimension.
        p: Disturbance dimension.
        horizon: N.
    """
    Abar: np.ndarray
    H: np.ndarray
    G: np.ndarray
    n: int
    m: int
    p: int
    horizon: int

    def mean_states(self, x0, U, mu_W=None):
        """
        Returns A_bar x0 + H U + G mu_W
        """
        x0 = np.asarray(x0, dtype=float).ravel()
        U = np.asarray(U, dtype=float).ravel()
        if len(x0) != self.n:
            raise DimensionMismatch("Initial state of length {}, expected {}."
                                    .format(len(x0), self.n))
        if len(U) != self.m * self.horizon:
            raise DimensionMismatch("Input of length {}, expected {}."
                                    .format(len(U), self.m * self.horizon))
        mu = self.Abar @ x0 + self.H @ U
        if mu_W is not None:
            mu_W = np.asarray(mu_W, dtype=float).ravel()
            if len(mu_W) != self.p * self.horizon:
                raise DimensionMismatch(
                    "Disturbance mean of length {}, expected {}.".format(
                        len(mu_W), self.p * self.horizon))
            mu = mu + self.G @ mu_W
        return mu


def stack(sys):
    """
    Stack a LtvSystem over its horizon.

    Row block i of the result describes x(i+1). Block (i, k) of H is
    A(i)...A(k+1) B(k) for k <= i and zero above the diagonal; G has the
    same structure with E(k) in place of B(k).

    Args:
        sys: LtvSystem.

    Returns:
        StackedSystem.
    """
    if not isinstance(sys, LtvSystem):
        raise TypeError("stack expects a LtvSystem, got '{}'.".format(
            type(sys).__name__))
    n, m, p, N = sys.n, sys.m, sys.p, sys.horizon
    Abar = np.zeros((n * N, n))
    H = np.zeros((n * N, m * N))
    G = np.zeros((n * N, p * N))
    # transfer[k] holds A(i)...A(k+1) for the current row block i
    transfer = []
    prod = np.eye(n)
    for i in range(N):
        prod = sys.A[i] @ prod
        Abar[i * n:(i + 1) * n] = prod
        transfer = [sys.A[i] @ T for T in transfer] + [np.eye(n)]
        for k in range(i + 1):
            H[i * n:(i + 1) * n, k * m:(k + 1) * m] = transfer[k] @ sys.B[k]
            G[i * n:(i + 1) * n, k * p:(k + 1) * p] = transfer[k] @ sys.E[k]
    return StackedSystem(Abar, H, G, n, m, p, N)


def state_moments(ss, x0_mean, U, disturbance=None, initial_state=None):
    """
    Mean and factored covariance of the stacked state.

    Args:
        ss: StackedSystem.
        x0_mean: Mean of the initial state (the initial state itself when
            it is fixed).
        U: Stacked input of length mN.
        disturbance: DisturbanceVector of W. If None, W is taken to be
            zero.
        initial_state: Optional DisturbanceVector of a random initial
            state. Its variances enter the covariance through A_bar.

    Returns:
        Tuple (mu_X, CovarianceFactor).

    Raises:
        DimensionMismatch: Shapes do not match the system.
    """
    mu_W, var_W = None, np.zeros(ss.p * ss.horizon)
    if disturbance is not None:
        if len(disturbance) != ss.p * ss.horizon:
            raise DimensionMismatch(
                "Disturbance has {} components, expected {}.".format(
                    len(disturbance), ss.p * ss.horizon))
        mu_W, var_W = disturbance.means(), disturbance.variances()
    mu = ss.mean_states(x0_mean, U, mu_W)
    if initial_state is None:
        return mu, CovarianceFactor(ss.G, var_W)
    if len(initial_state) != ss.n:
        raise DimensionMismatch(
            "Initial state law has {} components, expected {}.".format(
                len(initial_state), ss.n))
    F = np.hstack([ss.Abar, ss.G])
    var = np.concatenate([initial_state.variances(), var_W])
    return mu, CovarianceFactor(F, var)


def simulate(sys, x0, U, W=None):
    """
    Step recursion x(k+1) = A(k) x(k) + B(k) u(k) + E(k) w(k).

    Args:
        sys: LtvSystem.
        x0: Initial state.
        U: Stacked input of length mN.
        W: Optional stacked disturbance of length pN.

    Returns:
        Stacked states [x(1); ...; x(N)] as a vector of length nN.
    """
    x = np.asarray(x0, dtype=float).ravel()
    U = np.asarray(U, dtype=float).ravel()
    if len(x) != sys.n or len(U) != sys.m * sys.horizon:
        raise DimensionMismatch(
            "Expected an initial state of length {} and input of length {}."
            .format(sys.n, sys.m * sys.horizon))
    if W is not None:
        W = np.asarray(W, dtype=float).ravel()
        if len(W) != sys.p * sys.horizon:
            raise DimensionMismatch("Expected a disturbance of length {}."
                                    .format(sys.p * sys.horizon))
    states = []
    for k in range(sys.horizon):
        x = sys.A[k] @ x + sys.B[k] @ U[k * sys.m:(k + 1) * sys.m]
        if W is not None:
            x = x + sys.E[k] @ W[k * sys.p:(k + 1) * sys.p]
        states.append(x)
    return np.concatenate(states)


def zoh_discretize(A_c, B_c, Ts):
    """
    Zero-order hold discretization.

    The exponential of the augmented matrix [[A_c, B_c], [0, 0]] * Ts holds
    A_d in its upper left and B_d in its upper right block.

    Args:
        A_c: Continuous state matrix (n x n).
        B_c: Continuous input matrix (n x m).
        Ts: Sampling time, strictly positive.

    Returns:
        Tuple (A_d, B_d).
    """
    A_c = np.atleast_2d(np.asarray(A_c, dtype=float))
    B_c = np.asarray(B_c, dtype=float)
    if B_c.ndim == 1:
        B_c = B_c[:, None]
    n, m = A_c.shape[0], B_c.shape[1]
    if A_c.shape != (n, n) or B_c.shape[0] != n:
        raise DimensionMismatch("A_c {} and B_c {} are not conformable."
                                .format(A_c.shape, B_c.shape))
    if not Ts > 0:
        raise ValueError("Sampling time should be positive, got {}."
                         .format(Ts))
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A_c
    aug[:n, n:] = B_c
    expo = linalg.expm(aug * Ts)
    return expo[:n, :n], expo[:n, n:]


def double_integrator(Ts=0.25, horizon=10):
    """
    Discrete double integrator with position and velocity states.

    Returns:
        LtvSystem with A = [[1, Ts], [0, 1]] and B = [Ts^2 / 2, Ts].
    """
    A_c = np.array([[0.0, 1.0], [0.0, 0.0]])
    B_c = np.array([[0.0], [1.0]])
    A_d, B_d = zoh_discretize(A_c, B_c, Ts)
    return LtvSystem.time_invariant(A_d, B_d, horizon)


@dataclass(frozen=True)
class QuadrotorParams:
    """
    Physical parameters of the rigid-body quadrotor
    """
    mass: float = 0.478
    Ixx: float = 0.0117
    Iyy: float = 0.0117
    Izz: float = 0.00234
    g: float = 9.81

    def __post_init__(self):
        for name in ('mass', 'Ixx', 'Iyy', 'Izz', 'g'):
            if not getattr(self, name) > 0:
                raise ValueError("Quadrotor parameter '{}' should be "
                                 "positive.".format(name))

    @property
    def hover_thrust(self):
        return self.mass * self.g


def quadrotor_rhs(x, u, params=None):
    """
    Nonlinear quadrotor dynamics dx/dt = f(x, u).

    The state is [p_x, p_y, p_z, dp_x, dp_y, dp_z, phi, theta, psi,
    dphi, dtheta, dpsi] and the input [thrust, tau_phi, tau_theta, tau_psi].
    """
    params = params or QuadrotorParams()
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    phi, theta, psi = x[6:9]
    dphi, dtheta, dpsi = x[9:12]
    thrust = u[0] / params.mass
    Ixx, Iyy, Izz = params.Ixx, params.Iyy, params.Izz
    acc = np.array([
        thrust * (np.cos(psi) * np.sin(theta)
                  + np.cos(theta) * np.sin(phi) * np.sin(psi)),
        thrust * (np.sin(psi) * np.sin(theta)
                  - np.cos(theta) * np.sin(phi) * np.cos(psi)),
        thrust * np.cos(phi) * np.cos(theta) - params.g
    ])
    ang_acc = np.array([
        (Iyy - Izz) / Ixx * dtheta * dpsi + u[1] / Ixx,
        (Izz - Ixx) / Iyy * dphi * dpsi + u[2] / Iyy,
        (Ixx - Iyy) / Izz * dtheta * dphi + u[3] / Izz
    ])
    return np.concatenate([x[3:6], acc, x[9:12], ang_acc])


def linearize_quadrotor(params=None):
    """
    Jacobians of quadrotor_rhs at zero state and hover input.

    Args:
        params: QuadrotorParams. Defaults are used if None.

    Returns:
        Tuple (A_c, B_c, hover_input) with A_c of shape 12 x 12, B_c of
        shape 12 x 4 and hover_input = [m g, 0, 0, 0].
    """
    params = params or QuadrotorParams()
    A_c = np.zeros((12, 12))
    A_c[0:3, 3:6] = np.eye(3)
    A_c[6:9, 9:12] = np.eye(3)
    A_c[3, 7] = params.g
    A_c[4, 6] = -params.g
    B_c = np.zeros((12, 4))
    B_c[5, 0] = 1.0 / params.mass
    B_c[9, 1] = 1.0 / params.Ixx
    B_c[10, 2] = 1.0 / params.Iyy
    B_c[11, 3] = 1.0 / params.Izz
    hover_input = np.array([params.hover_thrust, 0.0, 0.0, 0.0])
    return A_c, B_c, hover_input


def quadrotor_hover(params=None, Ts=0.25, horizon=10, E=None):
    """
    Quadrotor linearized at hover and discretized with a zero-order hold.

    The inputs of the returned system are deviations from the hover input.

    Args:
        params: QuadrotorParams.
        Ts: Sampling time.
        horizon: Horizon N.
        E: Optional disturbance injection (12 x p). Defaults to the
            identity.

    Returns:
        Tuple (LtvSystem, hover_input).
    """
    A_c, B_c, hover_input = linearize_quadrotor(params)
    A_d, B_d = zoh_discretize(A_c, B_c, Ts)
    logger.debug("Quadrotor discretized with Ts=%g, hover thrust %.4f",
                 Ts, hover_input[0])
    return LtvSystem.time_invariant(A_d, B_d, horizon, E), hover_input


def translational_injection():
    """
    Disturbance injection (12 x 3) acting on the positions only
    """
    E = np.zeros((12, 3))
    E[0:3, 0:3] = np.eye(3)
    return E
