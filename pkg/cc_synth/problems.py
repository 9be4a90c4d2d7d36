"""
Chance-constrained open-loop control problems and their tractable forms.

A ProblemSpec holds the stochastic optimal control problem: a linear system
with independent disturbances, a quadratic expected cost, an input box and
a polytope P X <= q on the stacked state that has to hold jointly with
probability at least 1 - Delta.

The joint constraint is split into one risk budget per row. With the change
of variables t_i = log(1 - delta_i) the budgets satisfy sum(delta) <= Delta
exactly when log(sum(exp(t))) >= log(L - Delta). The row constraints
log Phi_i(d_i - M_i U) >= t_i are replaced by piecewise affine
underapproximations of log Phi_i, which leaves a difference-of-convex
program (DcProgram) whose only nonconvex part is the log-sum-exp row.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import time

import numpy as np
import pandas as pd
from scipy import special

from . import inversion
from .distributions import DisturbanceVector, Deterministic
from .dynamics import LtvSystem, StackedSystem, stack, state_moments
from .errors import (DimensionMismatch, RowInfeasible, NotGaussian,
                     DeltaTooLarge, BracketFailure)
from .inversion import QuadratureConfig, LinearFunctionalLaw
from .pwa import PwaUnderapprox, sandwich
from .qp.problem import QpProblem
from .utils import worker_count

logger = logging.getLogger(__name__)

# Upper end of the PWA domains in probability
PHI_CAP = 1.0 - 1e-9


@dataclass
class ProblemSpec:
    """
    Stochastic optimal control problem with a joint chance constraint

    Attributes:
        system: LtvSystem, or a StackedSystem when only the stacked form is
            available.
        disturbance: DisturbanceVector of the stacked disturbance W (pN
            components).
        initial_state: Fixed initial state (vector of length n) or a
            DisturbanceVector of a random initial state.
        Q: Diagonal of the state weight, length nN.
        R: Diagonal of the input weight, length mN, strictly positive.
        X_d: Desired stacked state trajectory, length nN.
        input_lo: Lower input bounds, length mN.
        input_hi: Upper input bounds, length mN.
        P: Polytope rows (L x nN).
        q: Polytope right hand sides (L).
        Delta: Maximal joint violation probability in [0, 1).
        epsilon: Lower limit of every row CDF, in (0, 1 - Delta].
        eta: Gap of the PWA underapproximations.
        row_names: Optional labels of the polytope rows.
        name: Problem name.
        quadrature: QuadratureConfig of the CDF inversion.
    """
    system: object
    disturbance: DisturbanceVector
    initial_state: object
    Q: np.ndarray
    R: np.ndarray
    X_d: np.ndarray
    input_lo: np.ndarray
    input_hi: np.ndarray
    P: np.ndarray
    q: np.ndarray
    Delta: float
    epsilon: float = 1e-3
    eta: float = 0.1
    row_names: list = None
    name: str = 'problem'
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if isinstance(self.system, LtvSystem):
            self.stacked = stack(self.system)
        elif isinstance(self.system, StackedSystem):
            self.stacked = self.system
        else:
            raise TypeError("system should be a LtvSystem or StackedSystem, "
                            "got '{}'.".format(type(self.system).__name__))
        ss = self.stacked
        nN, mN, pN = ss.n * ss.horizon, ss.m * ss.horizon, \
            ss.p * ss.horizon
        self.Q = self._vector(self.Q, nN, 'Q')
        self.R = self._vector(self.R, mN, 'R')
        self.X_d = self._vector(self.X_d, nN, 'X_d')
        self.input_lo = self._vector(self.input_lo, mN, 'input_lo')
        self.input_hi = self._vector(self.input_hi, mN, 'input_hi')
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.q = np.asarray(self.q, dtype=float).ravel()
        if self.P.shape[1] != nN or self.P.shape[0] != len(self.q):
            raise DimensionMismatch(
                "Polytope of shape {} with {} right hand sides, expected "
                "{} columns.".format(self.P.shape, len(self.q), nN))
        if self.P.shape[0] < 1:
            raise ValueError("The polytope needs at least one row.")
        if len(self.disturbance) != pN:
            raise DimensionMismatch(
                "Disturbance has {} components, expected {}.".format(
                    len(self.disturbance), pN))
        if isinstance(self.initial_state, DisturbanceVector):
            if len(self.initial_state) != ss.n:
                raise DimensionMismatch(
                    "Initial state law has {} components, expected {}."
                    .format(len(self.initial_state), ss.n))
        else:
            self.initial_state = self._vector(self.initial_state, ss.n,
                                              'initial_state')
        if np.any(self.Q < 0):
            raise ValueError("Q should be positive semidefinite.")
        if np.any(self.R <= 0):
            raise ValueError("R should be positive definite.")
        if np.any(self.input_lo > self.input_hi):
            raise ValueError("Input box has lo > hi.")
        if not 0.0 <= self.Delta < 1.0:
            raise ValueError("Delta should lie in [0, 1), got {}.".format(
                self.Delta))
        if not 0.0 < self.epsilon <= 1.0 - self.Delta:
            raise ValueError("epsilon should lie in (0, 1 - Delta], got {}."
                             .format(self.epsilon))
        if not self.eta > 0:
            raise ValueError("eta should be positive, got {}.".format(
                self.eta))
        if self.row_names is None:
            self.row_names = ['row{}'.format(i) for i in range(self.n_rows)]
        elif len(self.row_names) != self.n_rows:
            raise DimensionMismatch("Expected {} row names, got {}.".format(
                self.n_rows, len(self.row_names)))

    @staticmethod
    def _vector(value, length, name):
        value = np.asarray(value, dtype=float).ravel()
        if value.size == 1 and length != 1:
            value = np.full(length, float(value[0]))
        if len(value) != length:
            raise DimensionMismatch("'{}' has length {}, expected {}."
                                    .format(name, len(value), length))
        return value

    @property
    def n(self):
        return self.stacked.n

    @property
    def m(self):
        return self.stacked.m

    @property
    def horizon(self):
        return self.stacked.horizon

    @property
    def n_inputs(self):
        return self.stacked.m * self.stacked.horizon

    @property
    def n_rows(self):
        return self.P.shape[0]

    @property
    def random_initial_state(self):
        return isinstance(self.initial_state, DisturbanceVector)

    def initial_mean(self):
        if self.random_initial_state:
            return self.initial_state.means()
        return self.initial_state

    def moments(self, U):
        """
        Mean and CovarianceFactor of the stacked state under input U
        """
        x0_law = self.initial_state if self.random_initial_state else None
        return state_moments(self.stacked, self.initial_mean(), U,
                             self.disturbance, x0_law)

    def summary(self):
        return {
            'name': self.name,
            'n': self.n,
            'm': self.m,
            'horizon': self.horizon,
            'rows': self.n_rows,
            'Delta': self.Delta,
            'epsilon': self.epsilon,
            'eta': self.eta,
            'random_initial_state': self.random_initial_state
        }


@dataclass
class RowModel:
    """
    Tractable form of one polytope row: d - M U has to stay in
    [x_lo, inf) and log Phi(d - M U) >= t is replaced by the pieces of pwa.
    """
    M: np.ndarray
    d: float
    law: LinearFunctionalLaw
    x_lo: float
    x_hi: float
    pwa: PwaUnderapprox
    clipped: bool


@dataclass
class DcProgram:
    """
    Difference-of-convex program over z = [U; t]

    The objective is 1/2 U^T P_obj U + q_obj^T U + constant. The convex
    constraints are the input box, M_i U <= d_i - x_lo_i, the PWA rows
    m_ij M_i U + t_i <= m_ij d_i + c_ij and t_i in [log(1 - Delta), 0].
    The reverse-convex constraint is log(sum(exp(t))) >= log(L - Delta).
    """
    spec: ProblemSpec
    P_obj: np.ndarray
    q_obj: np.ndarray
    constant: float
    rows: list
    timings: dict = field(default_factory=dict)

    @property
    def n_inputs(self):
        return self.spec.n_inputs

    @property
    def n_rows(self):
        return len(self.rows)

    @property
    def n_variables(self):
        return self.n_inputs + self.n_rows

    @property
    def Delta(self):
        return self.spec.Delta

    @property
    def t_lo(self):
        return float(np.log1p(-self.spec.Delta))

    @property
    def lse_bound(self):
        """
        Right hand side log(L - Delta) of the reverse-convex row
        """
        return float(np.log(self.n_rows - self.spec.Delta))

    @property
    def d(self):
        return np.array([row.d for row in self.rows])

    @property
    def M(self):
        return np.vstack([row.M for row in self.rows])

    def objective(self, U):
        U = np.asarray(U, dtype=float)
        return float(0.5 * U @ self.P_obj @ U + self.q_obj @ U +
                     self.constant)

    def constraint_rows(self):
        """
        Linear constraints of the program over z = [U; t].

        Returns:
            Tuple (A, lb, ub, names).
        """
        mN, L = self.n_inputs, self.n_rows
        blocks, lbs, ubs, names = [], [], [], []

        blocks.append(np.hstack([np.eye(mN), np.zeros((mN, L))]))
        lbs.append(self.spec.input_lo)
        ubs.append(self.spec.input_hi)
        names += ['input{}'.format(k) for k in range(mN)]

        lower = np.zeros((L, mN + L))
        for i, row in enumerate(self.rows):
            lower[i, :mN] = row.M
        blocks.append(lower)
        lbs.append(np.full(L, -np.inf))
        ubs.append(np.array([row.d - row.x_lo for row in self.rows]))
        names += ['{}:domain'.format(n) for n in self.spec.row_names]

        for i, row in enumerate(self.rows):
            k = len(row.pwa)
            block = np.zeros((k, mN + L))
            block[:, :mN] = row.pwa.slopes[:, None] * row.M
            block[:, mN + i] = 1.0
            blocks.append(block)
            lbs.append(np.full(k, -np.inf))
            ubs.append(row.pwa.slopes * row.d + row.pwa.intercepts)
            names += ['{}:piece{}'.format(self.spec.row_names[i], j)
                      for j in range(k)]

        blocks.append(np.hstack([np.zeros((L, mN)), np.eye(L)]))
        lbs.append(np.full(L, self.t_lo))
        ubs.append(np.zeros(L))
        names += ['{}:t'.format(n) for n in self.spec.row_names]
        return (np.vstack(blocks), np.concatenate(lbs), np.concatenate(ubs),
                names)

    def to_dict(self):
        return {
            'spec': self.spec.summary(),
            'P_obj': self.P_obj.tolist(),
            'q_obj': self.q_obj.tolist(),
            'constant': self.constant,
            't_bounds': [self.t_lo, 0.0],
            'lse_bound': self.lse_bound,
            'rows': [{
                'name': name,
                'M': row.M.tolist(),
                'd': row.d,
                'x_lo': row.x_lo,
                'x_hi': row.x_hi,
                'clipped': row.clipped,
                'law_mean': row.law.mean,
                'law_stddev': row.law.stddev,
                'pwa': row.pwa.to_dict()
            } for name, row in zip(self.spec.row_names, self.rows)]
        }


def _quadratic_objective(spec):
    """
    Returns (P_obj, q_obj, constant) of the expected cost as a function of
    U, in the 1/2 U^T P U convention.
    """
    ss = spec.stacked
    U0 = np.zeros(spec.n_inputs)
    mu0, cov = spec.moments(U0)
    offset = mu0 - spec.X_d
    QH = spec.Q[:, None] * ss.H
    P_obj = 2.0 * (ss.H.T @ QH + np.diag(spec.R))
    q_obj = 2.0 * QH.T @ offset
    constant = float(offset @ (spec.Q * offset)) + cov.trace(spec.Q)
    return 0.5 * (P_obj + P_obj.T), q_obj, constant


def _log_cdf_oracle(law, cfg):
    cache = {}

    def evaluate(x):
        if x not in cache:
            cache[x] = inversion.log_cdf_and_grad(law, x, cfg)
        return cache[x]

    return (lambda x: evaluate(x)[0]), (lambda x: evaluate(x)[1])


def _box_min(M, lo, hi):
    # Smallest M^T U over the input box; zero weights ignore infinite bounds
    with np.errstate(invalid='ignore'):
        terms = np.where(M > 0, M * lo, np.where(M < 0, M * hi, 0.0))
    return float(np.sum(terms))


def log_cdf_pwa(law, epsilon, eta, cfg=None, x_lo=None, x_hi=None):
    """
    Piecewise affine underapproximation of log Phi of a functional law.

    The pieces cover [x_lo, x_hi] and end in a flat cap piece at
    log Phi(x_hi). All pieces are lowered by the quadrature error bound
    2 abs_tol / Phi(x_lo), so they stay below log Phi however it is
    evaluated; pwa.eta holds the certified gap (eta plus that margin). The
    upper end is clipped to the quantile of PHI_CAP.

    Args:
        law: Non-degenerate LinearFunctionalLaw.
        epsilon: Smallest admissible Phi; x_lo defaults to its quantile.
        eta: Largest approximation gap.
        cfg: QuadratureConfig. If None, the defaults are used.
        x_lo: Optional lower end of the domain.
        x_hi: Optional upper end of the domain.

    Returns:
        Tuple (pwa, x_lo, x_hi, clipped).
    """
    cfg = cfg or QuadratureConfig()
    if x_lo is None:
        x_lo = inversion.inverse_cdf(law, epsilon, cfg)
    try:
        cap = inversion.inverse_cdf(law, PHI_CAP, cfg)
    except BracketFailure:
        cap = law.mean + 64.0 * law.stddev
    if x_hi is None:
        x_hi = cap
    clipped = x_hi > cap
    if clipped:
        x_hi = cap
    if x_hi < x_lo:
        raise ValueError("Empty domain [{:.6g}, {:.6g}].".format(x_lo, x_hi))
    f, grad_f = _log_cdf_oracle(law, cfg)
    # Computed and exact log Phi differ by at most abs_tol / Phi, which is
    # largest at x_lo; the pieces are lowered by twice that
    shift = 2.0 * cfg.abs_tol / np.exp(f(x_lo))
    if x_hi - x_lo <= 1e-12 * max(1.0, abs(x_lo)):
        pwa = PwaUnderapprox([0.0], [f(x_lo) - shift], (x_lo, x_hi),
                             eta + shift, [x_lo], [x_hi])
        return pwa, x_lo, x_hi, clipped
    noise = 100.0 * cfg.abs_tol / epsilon
    pwa = sandwich(f, grad_f, (x_lo, x_hi), eta,
                   concavity_tol=max(1e-12, noise), slope_tol=noise)
    # Flat cap so the pieces stay valid lower bounds beyond x_hi
    pwa = PwaUnderapprox(
        np.append(pwa.slopes, 0.0),
        np.append(pwa.intercepts, f(x_hi)) - shift,
        pwa.domain, pwa.eta + shift, np.append(pwa.lefts, x_hi),
        np.append(pwa.rights, np.inf), pwa.history)
    return pwa, x_lo, x_hi, clipped


def _build_row(spec, index, M, d, law):
    cfg = spec.quadrature
    if law.is_degenerate():
        # Deterministic row: Phi is a step at the mean
        x_lo = law.mean
        x_hi = d - _box_min(M, spec.input_lo, spec.input_hi)
        if x_hi < x_lo:
            raise RowInfeasible(index, "Deterministic row cannot be met "
                                "for any input in the box.")
        pwa = PwaUnderapprox([0.0], [0.0], (x_lo, max(x_hi, x_lo)),
                             spec.eta, [x_lo], [x_hi])
        return RowModel(M, d, law, x_lo, x_hi, pwa, False)

    x_lo = inversion.inverse_cdf(law, spec.epsilon, cfg)
    x_hi = d - _box_min(M, spec.input_lo, spec.input_hi)
    if x_hi < x_lo:
        raise RowInfeasible(
            index, "Row {} reaches Phi={} only below {:.6g}, but the best "
            "input gives {:.6g}.".format(index, spec.epsilon, x_lo, x_hi))
    pwa, x_lo, x_hi, clipped = log_cdf_pwa(law, spec.epsilon, spec.eta,
                                           cfg, x_lo, x_hi)
    logger.debug("Row %d: %d pieces on [%.4g, %.4g]%s", index, len(pwa),
                 x_lo, x_hi, " (clipped)" if clipped else "")
    return RowModel(M, d, law, x_lo, x_hi, pwa, clipped)


def _assemble(spec, laws, d):
    start = time.perf_counter()
    M = spec.P @ spec.stacked.H
    jobs = [(spec, i, M[i], float(d[i]), laws[i])
            for i in range(spec.n_rows)]
    workers = min(worker_count(), spec.n_rows)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: _build_row(*job), jobs))
    else:
        rows = [_build_row(*job) for job in jobs]
    pwa_time = time.perf_counter() - start
    P_obj, q_obj, constant = _quadratic_objective(spec)
    logger.info("Built DC program '%s': %d rows, %d pieces in %.2f s",
                spec.name, len(rows), sum(len(r.pwa) for r in rows),
                pwa_time)
    return DcProgram(spec, P_obj, q_obj, constant, rows,
                     timings={'pwa': pwa_time})


def build_dc(spec):
    """
    Build the DC program of a problem with a fixed initial state.

    Row i uses the law of p_i^T G W and d_i = q_i - p_i^T A_bar x(0).

    Args:
        spec: ProblemSpec with a fixed initial state.

    Returns:
        DcProgram.

    Raises:
        RowInfeasible: A row cannot reach Phi >= epsilon for any input in
            the box.
        QuadratureFailure: Propagated from the CDF inversion.
    """
    if spec.random_initial_state:
        return build_dc_random_x0(spec)
    laws, d = row_laws(spec)
    return _assemble(spec, laws, d)


def build_dc_random_x0(spec):
    """
    Build the DC program of a problem with a random initial state.

    Row i uses the law of p_i^T (A_bar x(0) + G W), whose characteristic
    function is the product of both factors, and d_i = q_i. A point-mass
    initial state reduces to build_dc.

    Args:
        spec: ProblemSpec whose initial_state is a DisturbanceVector.

    Returns:
        DcProgram.
    """
    if not spec.random_initial_state:
        return build_dc(spec)
    if all(isinstance(c, Deterministic) for c in spec.initial_state):
        fixed = _with_initial_state(spec, spec.initial_state.means().copy())
        return build_dc(fixed)
    laws, d = row_laws(spec)
    return _assemble(spec, laws, d)


def _with_initial_state(spec, x0):
    return ProblemSpec(
        spec.stacked, spec.disturbance, x0, spec.Q, spec.R, spec.X_d,
        spec.input_lo, spec.input_hi, spec.P, spec.q, spec.Delta,
        spec.epsilon, spec.eta, spec.row_names, spec.name, spec.quadrature)


def gaussian_quantile_pwa(delta_lb, Delta, eta):
    """
    PWA underapproximation of z -> -Phi_N^-1(1 - z) on [delta_lb, Delta],
    with Phi_N the standard normal CDF.
    """
    return sandwich(lambda z: float(special.ndtri(z)),
                    lambda z: float(np.sqrt(2 * np.pi) *
                                    np.exp(0.5 * special.ndtri(z)**2)),
                    (delta_lb, Delta), eta)


def _row_stddevs(spec, U):
    _, cov = spec.moments(U)
    return np.array([cov.norm(p) for p in spec.P])


def build_gaussian_qp(spec, delta_lb=1e-6):
    """
    One-shot QP for Gaussian disturbances over z = [U; delta].

    Row i reads M_i U - s_i (m_j delta_i + c_j) <= q_i - p_i^T mu_0 for every
    piece (m_j, c_j) of gaussian_quantile_pwa, with s_i = ||C^(1/2) p_i||.
    The budgets satisfy delta_i in [delta_lb, Delta] and sum(delta) <=
    Delta.

    Args:
        spec: ProblemSpec with Gaussian (or deterministic) components only.
        delta_lb: Smallest allowed risk budget.

    Returns:
        QpProblem whose first mN variables are U.

    Raises:
        NotGaussian: Some component is not Gaussian.
        DeltaTooLarge: Delta exceeds 0.5.
    """
    if not spec.disturbance.is_gaussian() or (
            spec.random_initial_state
            and not spec.initial_state.is_gaussian()):
        raise NotGaussian("The one-shot QP needs Gaussian disturbances.")
    if spec.Delta > 0.5:
        raise DeltaTooLarge("The one-shot QP is convex only for Delta <= "
                            "0.5, got {}.".format(spec.Delta))
    if not 0 < delta_lb < spec.Delta:
        raise ValueError("delta_lb should lie in (0, Delta).")
    pwa = gaussian_quantile_pwa(delta_lb, spec.Delta, spec.eta)
    mN, L = spec.n_inputs, spec.n_rows
    U0 = np.zeros(mN)
    mu0, _ = spec.moments(U0)
    s = _row_stddevs(spec, U0)
    M = spec.P @ spec.stacked.H
    rhs = spec.q - spec.P @ mu0

    blocks = [np.hstack([np.eye(mN), np.zeros((mN, L))])]
    lbs, ubs = [spec.input_lo], [spec.input_hi]
    names = ['input{}'.format(k) for k in range(mN)]
    for i in range(L):
        block = np.zeros((len(pwa), mN + L))
        block[:, :mN] = M[i]
        block[:, mN + i] = -s[i] * pwa.slopes
        blocks.append(block)
        lbs.append(np.full(len(pwa), -np.inf))
        ubs.append(rhs[i] + s[i] * pwa.intercepts)
        names += ['{}:piece{}'.format(spec.row_names[i], j)
                  for j in range(len(pwa))]
    blocks.append(np.hstack([np.zeros((L, mN)), np.eye(L)]))
    lbs.append(np.full(L, delta_lb))
    ubs.append(np.full(L, spec.Delta))
    names += ['{}:delta'.format(n) for n in spec.row_names]
    blocks.append(np.concatenate([np.zeros(mN), np.ones(L)])[None, :])
    lbs.append([-np.inf])
    ubs.append([spec.Delta])
    names.append('risk')

    P_obj, q_obj, constant = _quadratic_objective(spec)
    P = np.zeros((mN + L, mN + L))
    P[:mN, :mN] = P_obj
    q = np.concatenate([q_obj, np.zeros(L)])
    return QpProblem(P, q, np.vstack(blocks), np.concatenate(lbs),
                     np.concatenate(ubs), constant, names)


def cantelli_multiplier(delta):
    return float(np.sqrt((1.0 - delta) / delta))


def build_moment_baseline_qp(spec):
    """
    QP of the moment-based baseline with the uniform allocation
    delta_i = Delta / L and Cantelli tightening.

    Row i reads M_i U <= q_i - p_i^T mu_0 - k s_i with
    k = sqrt((1 - delta_i) / delta_i) and s_i = ||C^(1/2) p_i||.

    Raises:
        RowInfeasible: The tightened row cannot be met by any input in the
            box.
        ValueError: Delta is zero.
    """
    if spec.Delta <= 0:
        raise ValueError("The moment baseline needs Delta > 0.")
    mN = spec.n_inputs
    U0 = np.zeros(mN)
    mu0, _ = spec.moments(U0)
    s = _row_stddevs(spec, U0)
    kappa = cantelli_multiplier(spec.Delta / spec.n_rows)
    M = spec.P @ spec.stacked.H
    rhs = spec.q - spec.P @ mu0 - kappa * s
    for i in range(spec.n_rows):
        if _box_min(M[i], spec.input_lo, spec.input_hi) > rhs[i]:
            raise RowInfeasible(
                i, "Cantelli tightening {:.4g} leaves row {} infeasible."
                .format(kappa * s[i], spec.row_names[i]))
    A = np.vstack([np.eye(mN), M])
    lb = np.concatenate([spec.input_lo, np.full(spec.n_rows, -np.inf)])
    ub = np.concatenate([spec.input_hi, rhs])
    names = ['input{}'.format(k) for k in range(mN)] + list(spec.row_names)
    P_obj, q_obj, constant = _quadratic_objective(spec)
    return QpProblem(P_obj, q_obj, A, lb, ub, constant, names)


def _check_input(spec, U):
    U = np.asarray(U, dtype=float).ravel()
    if len(U) != spec.n_inputs:
        raise DimensionMismatch("Input of length {}, expected {}.".format(
            len(U), spec.n_inputs))
    return U


def objective_value(spec, U):
    """
    Expected cost E[(X - X_d)^T Q (X - X_d)] + U^T R U.

    Raises:
        DimensionMismatch: U has the wrong length.
    """
    U = _check_input(spec, U)
    mu, cov = spec.moments(U)
    err = mu - spec.X_d
    return float(err @ (spec.Q * err) + U @ (spec.R * U) +
                 cov.trace(spec.Q))


def stage_costs(spec, U):
    """
    Expected cost per step.

    Returns:
        pandas.DataFrame with one row per step k = 1..N and the columns
        step, tracking, covariance, input and total.
    """
    U = _check_input(spec, U)
    mu, cov = spec.moments(U)
    n, m, N = spec.n, spec.m, spec.horizon
    err2 = (mu - spec.X_d)**2 * spec.Q
    var = cov.diagonal() * spec.Q
    inp = U**2 * spec.R
    frame = pd.DataFrame({
        'step': np.arange(1, N + 1),
        'tracking': err2.reshape(N, n).sum(axis=1),
        'covariance': var.reshape(N, n).sum(axis=1),
        'input': inp.reshape(N, m).sum(axis=1)
    })
    frame['total'] = frame['tracking'] + frame['covariance'] + \
        frame['input']
    return frame


@dataclass
class FeasibilityReport:
    """
    Exact check of the risk allocation of an input sequence

    Attributes:
        phi: Row CDF values Phi_i(q_i - p_i^T (A_bar x0 + H U)).
        delta: Tightest budgets 1 - phi.
        total_risk: Sum of delta.
        satisfied: Whether total_risk <= Delta + tolerance.
        worst_row: Index of the row with the largest delta.
    """
    phi: np.ndarray
    delta: np.ndarray
    total_risk: float
    satisfied: bool
    worst_row: int

    def to_dict(self):
        return {
            'phi': self.phi.tolist(),
            'delta': self.delta.tolist(),
            'total_risk': self.total_risk,
            'satisfied': self.satisfied,
            'worst_row': self.worst_row
        }


def row_laws(spec):
    """
    Laws of the row functionals and their right hand sides d_i
    """
    ss = spec.stacked
    if spec.random_initial_state:
        laws = [LinearFunctionalLaw(
            np.concatenate([ss.Abar.T @ p, ss.G.T @ p]), spec.disturbance,
            spec.initial_state) for p in spec.P]
        return laws, spec.q.copy()
    laws = [LinearFunctionalLaw(ss.G.T @ p, spec.disturbance)
            for p in spec.P]
    return laws, spec.q - spec.P @ (ss.Abar @ spec.initial_state)


def verify_feasibility(spec, U, tol=0.0, laws=None):
    """
    Evaluate every row CDF exactly and check sum(1 - Phi_i) <= Delta.

    Args:
        spec: ProblemSpec.
        U: Stacked input.
        tol: Allowance added to Delta.
        laws: Optional precomputed output of row_laws.

    Returns:
        FeasibilityReport.
    """
    U = _check_input(spec, U)
    laws, d = row_laws(spec) if laws is None else laws
    x = d - spec.P @ (spec.stacked.H @ U)
    phi = np.array([inversion.cdf(law, xi, spec.quadrature)
                    for law, xi in zip(laws, x)])
    delta = 1.0 - phi
    total = float(np.sum(delta))
    worst = int(np.argmax(delta))
    report = FeasibilityReport(phi, delta, total,
                               bool(total <= spec.Delta + tol), worst)
    if not report.satisfied:
        logger.info("Risk %.4g exceeds Delta %.4g, worst row %s (%.3g)",
                    total, spec.Delta, spec.row_names[worst], delta[worst])
    return report


def dump_program(program):
    """
    Dictionary form of a DcProgram or QpProblem for diagnostic dumps
    """
    return program.to_dict()
