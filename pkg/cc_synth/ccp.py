"""
Penalty convex-concave procedure for the DC program.

Every iteration linearizes log(sum(exp(t))) at the previous t, relaxes the
linearized row with a slack s >= 0 that is penalized with weight tau, and
solves the resulting QP over [U; t; s]. The penalty grows geometrically up
to tau_max.
"""
from dataclasses import dataclass, field, asdict
import logging
import time

import numpy as np
import pandas as pd
from scipy import special

from .errors import CcSynthError, DimensionMismatch, SubproblemFailed
from .qp.admm import AdmmQp
from .qp.problem import QpProblem

logger = logging.getLogger(__name__)

CONVERGED = 'Converged'
SLACK_POSITIVE = 'SlackPositive'
MAX_ITER = 'MaxIter'
SUBPROBLEM_FAILED = 'SubproblemFailed'
TAU_EXHAUSTED = 'TauExhausted'

R0_MODES = ('uniform', 'literal')


@dataclass(frozen=True)
class CcpConfig:
    """
    Settings of the convex-concave procedure

    Args:
        tau0: Initial slack penalty.
        tau_max: Largest slack penalty.
        gamma: Penalty growth factor, larger than one.
        eps_dc: Tolerance on the change of the penalized objective.
        eps_viol: Largest slack of an accepted iterate.
        max_iter: Maximal number of QPs solved.
        r0: Optional initial linearization point (one entry per row).
        r0_mode: How r0 is chosen when not given. 'uniform' uses
            log(1 - Delta / L) for every row, the t-value of the uniform
            risk allocation. 'literal' uses Delta / L.
    """
    tau0: float = 0.1
    tau_max: float = 1e4
    gamma: float = 2.0
    eps_dc: float = 1e-6
    eps_viol: float = 1e-6
    max_iter: int = 100
    r0: tuple = None
    r0_mode: str = 'uniform'

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError("tau0 should be positive.")
        if not self.tau0 <= self.tau_max:
            raise ValueError("tau0 should not exceed tau_max.")
        if not self.gamma > 1:
            raise ValueError("gamma should be larger than 1.")
        if not (self.eps_dc > 0 and self.eps_viol > 0):
            raise ValueError("eps_dc and eps_viol should be positive.")
        if self.max_iter < 1:
            raise ValueError("max_iter should be at least 1.")
        if self.r0_mode not in R0_MODES:
            raise ValueError("r0_mode should be one of {}.".format(
                R0_MODES))
        if self.r0 is not None:
            object.__setattr__(self, 'r0', tuple(float(v) for v in self.r0))

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return CcpConfig(**values)

    def initial_point(self, n_rows, Delta):
        if self.r0 is not None:
            if len(self.r0) != n_rows:
                raise DimensionMismatch(
                    "r0 has length {}, expected {}.".format(len(self.r0),
                                                            n_rows))
            return np.array(self.r0)
        if self.r0_mode == 'literal':
            return np.full(n_rows, Delta / n_rows)
        return np.full(n_rows, np.log1p(-Delta / n_rows))


@dataclass
class Iterate:
    U: np.ndarray
    t: np.ndarray
    slack: float
    objective: float


@dataclass
class CcpResult:
    """
    Outcome of the convex-concave procedure

    Attributes:
        U: Stacked input.
        t: Log budgets t_i = log(1 - delta_i).
        delta: Risk budgets.
        slack: Slack of the returned iterate.
        objective: Expected cost of U.
        status: CONVERGED, SLACK_POSITIVE, MAX_ITER or SUBPROBLEM_FAILED.
        trace: List of per-iteration dictionaries.
        timings: Seconds spent per phase.
    """
    U: np.ndarray
    t: np.ndarray
    delta: np.ndarray
    slack: float
    objective: float
    status: str
    trace: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status in (CONVERGED, MAX_ITER)

    def trace_frame(self):
        return pd.DataFrame(self.trace, columns=[
            'iteration', 'objective', 'slack', 'tau', 'qp_status',
            'qp_iterations', 'qp_time'])

    def to_dict(self):
        return {
            'U': self.U.tolist(),
            't': self.t.tolist(),
            'delta': self.delta.tolist(),
            'risk': float(np.sum(self.delta)),
            'slack': self.slack,
            'objective': self.objective,
            'status': self.status,
            'iterations': len(self.trace)
        }


def lse_linearize(r):
    """
    Value and gradient of log(sum(exp(r))).

    Returns:
        Tuple (value, gradient) with the gradient being softmax(r).
    """
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("Linearization point should be finite.")
    return float(special.logsumexp(r)), special.softmax(r)


def build_subproblem(dc, r, tau):
    """
    Convex QP of one iteration over z = [U; t; s].

    The reverse-convex row is replaced by
    lse(r) + g^T (t - r) + s >= log(L - Delta) with g = softmax(r), and the
    cost gets the extra term tau * s.

    Args:
        dc: DcProgram.
        r: Linearization point (L).
        tau: Slack penalty, nonnegative.

    Returns:
        QpProblem.
    """
    r = np.asarray(r, dtype=float).ravel()
    if len(r) != dc.n_rows:
        raise DimensionMismatch("Linearization point of length {}, expected "
                                "{}.".format(len(r), dc.n_rows))
    if tau < 0:
        raise ValueError("tau should be nonnegative.")
    mN, L = dc.n_inputs, dc.n_rows
    A, lb, ub, names = dc.constraint_rows()
    A = np.hstack([A, np.zeros((A.shape[0], 1))])
    value, grad = lse_linearize(r)

    lse_row = np.concatenate([np.zeros(mN), grad, [1.0]])
    slack_row = np.concatenate([np.zeros(mN + L), [1.0]])
    A = np.vstack([A, lse_row, slack_row])
    lb = np.concatenate([lb, [dc.lse_bound - value + grad @ r, 0.0]])
    ub = np.concatenate([ub, [np.inf, np.inf]])
    names = list(names) + ['lse', 'slack']

    d = mN + L + 1
    P = np.zeros((d, d))
    P[:mN, :mN] = dc.P_obj
    q = np.concatenate([dc.q_obj, np.zeros(L), [tau]])
    return QpProblem(P, q, A, lb, ub, dc.constant, names)


def check_exit(prev, curr, tau, cfg):
    """
    Exit test of the procedure.

    Args:
        prev: Previous Iterate, or None in the first iteration.
        curr: Current Iterate.
        tau: Penalty used to compute curr.
        cfg: CcpConfig.

    Returns:
        Tuple (stop, reason) where reason is CONVERGED, TAU_EXHAUSTED or
        None. solve_ccp clamps the penalty to tau_max, so TAU_EXHAUSTED
        is only returned to callers passing a larger tau.
    """
    if tau > cfg.tau_max:
        return True, TAU_EXHAUSTED
    if prev is None:
        return False, None
    change = (prev.objective - curr.objective) + \
        tau * (prev.slack - curr.slack)
    if abs(change) <= cfg.eps_dc and curr.slack <= cfg.eps_viol:
        return True, CONVERGED
    return False, None


def _result(dc, it, status, trace, timings):
    return CcpResult(U=it.U, t=it.t, delta=-np.expm1(it.t), slack=it.slack,
                     objective=it.objective, status=status, trace=trace,
                     timings=timings)


def solve_ccp(dc, cfg=None, backend=None):
    """
    Run the penalty convex-concave procedure on a DC program.

    Args:
        dc: DcProgram.
        cfg: CcpConfig. Defaults are used if None.
        backend: QpBackend. The bundled ADMM solver is used if None.

    Returns:
        CcpResult. Converged results have slack <= eps_viol. When the
        iteration budget runs out the best iterate with slack <= eps_viol is
        returned with status MAX_ITER, or the last iterate with status
        SLACK_POSITIVE if there is none.

    Raises:
        SubproblemFailed: The first QP could not be solved.
    """
    cfg = cfg or CcpConfig()
    backend = backend or AdmmQp()
    mN, L = dc.n_inputs, dc.n_rows
    r = cfg.initial_point(L, dc.Delta)
    tau = cfg.tau0
    prev, best, warm = None, None, None
    trace = []
    qp_time = 0.0
    start = time.perf_counter()
    status = MAX_ITER
    for iteration in range(1, cfg.max_iter + 1):
        qp = build_subproblem(dc, r, tau)
        tic = time.perf_counter()
        try:
            sol = backend.solve(qp, warm)
        except CcSynthError as err:
            sol, failure = None, str(err)
        else:
            failure = None if sol.optimal else sol.status
        elapsed = time.perf_counter() - tic
        qp_time += elapsed
        if failure is not None:
            logger.warning("QP of iteration %d failed: %s", iteration,
                           failure)
            if prev is None:
                raise SubproblemFailed(
                    "First CCP subproblem failed: {}".format(failure))
            status = SUBPROBLEM_FAILED
            break
        U = sol.z[:mN]
        t = sol.z[mN:mN + L]
        slack = max(0.0, float(sol.z[-1]))
        curr = Iterate(U, t, slack, dc.objective(U))
        trace.append({
            'iteration': iteration,
            'objective': curr.objective,
            'slack': slack,
            'tau': tau,
            'qp_status': sol.status,
            'qp_iterations': sol.iterations,
            'qp_time': elapsed
        })
        logger.debug("CCP iteration %d: objective %.6g, slack %.3g, "
                     "tau %.3g", iteration, curr.objective, slack, tau)
        if slack <= cfg.eps_viol and (
                best is None or curr.objective < best.objective):
            best = curr
        stop, reason = check_exit(prev, curr, tau, cfg)
        prev = curr
        if stop:
            status = reason
            break
        r = t
        tau = min(cfg.gamma * tau, cfg.tau_max)
        warm = sol
    timings = {'qp': qp_time, 'ccp': time.perf_counter() - start,
               'qp_solves': len(trace)}

    if status == CONVERGED:
        result = _result(dc, prev, CONVERGED, trace, timings)
    elif best is not None:
        result = _result(dc, best, status if status == SUBPROBLEM_FAILED
                         else MAX_ITER, trace, timings)
    else:
        result = _result(dc, prev, SLACK_POSITIVE, trace, timings)
    logger.info("CCP finished with status %s after %d iterations, "
                "objective %.6g, slack %.3g", result.status, len(trace),
                result.objective, result.slack)
    return result
