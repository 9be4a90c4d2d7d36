"""
Operator splitting (ADMM) solver for convex QPs.

The iteration alternates a regularized KKT solve, a projection onto the
bounds and a dual update. The problem data are equilibrated with Ruiz
scaling before the iteration starts; residuals and certificates are
evaluated on the unscaled problem. A converged iterate is polished by
solving the equality-constrained QP of its active set.
"""
from dataclasses import dataclass, asdict
import logging

import numpy as np
from scipy import linalg

from .backend import QpBackend
from .problem import (QpSolution, OPTIMAL, PRIMAL_INFEASIBLE,
                      DUAL_INFEASIBLE, MAX_ITER)
from ..errors import NumericalBreakdown

logger = logging.getLogger(__name__)

RHO_MIN = 1e-6
RHO_MAX = 1e6
RHO_EQ_FACTOR = 1e3
SCALING_MIN = 1e-4
SCALING_MAX = 1e4


@dataclass(frozen=True)
class AdmmSettings:
    """
    Settings of the ADMM solver

    Args:
        eps_abs: Absolute tolerance on primal and dual residuals.
        eps_rel: Relative tolerance on primal and dual residuals.
        max_iter: Maximal number of iterations.
        rho: Initial step size of inequality rows. Equality rows use
            1e3 * rho.
        sigma: Regularization of the primal variable.
        alpha: Over-relaxation factor in (0, 2).
        eps_prim_inf: Tolerance of the primal infeasibility certificate.
        eps_dual_inf: Tolerance of the dual infeasibility certificate.
        scaling: Number of Ruiz equilibration passes, 0 disables scaling.
        adaptive_rho: Whether to rebalance rho during the iteration.
        adaptive_rho_interval: Iterations between rho updates.
        adaptive_rho_tolerance: Factor by which rho has to change before
            the KKT matrix is refactored.
        check_interval: Iterations between termination checks.
        polish: Whether to polish converged solutions.
        polish_delta: Regularization of the polishing KKT system.
        polish_refine_iter: Iterative refinement steps while polishing.
    """
    eps_abs: float = 1e-8
    eps_rel: float = 1e-8
    max_iter: int = 20000
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    eps_prim_inf: float = 1e-6
    eps_dual_inf: float = 1e-6
    scaling: int = 10
    adaptive_rho: bool = True
    adaptive_rho_interval: int = 25
    adaptive_rho_tolerance: float = 5.0
    check_interval: int = 5
    polish: bool = True
    polish_delta: float = 1e-9
    polish_refine_iter: int = 3

    def __post_init__(self):
        if not (self.eps_abs >= 0 and self.eps_rel >= 0
                and self.eps_abs + self.eps_rel > 0):
            raise ValueError("eps_abs and eps_rel should be nonnegative and "
                             "not both zero.")
        if self.max_iter < 1:
            raise ValueError("max_iter should be at least 1.")
        if not self.rho > 0 or not self.sigma > 0:
            raise ValueError("rho and sigma should be positive.")
        if not 0 < self.alpha < 2:
            raise ValueError("alpha should lie in (0, 2).")
        if self.check_interval < 1 or self.adaptive_rho_interval < 1:
            raise ValueError("Intervals should be at least 1.")

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return AdmmSettings(**values)


def _inf_norm(v):
    return float(np.max(np.abs(v), initial=0.0))


def _limit_scaling(v):
    v = np.asarray(v, dtype=float)
    v = np.where(v < SCALING_MIN, 1.0, v)
    return np.minimum(v, SCALING_MAX)


class _ScaledProblem:
    """
    Ruiz-equilibrated copy of a QpProblem: P_s = c D P D, q_s = c D q,
    A_s = E A D, bounds E lb and E ub.
    """
    def __init__(self, qp, passes):
        d, r = qp.n_variables, qp.n_constraints
        D, E, c = np.ones(d), np.ones(r), 1.0
        P, q, A = qp.P.copy(), qp.q.copy(), qp.A.copy()
        for _ in range(passes):
            col = np.maximum(np.max(np.abs(P), axis=0, initial=0.0),
                             np.max(np.abs(A), axis=0, initial=0.0))
            row = np.max(np.abs(A), axis=1, initial=0.0)
            dx = 1.0 / np.sqrt(_limit_scaling(col))
            dz = 1.0 / np.sqrt(_limit_scaling(row))
            P = dx[:, None] * P * dx
            q = dx * q
            A = dz[:, None] * A * dx
            D *= dx
            E *= dz
            cost = max(np.mean(np.max(np.abs(P), axis=0, initial=0.0)),
                       _inf_norm(q))
            gamma = 1.0 / float(_limit_scaling(cost))
            P *= gamma
            q *= gamma
            c *= gamma
        self.P, self.q, self.A = P, q, A
        self.lb, self.ub = E * qp.lb, E * qp.ub
        self.D, self.E, self.c = D, E, c


class AdmmQp(QpBackend):
    """
    Bundled ADMM QP solver

    Args:
        settings: AdmmSettings. Defaults are used if None.
    """
    name = 'admm'

    def __init__(self, settings=None):
        self.settings = settings or AdmmSettings()
        self.store_parameters = ['settings']
        self.reset()

    def reset(self):
        self.last_rho = self.settings.rho
        self.solves = 0

    def parameters(self):
        return asdict(self.settings)

    def _rho_vector(self, qp, rho):
        rho_vec = np.full(qp.n_constraints, rho)
        free = np.isinf(qp.lb) & np.isinf(qp.ub)
        equality = (qp.ub - qp.lb) <= 1e-12 * np.maximum(1.0, np.abs(qp.ub))
        rho_vec[equality] = RHO_EQ_FACTOR * rho
        rho_vec[free] = RHO_MIN
        return rho_vec

    def _factor(self, scaled, rho_vec):
        K = scaled.P + self.settings.sigma * np.eye(len(scaled.q)) + \
            scaled.A.T @ (rho_vec[:, None] * scaled.A)
        try:
            return linalg.cho_factor(K)
        except linalg.LinAlgError as err:
            raise NumericalBreakdown(
                "KKT factorization failed: {}".format(err))

    def solve(self, qp, warm_start=None):
        """
        Solve a QP with ADMM.

        Args:
            qp: QpProblem.
            warm_start: Optional QpSolution to start from.

        Returns:
            QpSolution.

        Raises:
            NumericalBreakdown: The iterates became non-finite or the KKT
                matrix could not be factored.
        """
        cfg = self.settings
        self.solves += 1
        scaled = _ScaledProblem(qp, cfg.scaling)
        D, E, c = scaled.D, scaled.E, scaled.c
        d, r = qp.n_variables, qp.n_constraints

        x, z, y = np.zeros(d), np.zeros(r), np.zeros(r)
        if warm_start is not None and len(warm_start.z) == d \
                and len(warm_start.y) == r:
            x = np.asarray(warm_start.z, dtype=float) / D
            y = c * np.asarray(warm_start.y, dtype=float) / E
            z = np.clip(scaled.A @ x, scaled.lb, scaled.ub)

        rho = cfg.rho
        rho_vec = self._rho_vector(qp, rho)
        factor = self._factor(scaled, rho_vec)

        status = MAX_ITER
        prim_res = dual_res = np.inf
        iteration = 0
        for iteration in range(1, cfg.max_iter + 1):
            x_prev, y_prev = x, y
            rhs = cfg.sigma * x - scaled.q + scaled.A.T @ (rho_vec * z - y)
            x_tilde = linalg.cho_solve(factor, rhs)
            z_tilde = scaled.A @ x_tilde
            x = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * x_prev
            z_relax = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z
            z = np.clip(z_relax + y / rho_vec, scaled.lb, scaled.ub)
            y = y + rho_vec * (z_relax - z)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise NumericalBreakdown(
                    "Non-finite ADMM iterate at iteration {}.".format(
                        iteration))
            if iteration % cfg.check_interval and iteration != cfg.max_iter:
                continue

            Ax, Px, Aty = scaled.A @ x, scaled.P @ x, scaled.A.T @ y
            prim_res = _inf_norm((Ax - z) / E)
            dual_res = _inf_norm((Px + scaled.q + Aty) / D) / c
            eps_prim = cfg.eps_abs + cfg.eps_rel * max(
                _inf_norm(Ax / E), _inf_norm(z / E))
            eps_dual = cfg.eps_abs + cfg.eps_rel / c * max(
                _inf_norm(Px / D), _inf_norm(Aty / D),
                _inf_norm(scaled.q / D))
            if prim_res <= eps_prim and dual_res <= eps_dual:
                status = OPTIMAL
                break
            if self._primal_infeasible(qp, scaled, y - y_prev):
                status = PRIMAL_INFEASIBLE
                break
            if self._dual_infeasible(qp, scaled, x - x_prev):
                status = DUAL_INFEASIBLE
                break

            if cfg.adaptive_rho and \
                    iteration % cfg.adaptive_rho_interval == 0:
                prim_scaled = _inf_norm(Ax - z) / (
                    max(_inf_norm(Ax), _inf_norm(z)) + 1e-30)
                dual_scaled = _inf_norm(Px + scaled.q + Aty) / (
                    max(_inf_norm(Px), _inf_norm(Aty),
                        _inf_norm(scaled.q)) + 1e-30)
                new_rho = rho * np.sqrt(prim_scaled / (dual_scaled + 1e-30))
                new_rho = float(np.clip(new_rho, RHO_MIN, RHO_MAX))
                if new_rho > cfg.adaptive_rho_tolerance * rho or \
                        new_rho < rho / cfg.adaptive_rho_tolerance:
                    logger.debug("Updating rho from %.3g to %.3g at "
                                 "iteration %d", rho, new_rho, iteration)
                    rho = new_rho
                    rho_vec = self._rho_vector(qp, rho)
                    factor = self._factor(scaled, rho_vec)
        self.last_rho = rho

        x_u, y_u, z_u = D * x, E * y / c, z / E
        info = {'rho': rho, 'polished': False}
        if status in (OPTIMAL, MAX_ITER) and cfg.polish:
            polished = _polish(qp, x_u, y_u, z_u, cfg.polish_delta,
                               cfg.polish_refine_iter)
            if polished is not None:
                xp, yp, p_res, d_res = polished
                tol = cfg.eps_abs + cfg.eps_rel * max(
                    1.0, _inf_norm(qp.q), _inf_norm(qp.P @ xp))
                improves = p_res <= max(prim_res, tol) and \
                    d_res <= max(dual_res, tol)
                if improves:
                    x_u, y_u = xp, yp
                    prim_res, dual_res = p_res, d_res
                    info['polished'] = True
                    if status == MAX_ITER and p_res <= tol and d_res <= tol:
                        status = OPTIMAL
        if status == PRIMAL_INFEASIBLE:
            info['certificate'] = E * (y - y_prev)
        elif status == DUAL_INFEASIBLE:
            info['certificate'] = D * (x - x_prev)
        logger.debug("ADMM finished with status %s after %d iterations "
                     "(primal %.2e, dual %.2e)", status, iteration,
                     prim_res, dual_res)
        return QpSolution(z=x_u, y=y_u, status=status, primal_res=prim_res,
                          dual_res=dual_res, iterations=iteration,
                          objective=qp.objective(x_u), info=info)

    def _primal_infeasible(self, qp, scaled, delta_y):
        dy = scaled.E * delta_y
        norm = _inf_norm(dy)
        if norm < 1e-30:
            return False
        eps = self.settings.eps_prim_inf
        if _inf_norm(scaled.A.T @ delta_y / scaled.D) > eps * norm:
            return False
        with np.errstate(invalid='ignore'):
            support = np.where(dy > 0, qp.ub * dy, 0.0) + \
                np.where(dy < 0, qp.lb * dy, 0.0)
        total = float(np.sum(support))
        return np.isfinite(total) and total < -eps * norm

    def _dual_infeasible(self, qp, scaled, delta_x):
        dx = scaled.D * delta_x
        norm = _inf_norm(dx)
        if norm < 1e-30:
            return False
        eps = self.settings.eps_dual_inf
        if _inf_norm(scaled.P @ delta_x / scaled.D) / scaled.c > eps * norm:
            return False
        if not qp.q @ dx < -eps * norm:
            return False
        Adx = scaled.A @ delta_x / scaled.E
        upper_ok = np.all(Adx[np.isfinite(qp.ub)] <= eps * norm)
        lower_ok = np.all(Adx[np.isfinite(qp.lb)] >= -eps * norm)
        return bool(upper_ok and lower_ok)


def _polish(qp, x, y, z, delta, refine_iter):
    """
    Solve the equality-constrained QP on the active set guessed from (x, y,
    z). Returns (x, y, primal residual, dual residual) or None if the guess
    is inconsistent.
    """
    lower = z - qp.lb < -y
    upper = qp.ub - z < y
    active = lower | upper
    d = qp.n_variables
    A_act = qp.A[active]
    b_act = np.where(lower, qp.lb, qp.ub)[active]
    if not np.all(np.isfinite(b_act)):
        return None
    k = A_act.shape[0]
    K = np.block([[qp.P, A_act.T], [A_act, np.zeros((k, k))]])
    K_reg = K + np.diag(np.concatenate([np.full(d, delta),
                                        np.full(k, -delta)]))
    rhs = np.concatenate([-qp.q, b_act])
    try:
        lu = linalg.lu_factor(K_reg, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        return None
    sol = linalg.lu_solve(lu, rhs)
    for _ in range(refine_iter):
        sol = sol + linalg.lu_solve(lu, rhs - K @ sol)
    if not np.all(np.isfinite(sol)):
        return None
    xp = sol[:d]
    yp = np.zeros(qp.n_constraints)
    yp[active] = sol[d:]
    # Duals must carry the sign of the bound they are attached to
    tol = 1e-7 * max(1.0, _inf_norm(yp))
    only_lower = lower & ~upper
    only_upper = upper & ~lower
    if np.any(yp[only_lower] > tol) or np.any(yp[only_upper] < -tol):
        return None
    Ax = qp.A @ xp
    p_res = _inf_norm(Ax - np.clip(Ax, qp.lb, qp.ub))
    d_res = _inf_norm(qp.P @ xp + qp.q + qp.A.T @ yp)
    return xp, yp, p_res, d_res


def qp_solve(qp, cfg=None, warm_start=None):
    """
    Solve a QpProblem with the bundled ADMM solver.

    Args:
        qp: QpProblem.
        cfg: AdmmSettings or a dictionary of overrides. Defaults are used
            if None.
        warm_start: Optional QpSolution.

    Returns:
        QpSolution.
    """
    if isinstance(cfg, dict):
        cfg = AdmmSettings(**cfg)
    return AdmmQp(cfg).solve(qp, warm_start)
