"""
Quadratic programs in the two-sided standard form

    minimize    1/2 z^T P z + q^T z
    subject to  lb <= A z <= ub

and the solutions returned by the backends.
"""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch

OPTIMAL = 'Optimal'
PRIMAL_INFEASIBLE = 'PrimalInfeasible'
DUAL_INFEASIBLE = 'DualInfeasible'
MAX_ITER = 'MaxIter'
STATUSES = (OPTIMAL, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE, MAX_ITER)


class QpProblem:
    """
    Convex quadratic program with two-sided linear constraints

    Equality rows have lb == ub; one-sided rows use -inf or inf. P is
    symmetrized on construction.

    Args:
        P: Positive semidefinite matrix (d x d).
        q: Linear cost (d).
        A: Constraint matrix (r x d). May have zero rows.
        lb: Lower bounds (r).
        ub: Upper bounds (r).
        constant: Constant added to the objective value.
        names: Optional labels of the constraint rows, used in dumps.
    """
    def __init__(self, P, q, A, lb, ub, constant=0.0, names=None):
        q = np.asarray(q, dtype=float).ravel()
        d = len(q)
        P = np.asarray(P, dtype=float).reshape(d, d)
        A = np.asarray(A, dtype=float).reshape(-1, d)
        lb = np.asarray(lb, dtype=float).ravel()
        ub = np.asarray(ub, dtype=float).ravel()
        r = A.shape[0]
        if len(lb) != r or len(ub) != r:
            raise DimensionMismatch(
                "Constraint matrix has {} rows but bounds have lengths {} "
                "and {}.".format(r, len(lb), len(ub)))
        if np.any(lb > ub):
            bad = int(np.argmax(lb > ub))
            raise ValueError("Row {} has lb {} > ub {}.".format(
                bad, lb[bad], ub[bad]))
        if names is not None and len(names) != r:
            raise DimensionMismatch("Expected {} row names, got {}.".format(
                r, len(names)))
        self.P = 0.5 * (P + P.T)
        self.q = q
        self.A = A
        self.lb = lb
        self.ub = ub
        self.constant = float(constant)
        self.names = list(names) if names is not None else None

    @property
    def n_variables(self):
        return len(self.q)

    @property
    def n_constraints(self):
        return self.A.shape[0]

    def objective(self, z):
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.P @ z + self.q @ z + self.constant)

    def scaled(self, factor):
        """
        Copy with the cost (P, q, constant) multiplied by factor
        """
        return QpProblem(factor * self.P, factor * self.q, self.A, self.lb,
                         self.ub, factor * self.constant, self.names)

    def to_dict(self):
        return {
            'P': self.P.tolist(),
            'q': self.q.tolist(),
            'A': self.A.tolist(),
            'lb': [None if not np.isfinite(v) else float(v)
                   for v in self.lb],
            'ub': [None if not np.isfinite(v) else float(v)
                   for v in self.ub],
            'constant': self.constant,
            'names': self.names
        }


@dataclass
class QpSolution:
    """
    Result of a QP solve

    Attributes:
        z: Primal solution.
        y: Dual solution, positive on active upper bounds and negative on
            active lower bounds.
        status: One of STATUSES.
        primal_res: Infinity norm of A z - proj(A z).
        dual_res: Infinity norm of P z + q + A^T y.
        iterations: Number of iterations used.
        objective: Objective value at z, constant included.
        info: Backend-specific details.
    """
    z: np.ndarray
    y: np.ndarray
    status: str
    primal_res: float = np.inf
    dual_res: float = np.inf
    iterations: int = 0
    objective: float = np.nan
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def kkt_residuals(qp, sol):
    """
    KKT residuals of a primal-dual pair.

    Args:
        qp: QpProblem.
        sol: QpSolution, or any object with attributes z and y.

    Returns:
        Dictionary with the keys 'stationarity' (||P z + q + A^T y||_inf),
        'primal' (largest bound violation of A z) and 'complementarity'
        (largest |y_r| times the distance of row r to the bound its sign
        selects).
    """
    z = np.asarray(sol.z, dtype=float)
    y = np.asarray(sol.y, dtype=float)
    if len(z) != qp.n_variables or len(y) != qp.n_constraints:
        raise DimensionMismatch(
            "Solution has shapes ({}, {}), problem ({}, {}).".format(
                len(z), len(y), qp.n_variables, qp.n_constraints))
    Az = qp.A @ z
    stationarity = qp.P @ z + qp.q + qp.A.T @ y
    violation = np.maximum(np.maximum(qp.lb - Az, Az - qp.ub), 0.0)
    with np.errstate(invalid='ignore'):
        comp_up = np.where(y > 0, y * np.abs(qp.ub - Az), 0.0)
        comp_lo = np.where(y < 0, -y * np.abs(Az - qp.lb), 0.0)
    comp = np.maximum(comp_up, comp_lo)

    def inf_norm(v):
        return float(np.max(np.abs(v))) if len(v) else 0.0

    return {
        'stationarity': inf_norm(stationarity),
        'primal': inf_norm(violation),
        'complementarity': inf_norm(comp)
    }
