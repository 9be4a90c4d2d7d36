""" Backend wrapping the OSQP solver. Documentation for the osqp package is at
https://osqp.org. The package can be installed with pip, or together with
cc_synth as the `osqp` extra, which requires osqp 1.0 or later. Settings are
passed to OSQP.setup() as keyword arguments, see the OSQP documentation for
the available options. """
import numpy as np
from scipy import sparse

from .backend import QpBackend
from .problem import (QpSolution, OPTIMAL, PRIMAL_INFEASIBLE,
                      DUAL_INFEASIBLE, MAX_ITER)
from ..errors import NumericalBreakdown

try:
    import osqp
except ImportError:
    pass


_STATUS_MAP = {
    'solved': OPTIMAL,
    'primal infeasible': PRIMAL_INFEASIBLE,
    'primal infeasible inaccurate': PRIMAL_INFEASIBLE,
    'dual infeasible': DUAL_INFEASIBLE,
    'dual infeasible inaccurate': DUAL_INFEASIBLE,
    'maximum iterations reached': MAX_ITER,
    'solved inaccurate': MAX_ITER,
    'run time limit reached': MAX_ITER
}


class OsqpBackend(QpBackend):
    name = 'osqp'

    def __init__(self, eps_abs=1e-8, eps_rel=1e-8, max_iter=20000,
                 polish=True, **options):
        """
        Initializes the backend. Extra keyword arguments are passed on to
        OSQP.setup().
        """
        try:
            osqp
        except NameError:
            raise ImportError(
                "The `osqp` package is not installed. Install cc_synth with "
                "the `osqp` extra (pip install .[osqp]) to use this "
                "backend.")
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter
        self.polish = polish
        self.options = options
        self.store_parameters = ['eps_abs', 'eps_rel', 'max_iter', 'polish',
                                 'options']
        self.reset()

    def reset(self):
        self.solves = 0

    def solve(self, qp, warm_start=None):
        solver = osqp.OSQP()
        solver.setup(P=sparse.csc_matrix(np.triu(qp.P)), q=qp.q,
                     A=sparse.csc_matrix(qp.A), l=qp.lb, u=qp.ub,
                     eps_abs=self.eps_abs, eps_rel=self.eps_rel,
                     max_iter=self.max_iter, polishing=self.polish,
                     verbose=False, **self.options)
        if warm_start is not None and len(warm_start.z) == qp.n_variables:
            solver.warm_start(x=warm_start.z, y=warm_start.y)
        result = solver.solve()
        self.solves += 1
        status = _STATUS_MAP.get(result.info.status)
        if status is None:
            raise NumericalBreakdown("OSQP returned status '{}'.".format(
                result.info.status))
        d, r = qp.n_variables, qp.n_constraints
        z = np.asarray(result.x if result.x is not None else np.zeros(d),
                       dtype=float)
        y = np.asarray(result.y if result.y is not None else np.zeros(r),
                       dtype=float)
        z = np.where(np.isfinite(z), z, 0.0)
        y = np.where(np.isfinite(y), y, 0.0)
        return QpSolution(z=z, y=y, status=status,
                          primal_res=float(result.info.prim_res),
                          dual_res=float(result.info.dual_res),
                          iterations=int(result.info.iter),
                          objective=qp.objective(z),
                          info={'osqp_status': result.info.status})
