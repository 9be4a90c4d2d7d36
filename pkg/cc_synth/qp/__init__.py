from .problem import (QpProblem, QpSolution, kkt_residuals, OPTIMAL,  # noqa
                      PRIMAL_INFEASIBLE, DUAL_INFEASIBLE, MAX_ITER,
                      STATUSES)
from .backend import QpBackend  # noqa: F401
from .admm import AdmmSettings, AdmmQp, qp_solve  # noqa: F401
from .osqp import OsqpBackend  # noqa: F401


def make_backend(name='admm', **settings):
    """
    Create a QP backend by name.

    Args:
        name: 'admm' for the bundled solver or 'osqp' for the external one.
        **settings: Settings passed to the backend.

    Returns:
        QpBackend instance.
    """
    if name == 'admm':
        return AdmmQp(AdmmSettings(**settings))
    if name == 'osqp':
        return OsqpBackend(**settings)
    raise ValueError("Unknown QP backend '{}'.".format(name))
