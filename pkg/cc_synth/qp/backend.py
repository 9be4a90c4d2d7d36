from abc import ABC, abstractmethod


class QpBackend(ABC):
    """
    Abstract base class for all QP solver backends

    Every solver used by the convex-concave procedure should be derived from
    this class. It requires the implementation of the __init__, solve and
    reset methods.

    As it is an abstract base class, direct (i.e. not derived) instances of
    this class cannot exist.
    """
    name = 'abstract'

    @abstractmethod
    def __init__(self):
        """
        Initialisation method for instances of the QpBackend class.

        It should always at least define a property store_parameters, a list
        with the names of the attributes holding the configuration of the
        backend. These are logged at the start of an experiment. If there
        are no such parameters, store_parameters should be an empty list.

        Subclasses may take input arguments, but all of them should have
        defaults.
        """
        self.store_parameters = []

    @abstractmethod
    def solve(self, qp, warm_start=None):
        """
        Solve a quadratic program.

        Args:
            qp: QpProblem to solve.
            warm_start: Optional QpSolution whose z and y initialize the
                iteration. Only used if the shapes match.

        Returns:
            QpSolution. Failure to converge is reported through the status,
            never as an exception.
        """
        raise NotImplementedError

    @abstractmethod
    def reset(self):
        """
        Drop all state cached between solves
        """
        raise NotImplementedError

    def parameters(self):
        """
        Returns a dictionary of the configuration listed in store_parameters
        """
        return {name: getattr(self, name) for name in self.store_parameters}
