from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import getpass
import json
import logging
import os

import numpy as np
import pandas as pd
import yaml

from .__version__ import __version__
from . import ccp as ccp_module
from .errors import RowInfeasible
from .problems import (build_dc, build_gaussian_qp, build_moment_baseline_qp,
                       objective_value, stage_costs, verify_feasibility)
from .qp import make_backend, OPTIMAL, PRIMAL_INFEASIBLE
from .utils import (get_time, get_datetime, create_unique_folder,
                    benchmark_matrix_inverse, to_jsonable)

logger = logging.getLogger(__name__)

SUCCESS = 'success'
INFEASIBLE = 'infeasible'
FAILURE = 'failure'


@dataclass
class SynthesisResult:
    """
    Controller produced by an experiment

    Attributes:
        method: Name of the synthesis method.
        status: Status reported by the method.
        outcome: SUCCESS, INFEASIBLE or FAILURE.
        U: Stacked input, None if no controller was found.
        delta: Risk budgets per row, None if the method has none.
        objective: Expected cost of U.
        timings: Seconds spent per phase.
        trace: Optional pandas.DataFrame of solver iterations.
        program: Optional DcProgram or QpProblem that was solved.
        details: Further method-specific values.
    """
    method: str
    status: str
    outcome: str
    U: np.ndarray = None
    delta: np.ndarray = None
    objective: float = None
    timings: dict = field(default_factory=dict)
    trace: pd.DataFrame = None
    program: object = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            'method': self.method,
            'status': self.status,
            'outcome': self.outcome,
            'U': None if self.U is None else self.U.tolist(),
            'delta': None if self.delta is None else self.delta.tolist(),
            'risk': None if self.delta is None else float(
                np.sum(self.delta)),
            'objective': self.objective,
            'timings': self.timings
        }
        out.update(self.details)
        return to_jsonable(out)


class Experiment(ABC):
    """
    Base class for running a synthesis method on a problem

    This class runs a method implemented in a derived class on a parsed
    problem file. It automatically takes care of logging (through a Logger
    instance) of the problem, the solver settings, the controller and its
    mean trajectory.

    Args:
        problem: ProblemFile to solve.
        path: Path to which the experiment should write its logs. If None,
            nothing is written.
        backend: QpBackend instance. If None, it is created from the
            backend name and settings of the problem file.
        verify: Whether to evaluate the exact risk of the controller after
            solving.
    """
    method = 'abstract'

    def __init__(self, problem, path=None, backend=None, verify=True):
        self.problem = problem
        self.spec = problem.spec
        self.path = path
        self.backend = backend or make_backend(problem.backend,
                                               **problem.qp)
        self.verify = verify
        self.logger = None

    def _perform_experiment(self, dump_program=False):
        """
        Run the experiment.

        Args:
            dump_program: Whether to write the solved program to
                program.json.

        Returns:
            SynthesisResult.
        """
        logger.info("Run '%s' on problem '%s'", self.method, self.spec.name)
        self._event_start_experiment()
        if self.path is not None:
            self.logger = Logger(self.path, self.spec.name.lower())
            self.logger.log_experiment(self)
            self.logger.log_benchmarks()
        t_start = get_time()
        try:
            result = self._synthesize()
        except RowInfeasible as err:
            logger.warning("Problem is infeasible: %s", err)
            result = SynthesisResult(self.method, 'RowInfeasible',
                                     INFEASIBLE, details={
                                         'row': err.row,
                                         'message': str(err)})
        result.timings['total'] = get_time() - t_start
        if result.U is not None and self.verify:
            report = verify_feasibility(self.spec, result.U)
            result.details['verified_risk'] = report.total_risk
            result.details['verified'] = report.satisfied
        self._event_end_experiment(result)
        if self.logger is not None:
            self.logger.log_solution(result)
            if result.U is not None:
                self.logger.log_trajectory(self.spec, result)
            if result.trace is not None:
                self.logger.log_trace(result.trace)
            if dump_program and result.program is not None:
                self.logger.log_program(result.program)
            self.logger.log_results(self.make_metrics(result))
        return result

    @abstractmethod
    def _synthesize(self):
        """
        Compute the controller.

        This is an abstract method and should be implemented in
        method-specific classes derived from this one.

        Returns:
            SynthesisResult.
        """
        raise NotImplementedError

    def make_metrics(self, result):
        """
        Creates metrics to report in experiment.yaml

        Returns:
            Dictionary containing the metrics by name.
        """
        metrics = {
            'status': result.status,
            'outcome': result.outcome,
            'objective': result.objective,
            'time': result.timings.get('total')
        }
        if result.delta is not None:
            metrics['risk'] = float(np.sum(result.delta))
        for key in ('verified_risk', 'verified'):
            if key in result.details:
                metrics[key] = result.details[key]
        return to_jsonable(metrics)

    def _event_start_experiment(self):
        """
        Event that is run when a new experiment is started.
        """
        pass

    def _event_end_experiment(self, result):
        """
        Event that is run when the controller is computed, but before the
        metrics are stored to the experiment.yaml file.
        """
        pass

    def run(self, dump_program=False):
        """
        Solve the problem and log the results.

        Returns:
            SynthesisResult.
        """
        return self._perform_experiment(dump_program)


class DcExperiment(Experiment):
    """
    Piecewise affine DC program solved with the convex-concave procedure
    """
    method = 'dc'

    def _synthesize(self):
        dc = build_dc(self.spec)
        res = ccp_module.solve_ccp(dc, self.problem.ccp, self.backend)
        timings = dict(dc.timings)
        timings.update(res.timings)
        outcome = SUCCESS
        if res.status == ccp_module.SLACK_POSITIVE:
            outcome = INFEASIBLE
        elif res.status == ccp_module.SUBPROBLEM_FAILED:
            outcome = FAILURE
        elif res.status == ccp_module.MAX_ITER:
            outcome = FAILURE
            logger.warning("CCP hit its iteration budget without "
                           "converging; the best iterate is kept.")
        return SynthesisResult(
            self.method, res.status, outcome, U=res.U, delta=res.delta,
            objective=res.objective, timings=timings,
            trace=res.trace_frame(), program=dc,
            details={'slack': res.slack, 'iterations': len(res.trace)})


class _QpExperiment(Experiment):
    def _build(self):
        raise NotImplementedError

    def _split(self, z):
        return z[:self.spec.n_inputs], None

    def _synthesize(self):
        t_start = get_time()
        qp = self._build()
        t_build = get_time() - t_start
        sol = self.backend.solve(qp)
        timings = {'build': t_build, 'qp': get_time() - t_start - t_build,
                   'qp_solves': 1}
        if sol.status == OPTIMAL:
            U, delta = self._split(sol.z)
            return SynthesisResult(
                self.method, sol.status, SUCCESS, U=U, delta=delta,
                objective=objective_value(self.spec, U), timings=timings,
                program=qp, details={'iterations': sol.iterations})
        outcome = INFEASIBLE if sol.status == PRIMAL_INFEASIBLE else FAILURE
        return SynthesisResult(self.method, sol.status, outcome,
                               timings=timings, program=qp,
                               details={'iterations': sol.iterations})


class GaussianQpExperiment(_QpExperiment):
    """
    One-shot QP with jointly optimized risk budgets (Gaussian problems)
    """
    method = 'gaussian-qp'

    def _build(self):
        return build_gaussian_qp(self.spec, self.problem.delta_lb)

    def _split(self, z):
        mN = self.spec.n_inputs
        return z[:mN], np.clip(z[mN:], 0.0, None)


class MomentBaselineExperiment(_QpExperiment):
    """
    QP with uniform risk budgets and Cantelli tightening
    """
    method = 'moment-baseline'

    def _build(self):
        return build_moment_baseline_qp(self.spec)

    def _split(self, z):
        L = self.spec.n_rows
        return z[:self.spec.n_inputs], np.full(L, self.spec.Delta / L)


EXPERIMENTS = {
    'dc': DcExperiment,
    'gaussian-qp': GaussianQpExperiment,
    'moment-baseline': MomentBaselineExperiment
}


def make_experiment(problem, path=None, method=None, **kwargs):
    """
    Create the experiment of a problem file.

    Args:
        problem: ProblemFile.
        path: Output path, or None to write nothing.
        method: Method name overriding the one of the problem file.
        **kwargs: Passed on to the Experiment constructor.
    """
    method = method or problem.method
    if method not in EXPERIMENTS:
        raise ValueError("Unknown method '{}'.".format(method))
    return EXPERIMENTS[method](problem, path, **kwargs)


def mean_trajectory_frame(spec, U):
    """
    Per-step mean state, desired state, input and expected stage cost
    """
    n, m, N = spec.n, spec.m, spec.horizon
    mu, _ = spec.moments(U)
    frame = stage_costs(spec, U)
    for i in range(n):
        frame['mean_x{}'.format(i)] = mu.reshape(N, n)[:, i]
    for i in range(n):
        frame['desired_x{}'.format(i)] = spec.X_d.reshape(N, n)[:, i]
    for i in range(m):
        frame['u{}'.format(i)] = np.asarray(U).reshape(N, m)[:, i]
    return frame


def write_json(path, data):
    with open(path, 'w') as handle:
        json.dump(to_jsonable(data), handle, sort_keys=True, indent=2)


class Logger:
    """
    Class that takes care of all logging of experiments.

    An instance of this class is automatically made and handled within the
    Experiment class.

    Args:
        path: Path to which logging results should be written. Within this
            folder each run gets its own subfolder.
        prefered_subfolder: Name of the folder to be created in the logging
            path. The folder is created with the utils.create_unique_folder
            function, so naming conflicts will be automatically resolved.
    """
    def __init__(self, path, prefered_subfolder):
        self.basepath = str(path)
        os.makedirs(self.basepath, exist_ok=True)
        self.path = create_unique_folder(self.basepath, prefered_subfolder)

    def file(self, name):
        return os.path.join(self.path, name)

    def log_benchmarks(self):
        """
        Benchmark the machine with a matrix inversion (see the utils
        module) so wall-clock numbers can be compared across hosts.

        Results are stored in the base log path in the benchmarks.yaml file.
        If this file already exists, no benchmarks are run.
        """
        target = os.path.join(self.basepath, "benchmarks.yaml")
        if os.path.exists(target):
            return
        with open(target, "w") as handle:
            info = {
                'benchmarks': {
                    'matrix_inversion': benchmark_matrix_inverse()
                }
            }
            yaml.dump(info, handle, default_flow_style=False)

    def log_experiment(self, experiment):
        """
        Log the problem and the solver set up to experiment.yaml in order to
        optimize reproducability.

        This method should be called *before* the problem is solved.
        """
        info = {
            'meta': {
                'datetime': str(get_datetime()),
                'timestamp': str(get_time()),
                'user': getpass.getuser(),
                'version': __version__
            },
            'problem': experiment.spec.summary(),
            'experiment': {
                'type': experiment.__class__.__name__,
                'method': experiment.method
            },
            'backend': {
                'name': experiment.backend.name,
                'properties': experiment.backend.parameters()
            }
        }
        if experiment.method == 'dc':
            info['ccp'] = vars(experiment.problem.ccp).copy()
        with open(self.file("experiment.yaml"), "w") as handle:
            yaml.dump(to_jsonable(info), handle, default_flow_style=False)

    def log_solution(self, result):
        write_json(self.file("solution.json"), result.to_dict())

    def log_trajectory(self, spec, result):
        mean_trajectory_frame(spec, result.U).to_csv(
            self.file("mean_trajectory.csv"), index=False)

    def log_trace(self, trace):
        trace.to_csv(self.file("trace.csv"), index=False)

    def log_program(self, program):
        write_json(self.file("program.json"), program.to_dict())

    def log_validation(self, report):
        write_json(self.file("validation.json"), report.to_dict())
        if report.trajectories is not None:
            report.trajectories.to_csv(self.file("trajectories.csv"),
                                       index=False)

    def log_results(self, metrics):
        """
        Log the results of the experiment in the experiment.yaml file

        This method should be called *after* the problem is solved.

        Args:
            metrics: Dictionary containing the result metrics to store. Keys
                represent the name with which the values should be stored.
        """
        with open(self.file("experiment.yaml"), 'r') as stream:
            experiment = yaml.safe_load(stream)
        experiment['results'] = to_jsonable(metrics)
        with open(self.file("experiment.yaml"), 'w') as handle:
            yaml.dump(experiment, handle, default_flow_style=False)
