"""
Frozen benchmark problems with their expected result envelopes.

The fixtures live in the versioned `fixtures/v1` directory of the package.
Every fixture file has a `problem` section (a problem file document) and an
`expected` section whose values carry a provenance note.
"""
from dataclasses import dataclass, field
import logging
import os

import numpy as np
import pandas as pd
import yaml

from .config import build_problem_file
from .experiments import make_experiment, SUCCESS
from .results import benchmark_row
from .utils import get_time
from .validation import estimate_satisfaction

logger = logging.getLogger(__name__)

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                           'fixtures', 'v1')
FIXTURES = {
    'di': 'double_integrator.yaml',
    'di-sweep': 'double_integrator_sweep.yaml',
    'quad': 'quadrotor.yaml'
}
SWEEP_HORIZONS = (5, 10, 15, 20, 25, 30, 35)


@dataclass(frozen=True)
class BenchmarkFixture:
    """
    Problem document and expected result envelope of a benchmark

    Attributes:
        name: Fixture key.
        problem: Problem file document.
        expected: Expected envelope (objective range, minimal Monte Carlo
            satisfaction, maximal wall time).
        provenance: Origin of every expected value.
    """
    name: str
    problem: dict
    expected: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def text(self):
        return yaml.safe_dump(self.problem, default_flow_style=None,
                              sort_keys=False)

    def problem_file(self, overrides=None):
        return build_problem_file(self.problem, overrides)

    def check(self, result, report=None):
        """
        Compare a run against the envelope.

        Returns:
            List of messages, one per violated expectation. Empty if the run
            lies within the envelope.
        """
        failures = []
        if result.outcome != SUCCESS:
            failures.append("status {}".format(result.status))
            return failures
        if 'objective' in self.expected:
            lo, hi = self.expected['objective']
            if not lo <= result.objective <= hi:
                failures.append("objective {:.6g} outside [{}, {}]".format(
                    result.objective, lo, hi))
        if report is not None and 'min_satisfaction' in self.expected:
            if report.satisfaction < self.expected['min_satisfaction']:
                failures.append("satisfaction {:.4f} below {}".format(
                    report.satisfaction, self.expected['min_satisfaction']))
        if 'max_wall_time' in self.expected:
            total = result.timings.get('total', 0.0)
            if total > self.expected['max_wall_time']:
                failures.append("wall time {:.1f} s above {} s".format(
                    total, self.expected['max_wall_time']))
        return failures


def load_fixture(name):
    """
    Load a shipped fixture by key (see FIXTURES)
    """
    if name not in FIXTURES:
        raise KeyError("Unknown fixture '{}', expected one of {}.".format(
            name, sorted(FIXTURES)))
    with open(os.path.join(FIXTURE_DIR, FIXTURES[name]), 'r') as stream:
        doc = yaml.safe_load(stream)
    expected = dict(doc.get('expected') or {})
    provenance = expected.pop('provenance', {})
    return BenchmarkFixture(name, doc['problem'], expected, provenance)


def fixture_di():
    return load_fixture('di')


def fixture_di_sweep():
    return load_fixture('di-sweep')


def fixture_quad():
    return load_fixture('quad')


@dataclass
class BenchmarkRun:
    """
    Solved and validated benchmark

    Attributes:
        fixture: BenchmarkFixture.
        result: SynthesisResult.
        report: McReport, None if the synthesis failed.
        row: Table entries, see results.BENCHMARK_COLUMNS.
        failures: Violated expectations.
    """
    fixture: BenchmarkFixture
    result: object
    report: object
    row: list
    failures: list

    @property
    def passed(self):
        return not self.failures


def run_benchmark(fixture, path=None, samples=100000, seed=0,
                  overrides=None, method=None, dump_limit=0):
    """
    Solve a fixture, validate the controller by Monte Carlo and compare the
    outcome with the expected envelope.

    Args:
        fixture: BenchmarkFixture.
        path: Output folder for the run artifacts, or None.
        samples: Number of Monte Carlo samples.
        seed: Monte Carlo seed.
        overrides: Optional dictionary merged into the problem document.
        method: Optional method overriding the fixture's.
        dump_limit: Number of sampled trajectories written to disk.

    Returns:
        BenchmarkRun.
    """
    problem = fixture.problem_file(overrides)
    experiment = make_experiment(problem, path, method=method)
    result = experiment.run()
    report = None
    if result.outcome == SUCCESS and samples > 0:
        report = estimate_satisfaction(problem.spec, result.U, samples, seed,
                                       dump_limit=dump_limit)
        if experiment.logger is not None:
            experiment.logger.log_validation(report)
    row = benchmark_row(result, report, problem.spec.Delta)
    failures = fixture.check(result, report)
    for failure in failures:
        logger.warning("Benchmark '%s': %s", fixture.name, failure)
    return BenchmarkRun(fixture, result, report, row, failures)


def horizon_sweep(fixture, horizons=SWEEP_HORIZONS, path=None):
    """
    Solve a fixture for a range of horizons.

    Returns:
        pandas.DataFrame with columns horizon, status, objective, risk,
        qp_solves and time.
    """
    rows = []
    for horizon in horizons:
        problem = fixture.problem_file({'horizon': int(horizon)})
        tic = get_time()
        result = make_experiment(problem, path, verify=False).run()
        rows.append({
            'horizon': int(horizon),
            'status': result.status,
            'objective': result.objective,
            'risk': None if result.delta is None else float(
                np.sum(result.delta)),
            'qp_solves': result.timings.get('qp_solves'),
            'time': get_time() - tic
        })
        logger.info("Horizon %d solved with status %s in %.2f s", horizon,
                    result.status, rows[-1]['time'])
    return pd.DataFrame(rows, columns=['horizon', 'status', 'objective',
                                       'risk', 'qp_solves', 'time'])
