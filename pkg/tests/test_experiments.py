import os
import json

import yaml
import pytest
import numpy as np

from cc_synth import experiments as exp
from cc_synth import distributions as dist
from cc_synth.config import ProblemFile
from cc_synth.validation import estimate_satisfaction
from cc_synth.errors import RowInfeasible
from .test_problems import small_problem, gaussian_problem


class TmpExperimentCorrect(exp.Experiment):
    method = 'fixed'

    def _synthesize(self):
        U = np.full(self.spec.n_inputs, -1.0)
        return exp.SynthesisResult(self.method, 'Done', exp.SUCCESS, U=U,
                                   objective=1.0)


class TmpExperimentInfeasible(exp.Experiment):
    def _synthesize(self):
        raise RowInfeasible(2)


class TmpExperimentWrong(exp.Experiment):
    pass


def test_experiment_initialisation():
    problem = ProblemFile(small_problem())
    experiment = TmpExperimentCorrect(problem, "./tmpexperiment")
    assert experiment.path == "./tmpexperiment"
    assert experiment.spec is problem.spec
    assert experiment.logger is None
    assert experiment.backend.name == 'admm'
    # Test if Experiment class is correctly abstracted
    with pytest.raises(TypeError):
        _ = exp.Experiment(problem)  # pylint: disable=E0110
    with pytest.raises(TypeError):
        _ = TmpExperimentWrong(problem)  # pylint: disable=E0110


def test_experiment_perform(tmp_path):
    path = str(tmp_path / 'out')
    experiment = TmpExperimentCorrect(ProblemFile(small_problem()), path)
    result = experiment.run()
    assert result.outcome == exp.SUCCESS
    assert 'total' in result.timings
    assert result.details['verified'] is True
    folder = os.path.join(path, 'small')
    assert experiment.logger.path == folder
    for name in ('experiment.yaml', 'solution.json', 'mean_trajectory.csv'):
        assert os.path.exists(os.path.join(folder, name))
    assert os.path.exists(os.path.join(path, 'benchmarks.yaml'))
    assert not os.path.exists(os.path.join(folder, 'trace.csv'))
    with open(os.path.join(folder, 'experiment.yaml')) as stream:
        info = yaml.safe_load(stream)
    assert info['experiment'] == {'type': 'TmpExperimentCorrect',
                                  'method': 'fixed'}
    assert info['problem']['name'] == 'small'
    assert info['results']['status'] == 'Done'
    assert 'ccp' not in info
    with open(os.path.join(folder, 'solution.json')) as stream:
        solution = json.load(stream)
    assert solution['U'] == [-1.0, -1.0, -1.0]
    # A second run gets its own folder
    experiment = TmpExperimentCorrect(ProblemFile(small_problem()), path)
    experiment.run()
    assert experiment.logger.path == folder + '_1'


def test_infeasible_rows_are_reported():
    experiment = TmpExperimentInfeasible(ProblemFile(small_problem()))
    result = experiment.run()
    assert result.outcome == exp.INFEASIBLE
    assert result.details['row'] == 2
    assert result.U is None
    assert result.to_dict()['U'] is None


def test_dc_experiment(tmp_path):
    problem = ProblemFile(small_problem())
    experiment = exp.make_experiment(problem, str(tmp_path))
    assert isinstance(experiment, exp.DcExperiment)
    result = experiment.run(dump_program=True)
    assert result.outcome == exp.SUCCESS
    assert result.details['verified_risk'] <= problem.spec.Delta + 1e-5
    assert result.timings['qp_solves'] == len(result.trace)
    folder = experiment.logger.path
    for name in ('trace.csv', 'program.json'):
        assert os.path.exists(os.path.join(folder, name))
    with open(os.path.join(folder, 'experiment.yaml')) as stream:
        info = yaml.safe_load(stream)
    assert info['ccp']['r0_mode'] == 'uniform'
    assert info['results']['outcome'] == exp.SUCCESS


def test_dc_experiment_infeasible():
    problem = ProblemFile(small_problem(bound=-100.0))
    result = exp.make_experiment(problem).run()
    assert result.outcome == exp.INFEASIBLE
    assert result.status == 'RowInfeasible'


def test_qp_experiments():
    problem = ProblemFile(gaussian_problem())
    gaussian = exp.make_experiment(problem, method='gaussian-qp').run()
    assert gaussian.outcome == exp.SUCCESS
    assert np.sum(gaussian.delta) <= problem.spec.Delta + 1e-6
    assert gaussian.timings['qp_solves'] == 1
    baseline = exp.make_experiment(problem, method='moment-baseline').run()
    assert baseline.outcome == exp.SUCCESS
    assert baseline.delta == pytest.approx(np.full(3, 0.1 / 3))
    # Cantelli tightening costs more than the exact Gaussian quantiles
    assert baseline.objective >= gaussian.objective - 1e-6
    with pytest.raises(ValueError):
        exp.make_experiment(problem, method='simplex')


def test_mean_trajectory_frame():
    spec = small_problem()
    frame = exp.mean_trajectory_frame(spec, np.zeros(3))
    assert len(frame) == 3
    for column in ('step', 'total', 'mean_x0', 'desired_x1', 'u0'):
        assert column in frame
    mu, _ = spec.moments(np.zeros(3))
    assert frame['mean_x0'].tolist() == pytest.approx(mu[0::2].tolist())


def test_write_json(tmp_path):
    target = str(tmp_path / 'data.json')
    exp.write_json(target, {'a': np.array([1.0, 2.0]), 'b': np.int64(3)})
    with open(target) as stream:
        assert json.load(stream) == {'a': [1.0, 2.0], 'b': 3}


def test_dc_matches_gaussian_one_shot():
    laws = [dist.Gaussian(0.0, 0.05), dist.Gaussian(0.0, 0.02)]
    problem = ProblemFile(small_problem(laws, bound=0.1, eta=0.01))
    dc = exp.make_experiment(problem).run()
    gaussian = exp.make_experiment(problem, method='gaussian-qp').run()
    assert dc.outcome == exp.SUCCESS
    assert gaussian.outcome == exp.SUCCESS
    assert dc.objective == pytest.approx(gaussian.objective, rel=0.05)


def test_point_mass_initial_state_gives_same_controller():
    fixed = exp.make_experiment(ProblemFile(small_problem())).run()
    x0 = dist.DisturbanceVector([dist.Deterministic(-1.0),
                                 dist.Deterministic(0.0)])
    spec = small_problem(x0=x0)
    point = exp.make_experiment(ProblemFile(spec)).run()
    assert point.outcome == fixed.outcome == exp.SUCCESS
    assert point.U == pytest.approx(fixed.U, abs=1e-6)
    assert point.objective == pytest.approx(fixed.objective, abs=1e-6)
    assert point.details['verified']
    report = estimate_satisfaction(spec, point.U, 20000, seed=3)
    assert report.satisfaction_ci95[0] >= 1.0 - spec.Delta - 0.005
