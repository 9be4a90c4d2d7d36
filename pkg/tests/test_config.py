import json

import pytest
import numpy as np

from cc_synth import config as cfg
from cc_synth import distributions as dist
from cc_synth.benchmarks import load_fixture, FIXTURES
from cc_synth.errors import SchemaError


TINY = """
name: tiny
system:
  A: [[1.0]]
  B: [[1.0]]
horizon: 3
initial_state: [0.0]
disturbance:
  per_step:
    - {type: gaussian, mean: 0, stddev: 0.1}
cost: {Q: 1, R: 0.1}
reference: {vector: [1.0]}
inputs: {lo: [-2], hi: [2]}
constraints:
  - {name: cap, coefficients: [1.0], bound: 1.5}
Delta: 0.2
"""


def test_parse_minimal_document():
    spec = cfg.parse_problem(TINY)
    assert spec.name == 'tiny'
    assert (spec.n, spec.m, spec.horizon) == (1, 1, 3)
    assert spec.n_rows == 3
    assert spec.row_names == ['cap[1]', 'cap[2]', 'cap[3]']
    assert spec.X_d == pytest.approx(np.ones(3))
    assert spec.epsilon == 1e-3
    assert spec.eta == 0.1
    problem = cfg.build_problem_file(cfg.read_document(TINY))
    assert problem.method == 'dc'
    assert problem.backend == 'admm'


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_parse(name):
    problem = load_fixture(name).problem_file()
    assert problem.spec.n_rows > 0
    assert problem.method == 'dc'


def test_double_integrator_fixture():
    spec = load_fixture('di').problem_file().spec
    assert spec.horizon == 10
    assert spec.n_rows == 20
    assert spec.disturbance[0] == dist.Exponential(0.2)
    assert spec.disturbance[1] == dist.Exponential(0.1)
    # Corridor bound at step k reads -0.222 k + 5.222
    assert spec.q[0] == pytest.approx(5.0)
    assert spec.q[9] == pytest.approx(3.002)
    assert spec.P[10, 0] == -1.0
    assert spec.X_d[0] == pytest.approx(2.0)
    assert spec.X_d[18] == pytest.approx(1.001)


def test_quadrotor_fixture():
    spec = load_fixture('quad').problem_file().spec
    assert (spec.n, spec.m) == (12, 4)
    assert spec.horizon == 10
    # Wind switches strength at half the horizon
    p = spec.stacked.p
    assert spec.disturbance[0] != spec.disturbance[5 * p]
    assert spec.disturbance[0] == spec.disturbance[4 * p]
    assert spec.X_d[0:3] == pytest.approx([20.0, 50.0, 25.0])
    assert spec.X_d[-12:-9] == pytest.approx([50.0, 20.0, 25.0])


def test_unknown_keys_are_rejected():
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY + "foo: 1\n")
    assert err.value.path == 'foo'
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY.replace("cost: {Q: 1, R: 0.1}",
                                       "cost: {Q: 1, R: 0.1, S: 2}"))
    assert err.value.path == 'cost.S'
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY.replace("mean: 0", "mean: 0, skew: 1"))
    assert err.value.path == 'disturbance.per_step[0].skew'


def test_schema_errors():
    with pytest.raises(SchemaError):
        cfg.parse_problem("- just\n- a list\n")
    with pytest.raises(SchemaError):
        cfg.parse_problem("name: [unclosed\n")
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY.replace("horizon: 3", "horizon: 0"))
    assert err.value.path == 'horizon'
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY.replace("inputs: {lo: [-2], hi: [2]}",
                                       "inputs: {lo: [-2, 1], hi: [2]}"))
    assert err.value.path == 'inputs.lo'
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY + "solver: {method: simplex}\n")
    assert err.value.path == 'solver.method'
    with pytest.raises(SchemaError) as err:
        cfg.parse_problem(TINY + "solver: {ccp: {gamma: 0.5}}\n")
    assert err.value.path == 'solver.ccp'
    with pytest.raises(ValueError):
        cfg.parse_problem(TINY.replace("Delta: 0.2", "Delta: 1.5"))


def test_overrides():
    spec = cfg.parse_problem(TINY, {'Delta': 0.05, 'horizon': 5})
    assert spec.Delta == 0.05
    assert spec.horizon == 5
    problem = cfg.build_problem_file(
        cfg.read_document(TINY), {'solver': {'ccp': {'tau_max': 50.0}}})
    assert problem.ccp.tau_max == 50.0


def test_disturbance_steps_and_switch():
    text = TINY.replace(
        "  per_step:\n    - {type: gaussian, mean: 0, stddev: 0.1}\n",
        "  steps:\n    - [{type: uniform, lo: -1, hi: 1}]\n"
        "    - [{type: deterministic, value: 0.5}]\n"
        "    - [{type: exponential, scale: 0.1}]\n")
    spec = cfg.parse_problem(text)
    assert spec.disturbance[1] == dist.Deterministic(0.5)
    text = TINY.replace(
        "  per_step:\n    - {type: gaussian, mean: 0, stddev: 0.1}\n",
        "  switch:\n    at: 1\n"
        "    before: [{type: gaussian, mean: 0, stddev: 0.1}]\n"
        "    after: [{type: gaussian, mean: 0, stddev: 0.3}]\n")
    spec = cfg.parse_problem(text)
    assert [law.sigma for law in spec.disturbance] == [0.1, 0.3, 0.3]
    with pytest.raises(SchemaError):
        cfg.parse_problem(text.replace("at: 1", "at: -1"))


def test_random_initial_state_and_open_inputs():
    text = TINY.replace(
        "initial_state: [0.0]",
        "initial_state: {random: [{type: uniform, lo: -0.1, hi: 0.1}]}")
    text = text.replace("inputs: {lo: [-2], hi: [2]}",
                        "inputs: {lo: [null], hi: [2]}")
    spec = cfg.parse_problem(text)
    assert spec.random_initial_state
    assert np.all(np.isinf(spec.input_lo))


def test_emit_and_reparse():
    problem = cfg.build_problem_file(load_fixture('di').problem)
    text = cfg.emit_problem(problem)
    doc = json.loads(text)
    assert 'builder' not in doc['system']
    again = cfg.build_problem_file(cfg.read_document(text))
    assert cfg.emit_problem(again) == text
    a, b = problem.spec, again.spec
    assert a.P == pytest.approx(b.P)
    assert a.q == pytest.approx(b.q)
    assert a.row_names == b.row_names
    assert a.disturbance == b.disturbance
    assert a.stacked.H == pytest.approx(b.stacked.H)


def test_load_problem_file(tmp_path):
    path = tmp_path / 'tiny.yaml'
    path.write_text(TINY)
    problem = cfg.load_problem_file(str(path), {'eta': 0.05})
    assert problem.spec.eta == 0.05
    assert problem.raw['eta'] == 0.05
