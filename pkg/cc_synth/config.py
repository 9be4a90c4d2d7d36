"""
Problem files.

A problem file is a YAML (or JSON) document describing a chance-constrained
control problem. Systems are given by a named builder or explicit matrices,
disturbances per coordinate and step, constraint rows with an optional time
index, and solver settings. Every level of the document is checked against
the schema below and unknown keys are rejected with a SchemaError naming
their path.

    name: double_integrator
    system: {builder: double_integrator, params: {Ts: 0.25}}
    horizon: 10
    initial_state: [-1, 0]
    disturbance: {per_step: [{type: exponential, rate: 5}, ...]}
    cost: {Q: [10, 1], R: [0.001]}
    reference: {affine: {slope: [-0.111, 0], intercept: [2.111, 0]}}
    inputs: {lo: [-20], hi: [20]}
    constraints:
      - {name: upper, coefficients: [1, 0],
         bound: {slope: -0.222, intercept: 5.222}}
    Delta: 0.1
    solver: {method: dc, ccp: {tau_max: 10000}}
"""
from dataclasses import dataclass, field, asdict, fields
import copy
import json
import logging

import numpy as np
import yaml

from . import dynamics
from .ccp import CcpConfig
from .distributions import DisturbanceVector, from_literal
from .errors import SchemaError
from .inversion import QuadratureConfig
from .problems import ProblemSpec
from .qp.admm import AdmmSettings

logger = logging.getLogger(__name__)

METHODS = ('dc', 'gaussian-qp', 'moment-baseline')
BACKENDS = ('admm', 'osqp')
BUILDERS = ('double_integrator', 'quadrotor_hover')

_TOP_KEYS = {'name', 'system', 'horizon', 'initial_state', 'disturbance',
             'cost', 'reference', 'inputs', 'constraints', 'Delta',
             'epsilon', 'eta', 'solver'}
_REQUIRED = ('system', 'horizon', 'initial_state', 'disturbance', 'cost',
             'inputs', 'constraints', 'Delta')


@dataclass
class ProblemFile:
    """
    Parsed problem file

    Attributes:
        spec: ProblemSpec.
        method: One of METHODS.
        backend: Name of the QP backend.
        ccp: CcpConfig.
        qp: Dictionary of QP backend settings.
        delta_lb: Smallest risk budget of the Gaussian one-shot QP.
        raw: The validated document the spec was built from.
    """
    spec: ProblemSpec
    method: str = 'dc'
    backend: str = 'admm'
    ccp: CcpConfig = field(default_factory=CcpConfig)
    qp: dict = field(default_factory=dict)
    delta_lb: float = 1e-6
    raw: dict = field(default_factory=dict)


def _check_keys(mapping, allowed, path, required=()):
    if not isinstance(mapping, dict):
        raise SchemaError(path, "expected a mapping")
    for key in mapping:
        if key not in allowed:
            raise SchemaError(_join(path, key),
                              "unknown key '{}'".format(key))
    for key in required:
        if key not in mapping:
            raise SchemaError(_join(path, key), "missing required key")


def _join(path, key):
    return "{}.{}".format(path, key) if path else str(key)


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, "expected a number")
    return float(value)


def _integer(value, path, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) \
            or value < minimum:
        raise SchemaError(path, "expected an integer >= {}".format(minimum))
    return value


def _array(value, path, ndim=1):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(path, "expected a numeric array")
    if arr.ndim != ndim:
        raise SchemaError(path, "expected a {}-dimensional array".format(
            ndim))
    return arr


def _per_step(value, width, horizon, path, missing=None):
    """
    Accepts a scalar, a per-step vector (width) or a stacked vector
    (width * horizon) and returns the stacked vector. Null entries are
    replaced by missing.
    """
    if missing is not None and isinstance(value, list):
        value = [missing if v is None else v for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(width * horizon, float(value))
    arr = _array(value, path)
    if len(arr) == width:
        return np.tile(arr, horizon)
    if len(arr) == width * horizon:
        return arr
    raise SchemaError(path, "expected length {} or {}, got {}".format(
        width, width * horizon, len(arr)))


def _settings(cls, values, path):
    allowed = {f.name for f in fields(cls)}
    _check_keys(values, allowed, path)
    try:
        return cls(**values)
    except (TypeError, ValueError) as err:
        raise SchemaError(path, str(err))


def _system(doc, horizon):
    path = 'system'
    if 'builder' in doc:
        _check_keys(doc, {'builder', 'params'}, path)
        builder = doc['builder']
        params = dict(doc.get('params') or {})
        if builder == 'double_integrator':
            _check_keys(params, {'Ts'}, 'system.params')
            Ts = _number(params.get('Ts', 0.25), 'system.params.Ts')
            return dynamics.double_integrator(Ts, horizon)
        if builder == 'quadrotor_hover':
            _check_keys(params, {'mass', 'Ixx', 'Iyy', 'Izz', 'g', 'Ts',
                                 'injection'}, 'system.params')
            Ts = _number(params.pop('Ts', 0.25), 'system.params.Ts')
            injection = params.pop('injection', 'full')
            if injection not in ('full', 'positions'):
                raise SchemaError('system.params.injection',
                                  "expected 'full' or 'positions'")
            for key in params:
                _number(params[key], 'system.params.' + key)
            try:
                quad = dynamics.QuadrotorParams(**params)
            except ValueError as err:
                raise SchemaError('system.params', str(err))
            E = dynamics.translational_injection() \
                if injection == 'positions' else None
            system, _ = dynamics.quadrotor_hover(quad, Ts, horizon, E)
            return system
        raise SchemaError('system.builder', "unknown builder '{}'".format(
            builder))
    _check_keys(doc, {'A', 'B', 'E'}, path, required=('A', 'B'))
    matrices = {}
    for key in ('A', 'B', 'E'):
        if key not in doc:
            continue
        try:
            arr = np.asarray(doc[key], dtype=float)
        except (TypeError, ValueError):
            raise SchemaError(_join(path, key), "expected a numeric array")
        if arr.ndim == 2:
            matrices[key] = arr
        elif arr.ndim == 3 and arr.shape[0] == horizon:
            matrices[key] = list(arr)
        else:
            raise SchemaError(_join(path, key), "expected a matrix or a "
                              "list of {} matrices".format(horizon))
    try:
        return dynamics.LtvSystem(matrices['A'], matrices['B'],
                                  matrices.get('E'), horizon=horizon)
    except ValueError as err:
        raise SchemaError(path, str(err))


def _literals(items, path):
    if not isinstance(items, list) or not items:
        raise SchemaError(path, "expected a nonempty list of laws")
    return [from_literal(item, "{}[{}]".format(path, i))
            for i, item in enumerate(items)]


def _disturbance(doc, p, horizon):
    path = 'disturbance'
    _check_keys(doc, {'per_step', 'steps', 'switch'}, path)
    if len(doc) != 1:
        raise SchemaError(path, "expected exactly one of per_step, steps "
                          "and switch")
    if 'per_step' in doc:
        steps = [_literals(doc['per_step'], 'disturbance.per_step')] * \
            horizon
    elif 'steps' in doc:
        if not isinstance(doc['steps'], list) or \
                len(doc['steps']) != horizon:
            raise SchemaError('disturbance.steps',
                              "expected {} steps".format(horizon))
        steps = [_literals(step, 'disturbance.steps[{}]'.format(k))
                 for k, step in enumerate(doc['steps'])]
    else:
        switch = doc['switch']
        _check_keys(switch, {'at', 'before', 'after'}, 'disturbance.switch',
                    required=('at', 'before', 'after'))
        at = switch['at']
        if at == 'half':
            at = horizon // 2
        at = _integer(at, 'disturbance.switch.at', minimum=0)
        before = _literals(switch['before'], 'disturbance.switch.before')
        after = _literals(switch['after'], 'disturbance.switch.after')
        steps = [before if k < at else after for k in range(horizon)]
    for k, step in enumerate(steps):
        if len(step) != p:
            raise SchemaError(path, "step {} has {} laws, expected {}"
                              .format(k, len(step), p))
    return DisturbanceVector.from_steps(steps)


def _reference(doc, n, horizon):
    path = 'reference'
    if doc is None:
        return np.zeros(n * horizon)
    _check_keys(doc, {'vector', 'affine', 'waypoints'}, path)
    if len(doc) != 1:
        raise SchemaError(path, "expected exactly one of vector, affine "
                          "and waypoints")
    if 'vector' in doc:
        return _per_step(doc['vector'], n, horizon, 'reference.vector')
    steps = np.arange(1, horizon + 1)
    if 'affine' in doc:
        affine = doc['affine']
        _check_keys(affine, {'slope', 'intercept'}, 'reference.affine',
                    required=('slope', 'intercept'))
        slope = _array(affine['slope'], 'reference.affine.slope')
        intercept = _array(affine['intercept'],
                           'reference.affine.intercept')
        if len(slope) != n or len(intercept) != n:
            raise SchemaError('reference.affine',
                              "slope and intercept need length {}".format(n))
        return (steps[:, None] * slope + intercept).ravel()
    way = doc['waypoints']
    _check_keys(way, {'points', 'coordinates'}, 'reference.waypoints',
                required=('points', 'coordinates'))
    points = _array(way['points'], 'reference.waypoints.points', ndim=2)
    coords = [int(c) for c in way['coordinates']]
    if points.shape[1] != len(coords) or len(points) < 2:
        raise SchemaError('reference.waypoints', "expected at least two "
                          "points with one entry per coordinate")
    if any(c < 0 or c >= n for c in coords):
        raise SchemaError('reference.waypoints.coordinates',
                          "coordinates should lie in [0, {})".format(n))
    # Waypoints spread uniformly in time over steps 1..N
    knots = np.linspace(1, horizon, len(points))
    ref = np.zeros((horizon, n))
    for j, c in enumerate(coords):
        ref[:, c] = np.interp(steps, knots, points[:, j])
    return ref.ravel()


def _constraints(items, n, horizon):
    path = 'constraints'
    if not isinstance(items, list) or not items:
        raise SchemaError(path, "expected a nonempty list of rows")
    rows, bounds, names = [], [], []
    for i, item in enumerate(items):
        ipath = "{}[{}]".format(path, i)
        _check_keys(item, {'name', 'coefficients', 'row', 'bound', 'steps'},
                    ipath, required=('bound',))
        name = str(item.get('name', 'c{}'.format(i)))
        if ('row' in item) == ('coefficients' in item):
            raise SchemaError(ipath, "expected exactly one of row and "
                              "coefficients")
        if 'row' in item:
            if 'steps' in item:
                raise SchemaError(ipath + '.steps',
                                  "not allowed together with row")
            row = _array(item['row'], ipath + '.row')
            if len(row) != n * horizon:
                raise SchemaError(ipath + '.row',
                                  "expected length {}".format(n * horizon))
            rows.append(row)
            bounds.append(_number(item['bound'], ipath + '.bound'))
            names.append(name)
            continue
        coeffs = _array(item['coefficients'], ipath + '.coefficients')
        if len(coeffs) != n:
            raise SchemaError(ipath + '.coefficients',
                              "expected length {}".format(n))
        bound = item['bound']
        if isinstance(bound, dict):
            _check_keys(bound, {'slope', 'intercept'}, ipath + '.bound',
                        required=('intercept',))
            slope = _number(bound.get('slope', 0.0), ipath + '.bound.slope')
            intercept = _number(bound['intercept'],
                                ipath + '.bound.intercept')
        else:
            slope, intercept = 0.0, _number(bound, ipath + '.bound')
        steps = item.get('steps', list(range(1, horizon + 1)))
        if not isinstance(steps, list) or not steps:
            raise SchemaError(ipath + '.steps', "expected a list of steps")
        for k in steps:
            k = _integer(k, ipath + '.steps')
            if k > horizon:
                raise SchemaError(ipath + '.steps',
                                  "step {} beyond horizon {}".format(
                                      k, horizon))
            row = np.zeros(n * horizon)
            row[(k - 1) * n:k * n] = coeffs
            rows.append(row)
            bounds.append(slope * k + intercept)
            names.append("{}[{}]".format(name, k))
    return np.array(rows), np.array(bounds), names


def _solver(doc):
    path = 'solver'
    _check_keys(doc, {'method', 'backend', 'quadrature', 'qp', 'ccp',
                      'delta_lb'}, path)
    method = doc.get('method', 'dc')
    if method not in METHODS:
        raise SchemaError('solver.method', "expected one of {}".format(
            METHODS))
    backend = doc.get('backend', 'admm')
    if backend not in BACKENDS:
        raise SchemaError('solver.backend', "expected one of {}".format(
            BACKENDS))
    quadrature = _settings(QuadratureConfig, doc.get('quadrature') or {},
                           'solver.quadrature')
    qp = dict(doc.get('qp') or {})
    if backend == 'admm':
        _settings(AdmmSettings, qp, 'solver.qp')
    ccp = _settings(CcpConfig, doc.get('ccp') or {}, 'solver.ccp')
    delta_lb = _number(doc.get('delta_lb', 1e-6), 'solver.delta_lb')
    return method, backend, quadrature, qp, ccp, delta_lb


def _merge(base, overrides):
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def read_document(text):
    """
    Load a YAML or JSON document.

    JSON is tried first: PyYAML reads exponent notation without a decimal
    point (as written by json.dumps, e.g. 1e-09) as a string.
    """
    try:
        doc = json.loads(text)
    except ValueError:
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise SchemaError('<document>',
                              "invalid YAML/JSON: {}".format(err))
    if not isinstance(doc, dict):
        raise SchemaError('<document>', "expected a mapping at top level")
    return doc


def build_problem_file(doc, overrides=None):
    """
    Validate a problem document and build the ProblemFile.

    Args:
        doc: Dictionary as loaded from YAML or JSON.
        overrides: Optional dictionary deep-merged into doc first.

    Returns:
        ProblemFile.

    Raises:
        SchemaError: The document does not follow the schema.
        ValueError: The problem violates an invariant (e.g. Delta >= 1).
    """
    doc = copy.deepcopy(doc)
    if overrides:
        _merge(doc, copy.deepcopy(overrides))
    _check_keys(doc, _TOP_KEYS, '', required=_REQUIRED)
    horizon = _integer(doc['horizon'], 'horizon')
    system = _system(doc['system'], horizon)
    n, m, p = system.n, system.m, system.p

    init = doc['initial_state']
    if isinstance(init, dict):
        _check_keys(init, {'random'}, 'initial_state', required=('random',))
        initial_state = DisturbanceVector(
            _literals(init['random'], 'initial_state.random'))
    else:
        initial_state = _array(init, 'initial_state')

    disturbance = _disturbance(doc['disturbance'], p, horizon)
    _check_keys(doc['cost'], {'Q', 'R'}, 'cost', required=('Q', 'R'))
    Q = _per_step(doc['cost']['Q'], n, horizon, 'cost.Q')
    R = _per_step(doc['cost']['R'], m, horizon, 'cost.R')
    X_d = _reference(doc.get('reference'), n, horizon)
    _check_keys(doc['inputs'], {'lo', 'hi'}, 'inputs', required=('lo', 'hi'))
    input_lo = _per_step(doc['inputs']['lo'], m, horizon, 'inputs.lo',
                         missing=-np.inf)
    input_hi = _per_step(doc['inputs']['hi'], m, horizon, 'inputs.hi',
                         missing=np.inf)
    P, q, names = _constraints(doc['constraints'], n, horizon)
    method, backend, quadrature, qp, ccp, delta_lb = _solver(
        doc.get('solver') or {})

    spec = ProblemSpec(
        system=system, disturbance=disturbance, initial_state=initial_state,
        Q=Q, R=R, X_d=X_d, input_lo=input_lo, input_hi=input_hi, P=P, q=q,
        Delta=_number(doc['Delta'], 'Delta'),
        epsilon=_number(doc.get('epsilon', 1e-3), 'epsilon'),
        eta=_number(doc.get('eta', 0.1), 'eta'), row_names=names,
        name=str(doc.get('name', 'problem')), quadrature=quadrature)
    logger.debug("Parsed problem '%s' with %d rows", spec.name, spec.n_rows)
    return ProblemFile(spec, method, backend, ccp, qp, delta_lb, doc)


def parse_problem(text, overrides=None):
    """
    Parse problem file text into a ProblemSpec.

    Args:
        text: YAML or JSON text.
        overrides: Optional dictionary deep-merged into the document.

    Returns:
        ProblemSpec with defaults applied.
    """
    return build_problem_file(read_document(text), overrides).spec


def load_problem_file(path, overrides=None):
    """
    Read and parse a problem file from disk
    """
    with open(path, 'r', encoding='utf-8') as handle:
        return build_problem_file(read_document(handle.read()), overrides)


def _finite_or_none(values):
    return [float(v) if np.isfinite(v) else None for v in values]


def canonical_document(problem):
    """
    Fully expanded document of a ProblemFile: explicit matrices, per-step
    laws, stacked vectors and explicit polytope rows.
    """
    spec = problem.spec
    ss = spec.stacked
    system = spec.system
    if isinstance(system, dynamics.LtvSystem):
        sys_doc = {'A': [a.tolist() for a in system.A],
                   'B': [b.tolist() for b in system.B],
                   'E': [e.tolist() for e in system.E]}
    else:
        raise ValueError("Only problems built on a LtvSystem can be "
                         "emitted.")
    p = ss.p
    laws = spec.disturbance.to_literal()
    steps = [laws[k * p:(k + 1) * p] for k in range(ss.horizon)]
    if spec.random_initial_state:
        init = {'random': spec.initial_state.to_literal()}
    else:
        init = spec.initial_state.tolist()
    solver = {
        'method': problem.method,
        'backend': problem.backend,
        'quadrature': asdict(spec.quadrature),
        'qp': dict(problem.qp),
        'ccp': {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in asdict(problem.ccp).items()},
        'delta_lb': problem.delta_lb
    }
    if solver['ccp']['r0'] is None:
        del solver['ccp']['r0']
    return {
        'name': spec.name,
        'system': sys_doc,
        'horizon': ss.horizon,
        'initial_state': init,
        'disturbance': {'steps': steps},
        'cost': {'Q': spec.Q.tolist(), 'R': spec.R.tolist()},
        'reference': {'vector': spec.X_d.tolist()},
        'inputs': {'lo': _finite_or_none(spec.input_lo),
                   'hi': _finite_or_none(spec.input_hi)},
        'constraints': [{'name': name, 'row': row.tolist(),
                         'bound': float(bound)}
                        for name, row, bound in zip(spec.row_names, spec.P,
                                                    spec.q)],
        'Delta': spec.Delta,
        'epsilon': spec.epsilon,
        'eta': spec.eta,
        'solver': solver
    }


def emit_problem(problem):
    """
    Canonical JSON text of a ProblemFile. Parsing the text gives back the
    same problem.
    """
    return json.dumps(canonical_document(problem), sort_keys=True, indent=2)
