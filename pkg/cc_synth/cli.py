"""
Command line interface.

    cc-synth solve problem.yaml --out runs
    cc-synth validate problem.yaml runs/problem/solution.json --samples 100000
    cc-synth benchmark di --out runs
    cc-synth cdf --law "{type: exponential, scale: 0.5}" --weights 1
    cc-synth pwa-dump --law "{type: gaussian, mean: 0, stddev: 1}" --eta 0.1

Exit codes: 0 on success, 1 on usage, IO, schema and other errors, 2 when
the problem is infeasible, the penalty procedure ends with positive slack,
or the Monte Carlo confidence interval falls below the target.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np
import pandas as pd
import yaml

from .__version__ import __version__
from . import benchmarks
from .config import load_problem_file, emit_problem, METHODS, BACKENDS
from .distributions import from_literal
from .errors import CcSynthError
from .experiments import make_experiment, write_json, SUCCESS, INFEASIBLE
from .inversion import QuadratureConfig, functional_law, cdf
from .problems import log_cdf_pwa
from .results import tabulate_benchmarks
from .validation import estimate_satisfaction

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
# Allowed shortfall of the Monte Carlo lower confidence bound below 1 - Delta
VALIDATION_MARGIN = 0.01


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, "{}: error: {}\n".format(self.prog, message))


def _add_problem_overrides(parser):
    group = parser.add_argument_group('problem overrides')
    group.add_argument('--delta', type=float, help="joint risk bound Delta")
    group.add_argument('--horizon', type=int, help="horizon N")
    group.add_argument('--eta', type=float,
                       help="largest gap of the PWA underapproximations")
    group.add_argument('--epsilon', type=float,
                       help="smallest admissible Phi per row")
    group.add_argument('--backend', choices=BACKENDS, help="QP backend")
    group.add_argument('--qp-eps', type=float,
                       help="absolute and relative QP tolerance")
    group.add_argument('--qp-max-iter', type=int,
                       help="iteration budget per QP")
    group.add_argument('--ccp-tau0', type=float, help="initial penalty")
    group.add_argument('--ccp-tau-max', type=float, help="largest penalty")
    group.add_argument('--ccp-gamma', type=float, help="penalty growth")
    group.add_argument('--ccp-eps-viol', type=float,
                       help="largest slack of a feasible iterate")
    group.add_argument('--ccp-eps-dc', type=float,
                       help="objective change tolerance")
    group.add_argument('--ccp-max-iter', type=int,
                       help="iteration budget of the procedure")
    group.add_argument('--ccp-r0-mode', choices=('uniform', 'literal'),
                       help="initial linearization point")
    _add_quadrature(group)


def _add_quadrature(group):
    group.add_argument('--quad-abs-tol', type=float,
                       help="absolute tolerance of the CDF inversion")
    group.add_argument('--quad-rel-tol', type=float,
                       help="relative tolerance of the CDF inversion")
    group.add_argument('--quad-max-panels', type=int,
                       help="panel budget of the CDF inversion")


def _add_logging(parser):
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="more output (repeat for debug output)")
    parser.add_argument('-q', '--quiet', action='store_true',
                        help="only report errors")


def _set_nested(doc, keys, value):
    for key in keys[:-1]:
        doc = doc.setdefault(key, {})
    doc[keys[-1]] = value


def overrides_from_args(args):
    """
    Problem document overrides of the command line flags
    """
    flags = [
        ('delta', ('Delta',)),
        ('horizon', ('horizon',)),
        ('eta', ('eta',)),
        ('epsilon', ('epsilon',)),
        ('method', ('solver', 'method')),
        ('backend', ('solver', 'backend')),
        ('qp_eps', ('solver', 'qp', 'eps_abs')),
        ('qp_eps', ('solver', 'qp', 'eps_rel')),
        ('qp_max_iter', ('solver', 'qp', 'max_iter')),
        ('ccp_tau0', ('solver', 'ccp', 'tau0')),
        ('ccp_tau_max', ('solver', 'ccp', 'tau_max')),
        ('ccp_gamma', ('solver', 'ccp', 'gamma')),
        ('ccp_eps_dc', ('solver', 'ccp', 'eps_dc')),
        ('ccp_eps_viol', ('solver', 'ccp', 'eps_viol')),
        ('ccp_max_iter', ('solver', 'ccp', 'max_iter')),
        ('ccp_r0_mode', ('solver', 'ccp', 'r0_mode')),
        ('quad_abs_tol', ('solver', 'quadrature', 'abs_tol')),
        ('quad_rel_tol', ('solver', 'quadrature', 'rel_tol')),
        ('quad_max_panels', ('solver', 'quadrature', 'max_panels')),
    ]
    overrides = {}
    for attr, keys in flags:
        value = getattr(args, attr, None)
        if value is not None:
            _set_nested(overrides, keys, value)
    return overrides


def _exit_code(result):
    if result.outcome == SUCCESS:
        return EXIT_OK
    if result.outcome == INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def cmd_solve(args):
    problem = load_problem_file(args.problem, overrides_from_args(args))
    if args.emit:
        print(emit_problem(problem))
        return EXIT_OK
    experiment = make_experiment(problem, args.out)
    result = experiment.run(dump_program=args.dump_program)
    print("{}: {} ({})".format(problem.spec.name, result.status,
                               result.method))
    if result.U is not None:
        print("objective {:.6g}, risk {:.6g} <= {}".format(
            result.objective, float(np.sum(result.delta)),
            problem.spec.Delta))
    if args.trace and result.trace is not None:
        print(result.trace.to_string(index=False))
    print("written to {}".format(experiment.logger.path))
    return _exit_code(result)


def _read_solution(path):
    with open(path, 'r') as handle:
        solution = json.load(handle)
    if solution.get('U') is None:
        raise ValueError("Solution '{}' holds no controller (status "
                         "{}).".format(path, solution.get('status')))
    return np.asarray(solution['U'], dtype=float)


def validation_passed(report, Delta, margin=VALIDATION_MARGIN):
    return report.satisfaction_ci95[0] >= 1.0 - Delta - margin


def cmd_validate(args):
    problem = load_problem_file(args.problem, overrides_from_args(args))
    U = _read_solution(args.solution)
    report = estimate_satisfaction(problem.spec, U, args.samples, args.seed,
                                   dump_limit=args.dump_limit)
    out = args.out or os.path.dirname(os.path.abspath(args.solution))
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, 'validation.json'), report.to_dict())
    if report.trajectories is not None:
        report.trajectories.to_csv(os.path.join(out, 'trajectories.csv'),
                                   index=False)
    lo, hi = report.satisfaction_ci95
    print("satisfaction {:.4f} [{:.4f}, {:.4f}] over {} samples, cost "
          "{:.6g} +- {:.2g}".format(report.satisfaction, lo, hi,
                                    report.n_samples, report.empirical_cost,
                                    report.cost_stderr))
    if validation_passed(report, problem.spec.Delta):
        return EXIT_OK
    print("lower bound {:.4f} below 1 - Delta - {}".format(
        lo, VALIDATION_MARGIN), file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_benchmark(args):
    os.makedirs(args.out, exist_ok=True)
    if args.horizon_sweep:
        if args.which != 'di':
            raise ValueError("The horizon sweep is only defined for 'di'.")
        fixture = benchmarks.fixture_di_sweep()
        horizons = args.horizons or fixture.expected.get(
            'horizons', benchmarks.SWEEP_HORIZONS)
        frame = benchmarks.horizon_sweep(fixture, horizons, args.out)
        target = os.path.join(args.out, 'sweep.csv')
        frame.to_csv(target, index=False)
        print(frame.to_string(index=False))
        print("written to {}".format(target))
        converged = frame['status'].isin(['Converged', 'Optimal'])
        return EXIT_OK if converged.all() else EXIT_INFEASIBLE

    fixture = benchmarks.load_fixture(args.which)
    run = benchmarks.run_benchmark(
        fixture, args.out, samples=args.samples, seed=args.seed,
        overrides=overrides_from_args(args), method=args.method,
        dump_limit=args.dump_limit)
    label = "Chance - Open ({})".format(run.result.method)
    table = tabulate_benchmarks(
        {label: run.row}, os.path.join(args.out, 'table.csv'))
    print(table, end='')
    for failure in run.failures:
        print("expectation not met: {}".format(failure), file=sys.stderr)
    if run.result.outcome != SUCCESS:
        return _exit_code(run.result)
    return EXIT_OK if run.passed else EXIT_INFEASIBLE


def _law_from_args(args):
    laws = []
    for i, text in enumerate(args.law):
        literal = yaml.safe_load(text)
        laws.append(from_literal(literal, 'law[{}]'.format(i)))
    weights = args.weights or [1.0] * len(laws)
    return functional_law(weights, laws)


def _quadrature_from_args(args):
    values = {}
    if args.quad_abs_tol is not None:
        values['abs_tol'] = args.quad_abs_tol
    if args.quad_rel_tol is not None:
        values['rel_tol'] = args.quad_rel_tol
    if args.quad_max_panels is not None:
        values['max_panels'] = args.quad_max_panels
    return QuadratureConfig(**values)


def _write_frame(frame, out):
    if out is None:
        print(frame.to_csv(index=False), end='')
    else:
        frame.to_csv(out, index=False)


def cmd_cdf(args):
    law = _law_from_args(args)
    cfg = _quadrature_from_args(args)
    lo = law.mean - 6.0 * law.stddev if args.lo is None else args.lo
    hi = law.mean + 6.0 * law.stddev if args.hi is None else args.hi
    if not hi > lo:
        raise ValueError("Empty grid [{}, {}].".format(lo, hi))
    grid = np.linspace(lo, hi, args.points)
    values = [cdf(law, s, cfg) for s in grid]
    _write_frame(pd.DataFrame({'s': grid, 'cdf': values}), args.out)
    return EXIT_OK


def cmd_pwa_dump(args):
    law = _law_from_args(args)
    cfg = _quadrature_from_args(args)
    pwa, x_lo, x_hi, clipped = log_cdf_pwa(law, args.epsilon, args.eta, cfg)
    logger.info("%d pieces on [%.6g, %.6g]", len(pwa), x_lo, x_hi)
    _write_frame(pwa.to_frame(), args.out)
    return EXIT_OK


def make_parser():
    parser = _Parser(prog='cc-synth', description=(
        "Chance-constrained open-loop control of stochastic linear "
        "systems"))
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    solve = sub.add_parser('solve', help="synthesize a controller")
    solve.add_argument('problem', help="problem file (YAML or JSON)")
    solve.add_argument('--method', choices=METHODS)
    solve.add_argument('--out', default='.',
                       help="output folder (default: working directory)")
    solve.add_argument('--trace', action='store_true',
                       help="print the iteration trace")
    solve.add_argument('--dump-program', action='store_true',
                       help="write the solved program to program.json")
    solve.add_argument('--emit', action='store_true',
                       help="print the canonical problem and exit")
    _add_problem_overrides(solve)
    _add_logging(solve)
    solve.set_defaults(func=cmd_solve)

    validate = sub.add_parser('validate',
                              help="Monte Carlo validation of a solution")
    validate.add_argument('problem', help="problem file (YAML or JSON)")
    validate.add_argument('solution', help="solution.json of a solve run")
    validate.add_argument('--samples', type=int, default=100000)
    validate.add_argument('--seed', type=int, default=0)
    validate.add_argument('--dump-limit', type=int, default=0,
                          help="number of trajectories written to CSV")
    validate.add_argument('--out', help="output folder (default: folder of "
                          "the solution)")
    _add_problem_overrides(validate)
    _add_logging(validate)
    validate.set_defaults(func=cmd_validate)

    bench = sub.add_parser('benchmark', help="run a shipped benchmark")
    bench.add_argument('which', choices=('di', 'quad'))
    bench.add_argument('--method', choices=METHODS)
    bench.add_argument('--horizon-sweep', action='store_true',
                       help="solve the sweep instance over a range of "
                       "horizons")
    bench.add_argument('--horizons', type=int, nargs='+')
    bench.add_argument('--samples', type=int, default=100000)
    bench.add_argument('--seed', type=int, default=0)
    bench.add_argument('--dump-limit', type=int, default=0)
    bench.add_argument('--out', default='benchmarks')
    _add_problem_overrides(bench)
    _add_logging(bench)
    bench.set_defaults(func=cmd_benchmark)

    for name, func, text in (('cdf', cmd_cdf, "CDF of a linear functional"),
                             ('pwa-dump', cmd_pwa_dump,
                              "PWA pieces of a log-CDF")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument('--law', action='append', required=True,
                         help="distribution literal, repeat per component")
        cmd.add_argument('--weights', type=float, nargs='+')
        cmd.add_argument('--out', help="CSV file (default: stdout)")
        if name == 'cdf':
            cmd.add_argument('--lo', type=float)
            cmd.add_argument('--hi', type=float)
            cmd.add_argument('--points', type=int, default=200)
        else:
            cmd.add_argument('--eta', type=float, default=0.1)
            cmd.add_argument('--epsilon', type=float, default=1e-3)
        _add_quadrature(cmd)
        _add_logging(cmd)
        cmd.set_defaults(func=func)
    return parser


def configure_logging(verbose=0, quiet=False):
    level = logging.WARNING
    if quiet:
        level = logging.ERROR
    elif verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: "
                        "%(message)s", force=True)


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except (CcSynthError, ValueError, KeyError, OSError) as err:
        print("cc-synth: error: {}".format(err), file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
