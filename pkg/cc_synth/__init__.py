# -*- coding: utf-8 -*-

from .__version__ import __version__  # noqa: F401
from .config import parse_problem, load_problem_file  # noqa: F401
from .problems import (ProblemSpec, build_dc,  # noqa: F401
                       build_gaussian_qp, build_moment_baseline_qp)
from .ccp import CcpConfig, solve_ccp  # noqa: F401
from .validation import estimate_satisfaction  # noqa: F401
from .experiments import (DcExperiment, GaussianQpExperiment,  # noqa: F401
                          MomentBaselineExperiment, make_experiment)
from . import distributions, dynamics, qp  # noqa: F401

__author__ = "cc_synth developers"
