"""
Monte Carlo validation of open-loop controllers.

Samples are drawn in shards of fixed size. Every shard has its own seed
spawned from the user seed, so results do not depend on the number of
workers that process the shards.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging

import numpy as np
import pandas as pd

from .distributions import DisturbanceVector
from .errors import DimensionMismatch
from .utils import worker_count

logger = logging.getLogger(__name__)

SHARD_SIZE = 10000
Z_95 = 1.959963984540054


@dataclass
class McReport:
    """
    Monte Carlo estimate of constraint satisfaction and cost

    Attributes:
        n_samples: Number of sampled trajectories.
        satisfaction: Fraction of trajectories satisfying every row.
        satisfaction_ci95: Tuple (lo, hi) of the 95% confidence interval.
        empirical_cost: Mean sampled cost.
        cost_stderr: Standard error of empirical_cost.
        seed: Seed the samples were drawn with.
        row_violations: Violation frequency per polytope row.
        trajectories: Optional pandas.DataFrame of dumped trajectories.
    """
    n_samples: int
    satisfaction: float
    satisfaction_ci95: tuple
    empirical_cost: float
    cost_stderr: float
    seed: int
    row_violations: np.ndarray = None
    trajectories: pd.DataFrame = None

    def to_dict(self):
        out = {
            'n_samples': self.n_samples,
            'satisfaction': self.satisfaction,
            'satisfaction_ci95': list(self.satisfaction_ci95),
            'empirical_cost': self.empirical_cost,
            'cost_stderr': self.cost_stderr,
            'seed': self.seed
        }
        if self.row_violations is not None:
            out['row_violations'] = self.row_violations.tolist()
        return out


def proportion_ci(successes, n, z=Z_95):
    """
    Normal approximation interval of a binomial proportion with continuity
    correction, clipped to [0, 1].
    """
    if n < 1:
        raise ValueError("Need at least one sample.")
    p = successes / n
    half = z * np.sqrt(p * (1.0 - p) / n) + 0.5 / n
    return float(max(0.0, p - half)), float(min(1.0, p + half))


def _shard_sizes(n, shard_size):
    sizes = [shard_size] * (n // shard_size)
    if n % shard_size:
        sizes.append(n % shard_size)
    return sizes


def _sample_shard(ss, x0, U, disturbance, size, seed_seq):
    rng = np.random.default_rng(seed_seq)
    W = disturbance.sample(rng, size)
    X = (ss.H @ U)[None, :] + W @ ss.G.T
    if isinstance(x0, DisturbanceVector):
        X = X + x0.sample(rng, size) @ ss.Abar.T
    else:
        X = X + (ss.Abar @ x0)[None, :]
    return X


def _check(ss, x0, U, disturbance):
    U = np.asarray(U, dtype=float).ravel()
    if len(U) != ss.m * ss.horizon:
        raise DimensionMismatch("Input of length {}, expected {}.".format(
            len(U), ss.m * ss.horizon))
    if len(disturbance) != ss.p * ss.horizon:
        raise DimensionMismatch(
            "Disturbance has {} components, expected {}.".format(
                len(disturbance), ss.p * ss.horizon))
    if isinstance(x0, DisturbanceVector):
        if len(x0) != ss.n:
            raise DimensionMismatch("Initial state law has {} components, "
                                    "expected {}.".format(len(x0), ss.n))
    else:
        x0 = np.asarray(x0, dtype=float).ravel()
        if len(x0) != ss.n:
            raise DimensionMismatch("Initial state of length {}, expected "
                                    "{}.".format(len(x0), ss.n))
    return x0, U


def simulate_batch(ss, x0, U, disturbance, n, seed, shard_size=SHARD_SIZE):
    """
    Sample stacked state trajectories X = A_bar x0 + H U + G W.

    Args:
        ss: StackedSystem.
        x0: Fixed initial state or DisturbanceVector.
        U: Stacked input.
        disturbance: DisturbanceVector of W.
        n: Number of samples, at least one.
        seed: Integer seed.
        shard_size: Samples per independently seeded shard.

    Returns:
        numpy.ndarray of shape (n, nN).
    """
    if n < 1:
        raise ValueError("n should be at least 1.")
    x0, U = _check(ss, x0, U, disturbance)
    sizes = _shard_sizes(n, shard_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    return np.vstack([_sample_shard(ss, x0, U, disturbance, size, s)
                      for size, s in zip(sizes, seeds)])


def estimate_satisfaction(spec, U, n=100000, seed=0, shard_size=SHARD_SIZE,
                          dump_limit=0):
    """
    Empirical joint constraint satisfaction and cost of an input sequence.

    Args:
        spec: ProblemSpec.
        U: Stacked input.
        n: Number of samples.
        seed: Integer seed.
        shard_size: Samples per independently seeded shard.
        dump_limit: Number of trajectories to keep in the report.

    Returns:
        McReport.
    """
    if n < 1:
        raise ValueError("n should be at least 1.")
    ss = spec.stacked
    x0, U = _check(ss, spec.initial_state, U, spec.disturbance)
    input_cost = float(U @ (spec.R * U))
    sizes = _shard_sizes(n, shard_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(job):
        size, seed_seq = job
        X = _sample_shard(ss, x0, U, spec.disturbance, size, seed_seq)
        violated = X @ spec.P.T > spec.q[None, :]
        err = X - spec.X_d[None, :]
        cost = np.sum(err**2 * spec.Q[None, :], axis=1) + input_cost
        return (int(np.sum(~violated.any(axis=1))),
                violated.sum(axis=0), float(cost.sum()),
                float((cost**2).sum()), X[:dump_limit])

    jobs = list(zip(sizes, seeds))
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    ok = sum(r[0] for r in results)
    row_counts = np.sum([r[1] for r in results], axis=0)
    cost_sum = sum(r[2] for r in results)
    cost_sq = sum(r[3] for r in results)
    mean_cost = cost_sum / n
    var_cost = max(0.0, cost_sq / n - mean_cost**2) * n / max(1, n - 1)

    trajectories = None
    if dump_limit > 0:
        X = np.vstack([r[4] for r in results])[:dump_limit]
        trajectories = trajectory_frame(X, spec.n)

    satisfaction = ok / n
    report = McReport(
        n_samples=int(n), satisfaction=satisfaction,
        satisfaction_ci95=proportion_ci(ok, n),
        empirical_cost=float(mean_cost),
        cost_stderr=float(np.sqrt(var_cost / n)), seed=int(seed),
        row_violations=row_counts / n, trajectories=trajectories)
    logger.info("Monte Carlo with %d samples: satisfaction %.4f "
                "[%.4f, %.4f], cost %.6g", n, satisfaction,
                report.satisfaction_ci95[0], report.satisfaction_ci95[1],
                mean_cost)
    return report


def trajectory_frame(X, n):
    """
    Long-format DataFrame (sample, step, x0..x{n-1}) of stacked samples
    """
    X = np.asarray(X)
    samples, width = X.shape
    steps = width // n
    states = X.reshape(samples * steps, n)
    frame = pd.DataFrame(states, columns=['x{}'.format(i)
                                          for i in range(n)])
    frame.insert(0, 'step', np.tile(np.arange(1, steps + 1), samples))
    frame.insert(0, 'sample', np.repeat(np.arange(samples), steps))
    return frame
