"""
Scalar disturbance laws and vectors of independent scalar laws.

Every scalar law implements the ScalarDistribution interface: a closed form
characteristic function, exact moments, a closed form CDF and inverse CDF
(the latter drives inverse-transform sampling). Instances are immutable.
"""
from abc import ABC, abstractmethod

import numpy as np
from scipy import special

from .errors import SchemaError, DimensionMismatch


class ScalarDistribution(ABC):
    """
    Abstract base class for scalar disturbance laws

    Derived classes implement the characteristic function, the moments and
    the closed form CDF and inverse CDF of one log-concave scalar law. The
    `name` property is the tag used for the law in problem files.

    As this is an abstract class, instances of this class cannot be created or
    used.
    """
    name = None

    def __setattr__(self, key, value):
        if getattr(self, '_frozen', False):
            raise AttributeError("{} instances are immutable.".format(
                type(self).__name__))
        object.__setattr__(self, key, value)

    def _freeze(self):
        object.__setattr__(self, '_frozen', True)

    @abstractmethod
    def cf(self, beta):
        """
        Characteristic function E[exp(j beta w)]

        Args:
            beta: Real frequency or numpy.ndarray of frequencies.

        Returns:
            Complex value (or complex numpy.ndarray of the shape of beta).
        """
        raise NotImplementedError

    @abstractmethod
    def moments(self):
        """
        Returns the tuple (mean, variance) of the law
        """
        raise NotImplementedError

    @abstractmethod
    def cdf(self, x):
        """
        Closed form cumulative distribution function, vectorised over x
        """
        raise NotImplementedError

    @abstractmethod
    def pdf(self, x):
        """
        Closed form probability density, vectorised over x
        """
        raise NotImplementedError

    @abstractmethod
    def ppf(self, p):
        """
        Closed form inverse CDF, vectorised over p in [0, 1]
        """
        raise NotImplementedError

    @abstractmethod
    def support(self):
        """
        Returns the tuple (lo, hi) bounding the support (may be infinite)
        """
        raise NotImplementedError

    @abstractmethod
    def to_literal(self):
        """
        Returns the problem file literal (a dictionary) of this law
        """
        raise NotImplementedError

    def mean(self):
        return self.moments()[0]

    def variance(self):
        return self.moments()[1]

    def sample(self, rng, size=None):
        """
        Draw samples by inverse-transform sampling.

        Args:
            rng: numpy.random.Generator to draw uniform numbers from. It is
                never replaced by global randomness.
            size: Number (or shape) of draws. If None, a single float is
                returned.

        Returns:
            Float or numpy.ndarray of draws.
        """
        u = rng.random(size)
        # rng.random may return exactly 0, where unbounded ppfs diverge
        u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
        x = self.ppf(u)
        if size is None:
            return float(x)
        return x

    def __eq__(self, other):
        return (type(self) is type(other)
                and self.to_literal() == other.to_literal())

    def __hash__(self):
        return hash(tuple(sorted(self.to_literal().items())))

    def __repr__(self):
        params = ", ".join("{}={!r}".format(k, v)
                           for k, v in self.to_literal().items()
                           if k != 'type')
        return "{}({})".format(type(self).__name__, params)


class Gaussian(ScalarDistribution):
    """
    Normal law with given mean and standard deviation

    Args:
        mean: Mean of the law.
        stddev: Standard deviation, strictly positive.
    """
    name = 'gaussian'

    def __init__(self, mean=0.0, stddev=1.0):
        if not stddev > 0:
            raise ValueError(
                "Gaussian stddev should be positive, got {}.".format(stddev))
        self.mu = float(mean)
        self.sigma = float(stddev)
        self._freeze()

    def cf(self, beta):
        beta = np.asarray(beta, dtype=float)
        return np.exp(1j * self.mu * beta - 0.5 * (self.sigma * beta)**2)

    def moments(self):
        return self.mu, self.sigma**2

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) /
                            self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z**2) / (self.sigma * np.sqrt(2 * np.pi))

    def ppf(self, p):
        return self.mu + self.sigma * special.ndtri(np.asarray(p,
                                                               dtype=float))

    def support(self):
        return -np.inf, np.inf

    def to_literal(self):
        return {'type': self.name, 'mean': self.mu, 'stddev': self.sigma}


class Exponential(ScalarDistribution):
    """
    Exponential law on [0, inf) parameterised by its scale (= mean)

    Args:
        scale: Mean of the law, strictly positive. The rate of the law is
            1 / scale.
    """
    name = 'exponential'

    def __init__(self, scale=1.0):
        if not scale > 0:
            raise ValueError(
                "Exponential scale should be positive, got {}.".format(scale))
        self.scale = float(scale)
        self._freeze()

    @classmethod
    def from_rate(cls, rate):
        if not rate > 0:
            raise ValueError(
                "Exponential rate should be positive, got {}.".format(rate))
        return cls(1.0 / rate)

    def cf(self, beta):
        beta = np.asarray(beta, dtype=float)
        return 1.0 / (1.0 - 1j * self.scale * beta)

    def moments(self):
        return self.scale, self.scale**2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0) / self.scale), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0,
                        np.exp(-np.maximum(x, 0) / self.scale) / self.scale,
                        0.0)

    def ppf(self, p):
        return -self.scale * np.log1p(-np.asarray(p, dtype=float))

    def support(self):
        return 0.0, np.inf

    def to_literal(self):
        return {'type': self.name, 'scale': self.scale}


class Uniform(ScalarDistribution):
    """
    Uniform law on the interval [lo, hi]

    Args:
        lo: Lower end of the support.
        hi: Upper end of the support, strictly larger than lo.
    """
    name = 'uniform'

    def __init__(self, lo=0.0, hi=1.0):
        if not lo < hi:
            raise ValueError(
                "Uniform bounds should satisfy lo < hi, got [{}, {}].".format(
                    lo, hi))
        self.lo = float(lo)
        self.hi = float(hi)
        self._freeze()

    def cf(self, beta):
        beta = np.asarray(beta, dtype=float)
        half = 0.5 * (self.hi - self.lo)
        center = 0.5 * (self.hi + self.lo)
        # np.sinc(x) = sin(pi x) / (pi x) is regular at zero
        return np.exp(1j * center * beta) * np.sinc(beta * half / np.pi)

    def moments(self):
        return 0.5 * (self.lo + self.hi), (self.hi - self.lo)**2 / 12.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def ppf(self, p):
        return self.lo + np.asarray(p, dtype=float) * (self.hi - self.lo)

    def support(self):
        return self.lo, self.hi

    def to_literal(self):
        return {'type': self.name, 'lo': self.lo, 'hi': self.hi}


class Triangular(ScalarDistribution):
    """
    Triangular law on [lo, hi] with its peak at mode

    Args:
        lo: Lower end of the support.
        mode: Location of the peak, lo <= mode <= hi.
        hi: Upper end of the support, strictly larger than lo.
    """
    name = 'triangular'
    # Below this value of |beta (hi - lo)| the series form of the CF is used
    series_cutoff = 1e-4

    def __init__(self, lo=-1.0, mode=0.0, hi=1.0):
        if not (lo <= mode <= hi and lo < hi):
            raise ValueError(
                "Triangular parameters should satisfy lo <= mode <= hi and "
                "lo < hi, got ({}, {}, {}).".format(lo, mode, hi))
        self.lo = float(lo)
        self.mode = float(mode)
        self.hi = float(hi)
        self._freeze()

    @staticmethod
    def _divided_difference(beta, x, y):
        # First divided difference of exp(j beta .) on the nodes x, y
        half = 0.5 * (y - x)
        center = 0.5 * (y + x)
        return (1j * beta * np.exp(1j * beta * center) *
                np.sinc(beta * half / np.pi))

    def cf(self, beta):
        beta = np.asarray(beta, dtype=float)
        width = self.hi - self.lo
        small = np.abs(beta * width) < self.series_cutoff
        with np.errstate(divide='ignore', invalid='ignore'):
            # Twice the second divided difference of exp(j beta .) / (j beta)^2
            upper = self._divided_difference(beta, self.mode, self.hi)
            lower = self._divided_difference(beta, self.lo, self.mode)
            exact = -2.0 * (upper - lower) / (width * beta**2)
        # Series of the law shifted to start at zero
        m1 = (self.mode - self.lo + width) / 3.0
        m2 = self.variance() + m1**2
        series = np.exp(1j * beta * self.lo) * (1.0 + 1j * beta * m1 -
                                                 0.5 * beta**2 * m2)
        return np.where(small, series, exact)

    def moments(self):
        a, c, b = self.lo, self.mode, self.hi
        mean = (a + b + c) / 3.0
        var = (a**2 + b**2 + c**2 - a * b - a * c - b * c) / 18.0
        return mean, var

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, c, b = self.lo, self.mode, self.hi
        with np.errstate(divide='ignore', invalid='ignore'):
            rising = (x - a)**2 / ((b - a) * (c - a))
            falling = 1.0 - (b - x)**2 / ((b - a) * (b - c))
        out = np.where(x <= a, 0.0, np.where(x >= b, 1.0,
                                             np.where(x <= c, rising,
                                                      falling)))
        return np.clip(out, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, c, b = self.lo, self.mode, self.hi
        with np.errstate(divide='ignore', invalid='ignore'):
            rising = 2.0 * (x - a) / ((b - a) * (c - a))
            falling = 2.0 * (b - x) / ((b - a) * (b - c))
        inside = (x >= a) & (x <= b)
        out = np.where(x < c, rising, falling)
        return np.where(inside, np.nan_to_num(out), 0.0)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        span = self.hi - self.lo
        spanlo = self.mode - self.lo
        spanhi = self.hi - self.mode
        x = np.where(p <= spanlo / span,
                     np.sqrt(spanlo * span * p),
                     span - np.sqrt(spanhi * span * (1.0 - p)))
        return np.clip(x + self.lo, self.lo, self.hi)

    def support(self):
        return self.lo, self.hi

    def to_literal(self):
        return {'type': self.name, 'lo': self.lo, 'mode': self.mode,
                'hi': self.hi}


class Deterministic(ScalarDistribution):
    """
    Point mass at value

    Used for degenerate initial states and for coordinates that carry no
    noise. It is the zero-variance limit of the other laws.

    Args:
        value: Location of the point mass.
    """
    name = 'deterministic'

    def __init__(self, value=0.0):
        self.value = float(value)
        self._freeze()

    def cf(self, beta):
        beta = np.asarray(beta, dtype=float)
        return np.exp(1j * self.value * beta)

    def moments(self):
        return self.value, 0.0

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def pdf(self, x):
        return np.where(np.asarray(x, dtype=float) == self.value, np.inf, 0.0)

    def ppf(self, p):
        return np.full(np.shape(p), self.value)

    def support(self):
        return self.value, self.value

    def to_literal(self):
        return {'type': self.name, 'value': self.value}


_LITERAL_KEYS = {
    'gaussian': ({'mean', 'stddev'}, set()),
    'exponential': (set(), {'scale', 'rate'}),
    'uniform': ({'lo', 'hi'}, set()),
    'triangular': ({'lo', 'mode', 'hi'}, set()),
    'deterministic': ({'value'}, set()),
}


def from_literal(literal, path='distribution'):
    """
    Create a ScalarDistribution from its problem file literal.

    Args:
        literal: Dictionary with a 'type' key and the parameters of the law,
            e.g. `{'type': 'exponential', 'scale': 5.0}`. Exponential laws
            accept either 'scale' or 'rate'.
        path: Location of the literal in the problem file, used in error
            messages.

    Returns:
        ScalarDistribution instance.

    Raises:
        SchemaError: The literal has an unknown type, unknown keys or missing
            or invalid parameters.
    """
    if not isinstance(literal, dict):
        raise SchemaError(path, "expected a mapping with a 'type' key")
    kind = literal.get('type')
    if kind not in _LITERAL_KEYS:
        raise SchemaError(path + '.type',
                          "unknown distribution type '{}'".format(kind))
    required, choice = _LITERAL_KEYS[kind]
    keys = set(literal) - {'type'}
    for key in sorted(keys - required - choice):
        raise SchemaError(path + '.' + key, "unknown key '{}'".format(key))
    for key in sorted(required - keys):
        raise SchemaError(path + '.' + key, "missing parameter")
    if choice and len(keys & choice) != 1:
        raise SchemaError(
            path, "exactly one of {} is required".format(sorted(choice)))
    params = {}
    for key in keys:
        value = literal[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(path + '.' + key, "expected a number")
        params[key] = float(value)
    try:
        if kind == 'gaussian':
            return Gaussian(params['mean'], params['stddev'])
        if kind == 'exponential':
            if 'rate' in params:
                return Exponential.from_rate(params['rate'])
            return Exponential(params['scale'])
        if kind == 'uniform':
            return Uniform(params['lo'], params['hi'])
        if kind == 'triangular':
            return Triangular(params['lo'], params['mode'], params['hi'])
        return Deterministic(params['value'])
    except ValueError as err:
        raise SchemaError(path, str(err))


def cf_scalar(dist, beta):
    """
    Characteristic function of a scalar law at frequency beta
    """
    value = dist.cf(beta)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def moments(dist):
    """
    Returns the exact (mean, variance) of a scalar law
    """
    return dist.moments()


def sample(dist, rng, size=None):
    """
    Draw from a scalar law using the seeded generator rng
    """
    return dist.sample(rng, size)


def cdf_closed_form(dist, x):
    """
    Exact CDF of a scalar law
    """
    value = dist.cdf(x)
    if np.ndim(value) == 0:
        return float(value)
    return value


class DisturbanceVector:
    """
    Vector of independent scalar laws

    The stacked disturbance W of a horizon of N steps with p coordinates per
    step has p*N components, ordered step by step.

    Args:
        components: Sequence of ScalarDistribution instances.
    """
    def __init__(self, components):
        components = tuple(components)
        if len(components) == 0:
            raise ValueError("A DisturbanceVector needs at least one "
                             "component.")
        for comp in components:
            if not isinstance(comp, ScalarDistribution):
                raise TypeError(
                    "Components should be ScalarDistribution instances, got "
                    "'{}'.".format(type(comp).__name__))
        self.components = components
        self.dimension = len(components)
        moms = np.array([c.moments() for c in components], dtype=float)
        self._means = moms[:, 0]
        self._variances = moms[:, 1]
        self._means.setflags(write=False)
        self._variances.setflags(write=False)

    @classmethod
    def broadcast(cls, per_step, horizon):
        """
        Repeat one step worth of laws over the horizon.

        Args:
            per_step: Sequence of p ScalarDistribution instances.
            horizon: Number of steps N.
        """
        return cls(list(per_step) * int(horizon))

    @classmethod
    def from_steps(cls, steps):
        """
        Stack per-step lists of laws. All steps need the same length.
        """
        steps = [list(step) for step in steps]
        widths = set(len(step) for step in steps)
        if len(widths) != 1:
            raise DimensionMismatch(
                "All steps should have the same number of laws, got "
                "{}.".format(sorted(widths)))
        return cls([comp for step in steps for comp in step])

    def __len__(self):
        return self.dimension

    def __getitem__(self, index):
        return self.components[index]

    def __eq__(self, other):
        return (isinstance(other, DisturbanceVector)
                and self.components == other.components)

    def __hash__(self):
        return hash(self.components)

    def means(self):
        return self._means

    def variances(self):
        return self._variances

    def is_gaussian(self):
        """
        True if every component is Gaussian or a point mass
        """
        return all(isinstance(c, (Gaussian, Deterministic))
                   for c in self.components)

    def sample(self, rng, n):
        """
        Draw n independent vectors.

        Args:
            rng: numpy.random.Generator.
            n: Number of draws.

        Returns:
            numpy.ndarray of shape (n, dimension).
        """
        u = rng.random((n, self.dimension))
        u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
        out = np.empty((n, self.dimension))
        for k, comp in enumerate(self.components):
            out[:, k] = comp.ppf(u[:, k])
        return out

    def to_literal(self):
        return [c.to_literal() for c in self.components]
