"""
Piecewise affine underapproximations of concave functions.

The sandwich algorithm replaces a concave differentiable function f on a
bounded interval by the pointwise minimum of chords. An interval whose chord
deviates more than eta from f is split at the point where the gradient of f
matches the chord slope, which is also where the deviation is largest.
"""
import logging
import warnings

import numpy as np
import pandas as pd
from scipy import optimize

from .errors import NonConcaveInput, BreakpointFailure

logger = logging.getLogger(__name__)


class ExtrapolationWarning(UserWarning):
    """
    Issued when a PwaUnderapprox is evaluated outside its domain
    """
    pass


class PwaUnderapprox:
    """
    Pointwise minimum of affine pieces certified against a concave function

    Args:
        slopes: Slopes of the pieces.
        intercepts: Intercepts of the pieces.
        domain: Tuple (x_min, x_max) on which the gap is certified.
        eta: Certified maximal gap f - l on the domain.
        lefts: Optional left ends of the active subintervals of the pieces.
        rights: Optional right ends of the active subintervals.
        history: Optional list of (left, right, error) tuples recorded by
            the sandwich algorithm for every examined interval.
    """
    def __init__(self, slopes, intercepts, domain, eta, lefts=None,
                 rights=None, history=None):
        slopes = np.asarray(slopes, dtype=float).ravel()
        intercepts = np.asarray(intercepts, dtype=float).ravel()
        if len(slopes) == 0 or len(slopes) != len(intercepts):
            raise ValueError("A PWA needs a nonempty list of pieces with "
                             "matching slopes and intercepts.")
        if lefts is None:
            lefts = np.full(len(slopes), np.nan)
        if rights is None:
            rights = np.full(len(slopes), np.nan)
        lefts = np.asarray(lefts, dtype=float)
        rights = np.asarray(rights, dtype=float)
        order = np.argsort(lefts, kind='stable')
        self.slopes = slopes[order]
        self.intercepts = intercepts[order]
        self.lefts = lefts[order]
        self.rights = rights[order]
        self.domain = (float(domain[0]), float(domain[1]))
        self.eta = float(eta)
        self.history = list(history or [])

    def __len__(self):
        return len(self.slopes)

    @property
    def pieces(self):
        return list(zip(self.slopes.tolist(), self.intercepts.tolist()))

    def __call__(self, x):
        return evaluate(self, x)

    def to_frame(self):
        """
        Pieces as a pandas DataFrame with columns slope, intercept, left and
        right.
        """
        return pd.DataFrame({
            'slope': self.slopes,
            'intercept': self.intercepts,
            'left': self.lefts,
            'right': self.rights
        })

    def to_dict(self):
        return {
            'slopes': self.slopes.tolist(),
            'intercepts': self.intercepts.tolist(),
            'domain': list(self.domain),
            'eta': self.eta
        }


def evaluate(pwa, x):
    """
    Evaluate min_j (m_j x + c_j).

    Points outside the domain are evaluated as well, but an
    ExtrapolationWarning is issued.

    Args:
        pwa: PwaUnderapprox.
        x: Float or numpy.ndarray.

    Returns:
        Float or numpy.ndarray of the shape of x.
    """
    x_arr = np.asarray(x, dtype=float)
    lo, hi = pwa.domain
    if np.any(x_arr < lo) or np.any(x_arr > hi):
        warnings.warn(
            "Evaluating PWA outside its domain [{}, {}].".format(lo, hi),
            ExtrapolationWarning)
    values = np.min(pwa.slopes * x_arr[..., None] + pwa.intercepts, axis=-1)
    if np.ndim(values) == 0:
        return float(values)
    return values


def break_point(grad_f, l, u, m, tol=None, slope_tol=None):
    """
    Find the point in [l, u] where the gradient of a concave f equals m.

    Args:
        grad_f: Callable returning the (nonincreasing) derivative of f.
        l: Left end of the interval.
        u: Right end of the interval.
        m: Target slope, typically the chord slope of f over [l, u].
        tol: Tolerance on the returned point. Defaults to 1e-8 * (u - l).
        slope_tol: Tolerance on the bracket condition
            grad_f(u) <= m <= grad_f(l). Defaults to 1e-9 * max(1, |m|).

    Returns:
        Float x_m in [l, u].

    Raises:
        BreakpointFailure: m is not bracketed by the end point gradients.
    """
    if tol is None:
        tol = 1e-8 * (u - l)
    if slope_tol is None:
        slope_tol = 1e-9 * max(1.0, abs(m))
    g_lo = grad_f(l) - m
    g_hi = grad_f(u) - m
    if g_lo < -slope_tol or g_hi > slope_tol:
        raise BreakpointFailure(
            "Slope {:.6g} not bracketed on [{:.6g}, {:.6g}] (gradients "
            "{:.6g}, {:.6g}).".format(m, l, u, g_lo + m, g_hi + m))
    if g_lo <= 0:
        return float(l)
    if g_hi >= 0:
        return float(u)
    return float(optimize.brentq(lambda x: grad_f(x) - m, l, u,
                                 xtol=max(tol, 1e-300)))


def sandwich(f, grad_f, domain, eta, tol=None, concavity_tol=1e-12,
             slope_tol=None, max_pieces=10000):
    """
    Build a PWA underapproximation of a concave function.

    The work stack is processed last in first out. Every interval is
    replaced by its chord if the chord error, measured at the slope-matching
    point, is at most eta, and split at that point otherwise.

    Args:
        f: Callable, concave on domain.
        grad_f: Callable returning the derivative of f.
        domain: Tuple (x_min, x_max) with x_min < x_max.
        eta: Maximal allowed gap, strictly positive.
        tol: Relative breakpoint tolerance. The breakpoint of [l, u] is
            located to within tol * (u - l). Defaults to 1e-8.
        concavity_tol: Chord errors below -concavity_tol raise
            NonConcaveInput. Errors in [-concavity_tol, 0] count as zero.
        slope_tol: Passed on to break_point.
        max_pieces: Maximal number of examined intervals.

    Returns:
        PwaUnderapprox. Its eta is the larger of the requested eta and the
        largest accepted chord error, which exceeds eta only when an
        interval could not be split further.

    Raises:
        ValueError: Invalid domain or eta.
        NonConcaveInput: A chord lies above f.
        BreakpointFailure: See break_point.
    """
    x_min, x_max = float(domain[0]), float(domain[1])
    if not x_min < x_max:
        raise ValueError("Domain should satisfy x_min < x_max, got [{}, {}]"
                         .format(x_min, x_max))
    if not eta > 0:
        raise ValueError("eta should be positive, got {}.".format(eta))
    if tol is None:
        tol = 1e-8
    values = {}

    def value(x):
        if x not in values:
            values[x] = float(f(x))
        return values[x]

    todo = [(x_min, x_max, np.inf)]
    slopes, intercepts, lefts, rights = [], [], [], []
    history = []
    worst = 0.0
    while todo:
        l, u, parent_err = todo.pop()
        if len(history) >= max_pieces:
            raise NonConcaveInput(
                "Sandwich did not terminate within {} intervals.".format(
                    max_pieces))
        f_l, f_u = value(l), value(u)
        m = (f_u - f_l) / (u - l)
        c = f_l - m * l
        x_m = break_point(grad_f, l, u, m, tol * (u - l), slope_tol)
        err = value(x_m) - (m * x_m + c)
        if err < -concavity_tol:
            raise NonConcaveInput(
                "Chord of [{:.6g}, {:.6g}] exceeds f by {:.3g} at {:.6g}."
                .format(l, u, -err, x_m))
        err = max(err, 0.0)
        history.append((l, u, err))
        if err > parent_err:
            logger.debug("Chord error grew from %.3g to %.3g on [%g, %g]",
                         parent_err, err, l, u)
        # Splitting at an end point would not make progress
        degenerate = min(x_m - l, u - x_m) <= 1e-12 * (u - l)
        if err <= eta or degenerate:
            if err > eta:
                logger.warning(
                    "Accepting chord of [%g, %g] with error %.3g > eta",
                    l, u, err)
            worst = max(worst, err)
            slopes.append(m)
            intercepts.append(c)
            lefts.append(l)
            rights.append(u)
        else:
            todo.append((l, x_m, err))
            todo.append((x_m, u, err))
    logger.debug("Sandwich built %d pieces on [%g, %g] with eta %g",
                 len(slopes), x_min, x_max, eta)
    # Degenerate splits may keep chords above eta; certify what was kept
    return PwaUnderapprox(slopes, intercepts, (x_min, x_max), max(eta, worst),
                          lefts, rights, history)
