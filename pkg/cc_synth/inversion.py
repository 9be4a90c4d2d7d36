"""
CDF, density and quantiles of scalar linear functionals of independent
disturbances, evaluated from characteristic functions by Gil-Pelaez
inversion:

    Phi(s) = 1/2 - 1/pi * int_0^inf Im(exp(-j beta s) Psi(beta)) / beta dbeta
    psi(s) = 1/pi * int_0^inf Re(exp(-j beta s) Psi(beta)) dbeta

The integrals are computed on geometrically growing panels with adaptive
Gauss-Legendre rules. Laws whose characteristic function decays slowly get
their tail treated separately:

- with uniform or triangular components, Psi is a finite sum of modes
  c exp(j nu beta) / beta^p times a smooth factor, and every mode is
  integrated to infinity with the QUADPACK Fourier integrator. This stays
  accurate at the support ends, where a mode stops oscillating;
- otherwise the tail is summed over half periods of the kernel and
  extrapolated with the Wynn epsilon algorithm.
"""
from dataclasses import dataclass
import logging
import warnings

import numpy as np
from scipy import integrate, optimize

from .distributions import (DisturbanceVector, Gaussian, Exponential,
                            Uniform, Triangular, Deterministic)
from .errors import (DimensionMismatch, QuadratureFailure, BracketFailure,
                     DomainError)

logger = logging.getLogger(__name__)

_GL32 = np.polynomial.legendre.leggauss(32)
_GL16 = np.polynomial.legendre.leggauss(16)
# Above this number of tail modes the Wynn extrapolation is used instead
MAX_TAIL_MODES = 256


def _uniform_modes(center, halfwidth):
    # exp(j c b) sin(h b) / (h b)
    coef = 1.0 / (2j * halfwidth)
    return [(center + halfwidth, 1, coef), (center - halfwidth, 1, -coef)]


def _triangular_modes(weight, comp):
    # Twice the second divided difference of exp(j b x) on (lo, mode, hi),
    # divided by (j b)^2, then scaled to the weighted variable
    a, c, b = comp.lo, comp.mode, comp.hi
    width = b - a
    if a < c < b:
        terms = [(a, 2, -2.0 / ((a - c) * (a - b))),
                 (c, 2, -2.0 / ((c - a) * (c - b))),
                 (b, 2, -2.0 / ((b - a) * (b - c)))]
    elif c == a:
        terms = [(b, 2, -2.0 / width**2), (a, 2, 2.0 / width**2),
                 (a, 1, 2j / width)]
    else:
        terms = [(b, 1, -2j / width), (b, 2, 2.0 / width**2),
                 (a, 2, -2.0 / width**2)]
    return [(weight * nu, p, coef / weight**p) for nu, p, coef in terms]


def _multiply_modes(modes, terms, scale):
    merged = {}
    for nu1, p1, c1 in modes:
        for nu2, p2, c2 in terms:
            nu = nu1 + nu2
            key = (round(nu / scale, 10), p1 + p2)
            if key in merged:
                merged[key][1] += c1 * c2
            else:
                merged[key] = [nu, c1 * c2]
    return [(nu, p, coef) for (_, p), (nu, coef) in merged.items()
            if coef != 0]


@dataclass(frozen=True)
class QuadratureConfig:
    """
    Settings of the Fourier inversion quadrature

    Args:
        abs_tol: Absolute tolerance on the inversion integrals.
        rel_tol: Relative tolerance on the inversion integrals.
        max_panels: Maximal number of doubling panels before giving up.
        tail_cut: Truncation factor. Integration stops at the first panel
            end beta with |Psi(beta)| / max(beta, 1) < tail_cut * abs_tol.
        max_levels: Maximal bisection depth of one panel.
        tail_cycles: Number of kernel cycles a panel may cover before the
            oscillatory tail is summed by extrapolation instead.
    """
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_panels: int = 64
    tail_cut: float = 0.1
    max_levels: int = 12
    tail_cycles: int = 128

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("Quadrature tolerances should be positive.")
        if int(self.max_panels) < 1:
            raise ValueError("max_panels should be at least 1.")
        if not 0 < self.tail_cut < 1:
            raise ValueError("tail_cut should lie in (0, 1).")


class LinearFunctionalLaw:
    """
    Law of the scalar weights^T [x0; W] for independent components

    Args:
        weights: Weight vector. Without initial state it has the dimension
            of the disturbance (typically G^T p). With an initial state its
            first block weighs the initial state (A_bar^T p) and the second
            the disturbance (G^T p).
        disturbance: DisturbanceVector of W.
        initial_state: Optional DisturbanceVector of a random initial state.

    Raises:
        DimensionMismatch: weights do not match the number of components.
    """
    def __init__(self, weights, disturbance, initial_state=None):
        weights = np.asarray(weights, dtype=float).ravel()
        components = list(disturbance.components)
        if initial_state is not None:
            components = list(initial_state.components) + components
        if len(weights) != len(components):
            raise DimensionMismatch(
                "Law weights have length {} but there are {} components."
                .format(len(weights), len(components)))
        self.weights = weights
        self.weights.setflags(write=False)
        self.disturbance = disturbance
        self.initial_state = initial_state
        means = np.array([c.mean() for c in components])
        variances = np.array([c.variance() for c in components])
        self.mean = float(weights @ means)
        self.stddev = float(np.sqrt(weights**2 @ variances))
        self._group(components)

    def _group(self, components):
        # Per-family parameter arrays so that cf() is a handful of numpy
        # operations regardless of the number of components
        shift, gauss_var = 0.0, 0.0
        exp_a, uni_c, uni_h, tri = [], [], [], []
        bounded_halfwidth = 0.0
        lo, hi = 0.0, 0.0
        for w, comp in zip(self.weights, components):
            if w == 0.0:
                continue
            if isinstance(comp, Deterministic):
                shift += w * comp.value
            elif isinstance(comp, Gaussian):
                shift += w * comp.mu
                gauss_var += (w * comp.sigma)**2
                lo, hi = -np.inf, np.inf
            elif isinstance(comp, Exponential):
                exp_a.append(w * comp.scale)
                if w > 0:
                    hi = np.inf
                else:
                    lo = -np.inf
            elif isinstance(comp, Uniform):
                uni_c.append(0.5 * w * (comp.lo + comp.hi))
                uni_h.append(0.5 * abs(w) * (comp.hi - comp.lo))
                bounded_halfwidth += uni_h[-1]
                lo += uni_c[-1] - uni_h[-1]
                hi += uni_c[-1] + uni_h[-1]
            elif isinstance(comp, Triangular):
                tri.append((w, comp))
                bounded_halfwidth += 0.5 * abs(w) * (comp.hi - comp.lo)
                lo += min(w * comp.lo, w * comp.hi)
                hi += max(w * comp.lo, w * comp.hi)
            else:
                raise TypeError("Unsupported component type '{}'.".format(
                    type(comp).__name__))
        # Phi is exactly 0 below and 1 above the support
        self.support = (lo + shift, hi + shift)
        self.tail_modes = None
        if uni_h or tri:
            scale = max(1.0, bounded_halfwidth)
            modes = [(shift, 0, 1.0 + 0j)]
            factors = [_uniform_modes(c, h) for c, h in zip(uni_c, uni_h)]
            factors += [_triangular_modes(w, comp) for w, comp in tri]
            for terms in factors:
                modes = _multiply_modes(modes, terms, scale)
                if len(modes) > MAX_TAIL_MODES:
                    modes = None
                    break
            self.tail_modes = modes
        self._shift = shift
        self._gauss_var = gauss_var
        self._exp_a = np.array(exp_a)
        self._uni_c = np.array(uni_c)
        self._uni_h = np.array(uni_h)
        self._tri = tri
        # Oscillation data of Psi used to lay out the tail integration
        self.phase_center = (shift + float(np.sum(self._uni_c)) +
                             sum(w * c.mean() for w, c in tri))
        self.oscillation = bounded_halfwidth
        self.n_active = len(exp_a) + len(uni_c) + len(tri) + int(
            gauss_var > 0)

    def cf(self, beta):
        """
        Characteristic function of the functional, vectorised over beta
        """
        beta = np.asarray(beta, dtype=float)
        phase = self._shift + float(np.sum(self._uni_c))
        out = np.exp(1j * phase * beta - 0.5 * self._gauss_var * beta**2)
        b = beta[..., None]
        if len(self._exp_a):
            out = out / np.prod(1.0 - 1j * self._exp_a * b, axis=-1)
        if len(self._uni_h):
            out = out * np.prod(np.sinc(self._uni_h * b / np.pi), axis=-1)
        for w, comp in self._tri:
            out = out * comp.cf(w * beta)
        return out

    def smooth_factor(self, beta):
        """
        Non-oscillating part of Psi: the Gaussian and exponential factors
        """
        beta = np.asarray(beta, dtype=float)
        out = np.exp(-0.5 * self._gauss_var * beta**2) + 0j
        if len(self._exp_a):
            out = out / np.prod(1.0 - 1j * self._exp_a * beta[..., None],
                                axis=-1)
        return out

    def scalar_smooth_factor(self):
        """
        smooth_factor for a single float beta in plain complex arithmetic,
        for integrators that call back once per node
        """
        half_var = 0.5 * self._gauss_var
        scales = self._exp_a.tolist()

        def smooth(beta):
            out = complex(np.exp(-half_var * beta * beta))
            for a in scales:
                out /= 1.0 - 1j * a * beta
            return out
        return smooth

    def sample(self, rng, n):
        """
        Draw n samples of the functional by sampling every component
        """
        draws = self.disturbance.sample(rng, n) @ self.weights[
            -self.disturbance.dimension:]
        if self.initial_state is not None:
            k = self.initial_state.dimension
            draws = draws + self.initial_state.sample(rng, n) @ \
                self.weights[:k]
        return draws

    def is_degenerate(self):
        return self.stddev == 0.0


def _integrand(law, s, beta):
    psi = law.cf(beta)
    rot = np.exp(-1j * beta * s) * psi
    with np.errstate(divide='ignore', invalid='ignore'):
        g_cdf = rot.imag / beta
    # Removable singularity at beta = 0
    scale = abs(s) + abs(law.mean) + law.stddev
    g_cdf = np.where(beta * scale < 1e-8, law.mean - s, g_cdf)
    return g_cdf, rot.real


def _gauss_legendre(law, s, left, right, rule):
    """
    Apply a Gauss-Legendre rule to the intervals [left_i, right_i].

    Returns arrays with the cdf and pdf integrals of every interval.
    """
    nodes, weights = rule
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    beta = mid[:, None] + half[:, None] * nodes[None, :]
    g_cdf, g_pdf = _integrand(law, s, beta)
    return half * (g_cdf @ weights), half * (g_pdf @ weights)


def _panel(law, s, a, b, cfg, tol):
    """
    Integrate over [a, b], bisecting intervals level by level until the
    16 and 32 point rules agree.

    Returns:
        Tuple (cdf integral, pdf integral).

    Raises:
        QuadratureFailure: max_levels bisections do not reach tolerance.
    """
    left, right = np.array([a]), np.array([b])
    total_c, total_p = 0.0, 0.0
    for _ in range(cfg.max_levels + 1):
        c32, p32 = _gauss_legendre(law, s, left, right, _GL32)
        c16, p16 = _gauss_legendre(law, s, left, right, _GL16)
        share = (right - left) / (b - a)
        local = np.maximum(tol, cfg.rel_tol * np.abs(c32)) * share
        ok = (np.abs(c32 - c16) <= local) & (np.abs(p32 - p16) <= local)
        total_c += float(np.sum(c32[ok]))
        total_p += float(np.sum(p32[ok]))
        if ok.all():
            return total_c, total_p
        left, right = left[~ok], right[~ok]
        mid = 0.5 * (left + right)
        left, right = np.concatenate((left, mid)), np.concatenate(
            (mid, right))
    raise QuadratureFailure(
        "Panel [{:.3g}, {:.3g}] did not converge within {} bisections."
        .format(a, b, cfg.max_levels))


def wynn_epsilon(partial_sums):
    """
    Extrapolate the limit of a sequence with the Wynn epsilon algorithm.

    Args:
        partial_sums: 1-D array with the sequence (typically partial sums of
            an alternating series).

    Returns:
        Tuple (estimate, error estimate). The error estimate is the distance
        between the last two even columns of the epsilon table.
    """
    current = np.asarray(partial_sums, dtype=float)
    previous = np.zeros(len(current) + 1)
    estimates = [current[-1]]
    for k in range(1, len(partial_sums)):
        diff = current[1:] - current[:-1]
        with np.errstate(divide='ignore', invalid='ignore'):
            nxt = previous[1:len(diff) + 1] + 1.0 / diff
        if not np.all(np.isfinite(nxt)) or len(nxt) == 0:
            break
        previous, current = current, nxt
        if k % 2 == 0:
            estimates.append(current[-1])
    if len(estimates) == 1:
        return estimates[0], abs(partial_sums[-1] - partial_sums[-2])
    return estimates[-1], abs(estimates[-1] - estimates[-2])


def _fourier_tail(law, s, start, omega, tol):
    """
    Tail integrals over [start, inf) of an oscillating integrand.

    The range is split in intervals of half a period of the fastest mode,
    each integrated by Gauss-Legendre, and the alternating partial sums are
    extrapolated with wynn_epsilon. Only the last terms of the sequence
    enter the epsilon table to limit round-off growth.
    """
    length = np.pi / omega
    best = None
    for count in (48, 96, 192, 384):
        edges = start + length * np.arange(count + 1)
        left, right = edges[:-1], edges[1:]
        for split in (1, 2, 4, 8, 16):
            sub = np.linspace(0.0, 1.0, split + 1)
            sl = (left[:, None] + (right - left)[:, None] * sub[None, :-1])
            sr = (left[:, None] + (right - left)[:, None] * sub[None, 1:])
            c32, p32 = _gauss_legendre(law, s, sl.ravel(), sr.ravel(),
                                       _GL32)
            c16, p16 = _gauss_legendre(law, s, sl.ravel(), sr.ravel(),
                                       _GL16)
            if (np.max(np.abs(c32 - c16)) <= tol / count
                    and np.max(np.abs(p32 - p16)) <= tol / count):
                break
        c_terms = c32.reshape(count, split).sum(axis=1)
        p_terms = p32.reshape(count, split).sum(axis=1)
        window = 25
        c_val, c_err = wynn_epsilon(np.cumsum(c_terms)[-window:])
        p_val, p_err = wynn_epsilon(np.cumsum(p_terms)[-window:])
        best = (c_val, p_val, max(c_err, p_err))
        if best[2] <= tol:
            return best
    return best


def _quad_to_infinity(func, start, tol, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(func, start, np.inf, epsabs=tol,
                                        limit=200, **kwargs)
        except integrate.IntegrationWarning as warning:
            raise QuadratureFailure(
                "Tail integral from {:.6g} did not reach {:.3g}: {}".format(
                    start, tol, str(warning).split('\n')[0]))
    return value, err


def _mode_integral(amplitude, kappa, start, tol, part):
    """
    int_start^inf part(amplitude(beta) exp(j kappa beta)) dbeta, where part
    is 'imag' or 'real' and amplitude is smooth and decaying.
    """
    sign = 1.0 if kappa >= 0 else -1.0
    omega = abs(kappa)
    if part == 'imag':
        def cos_part(b):
            return amplitude(b).imag

        def sin_part(b):
            return sign * amplitude(b).real
    else:
        def cos_part(b):
            return amplitude(b).real

        def sin_part(b):
            return -sign * amplitude(b).imag
    if omega <= 1e-12 * max(1.0, start):
        return _quad_to_infinity(cos_part, start, tol, epsrel=0.0)
    c_val, c_err = _quad_to_infinity(cos_part, start, 0.5 * tol,
                                     weight='cos', wvar=omega)
    s_val, s_err = _quad_to_infinity(sin_part, start, 0.5 * tol,
                                     weight='sin', wvar=omega)
    return c_val + s_val, c_err + s_err


def _mode_bounds(law, start):
    """
    Upper bounds of the cdf and pdf tail integrals over [start, inf)
    """
    smooth0 = abs(complex(law.smooth_factor(start)))
    bound_c = bound_p = 0.0
    for _, power, coef in law.tail_modes:
        size = abs(coef) * smooth0
        bound_c += size / (power * start**power)
        if power > 1:
            bound_p += size / ((power - 1) * start**(power - 1))
        else:
            bound_p = np.inf
    return bound_c, bound_p


def _mode_tail(law, s, start, tol, need_pdf):
    """
    Tail integrals over [start, inf) summed mode by mode.

    Modes whose amplitude bound integrates to less than their share of tol
    are skipped.

    Returns:
        Tuple (cdf integral, pdf integral, error estimate).
    """
    modes = law.tail_modes
    share = tol / (2.0 * len(modes))
    smooth0 = abs(complex(law.smooth_factor(start)))
    smooth = law.scalar_smooth_factor()
    total_c = total_p = err = 0.0
    for nu, power, coef in modes:
        kappa = nu - s
        bound = abs(coef) * smooth0 / (power * start**power) \
            if power > 0 else np.inf
        if bound > share:
            value, e = _mode_integral(
                lambda b, p=power, c=coef: c * smooth(b) /
                b**(p + 1), kappa, start, share, 'imag')
            total_c += value
            err += e
        if not need_pdf:
            continue
        bound = abs(coef) * smooth0 / ((power - 1) * start**(power - 1)) \
            if power > 1 else np.inf
        if bound > share:
            value, e = _mode_integral(
                lambda b, p=power, c=coef: c * smooth(b) / b**p,
                kappa, start, share, 'real')
            total_p += value
            err += e
    return total_c, total_p, err


def _invert(law, s, cfg, need_pdf):
    """
    Compute (Phi(s), psi(s)) for a non-degenerate law.

    Raises:
        QuadratureFailure: The panel budget is exhausted, or the tail
            integral misses cfg.abs_tol.
    """
    s = float(s)
    lo, hi = law.support
    if s >= hi:
        return 1.0, 0.0
    if s <= lo:
        return 0.0, 0.0
    # Log-concave tails are negligible this far from the mean
    if s >= law.mean + 64.0 * law.stddev:
        return 1.0, 0.0
    if s <= law.mean - 64.0 * law.stddev:
        return 0.0, 0.0
    cut = cfg.tail_cut * cfg.abs_tol
    omega_kernel = abs(s - law.phase_center)
    omega = max(omega_kernel, law.oscillation)
    total_c, total_p = 0.0, 0.0
    a, b = 0.0, 1.0 / law.stddev
    for _ in range(cfg.max_panels):
        # Hand over to the extrapolated tail once a panel spans many cycles
        if a > 0 and (b - a) * omega > 2 * np.pi * cfg.tail_cycles:
            if law.tail_modes is not None:
                c_tail, p_tail, err = _mode_tail(law, s, a, cfg.abs_tol,
                                                 need_pdf)
            else:
                c_tail, p_tail, err = _fourier_tail(law, s, a, omega,
                                                    cfg.abs_tol)
            if not (np.isfinite(c_tail) and np.isfinite(p_tail)):
                raise QuadratureFailure(
                    "Oscillatory tail at s={:.6g} is not finite.".format(s))
            if err > cfg.abs_tol:
                raise QuadratureFailure(
                    "Oscillatory tail at s={:.6g} only reached error {:.3g} "
                    "> {:.3g}.".format(s, err, cfg.abs_tol))
            logger.debug("Tail from %.4g at s=%.6g with error %.3g", a, s,
                         err)
            total_c += c_tail
            total_p += p_tail
            break
        c, p = _panel(law, s, a, b, cfg, cfg.abs_tol)
        total_c += c
        total_p += p
        if law.tail_modes is not None:
            bound_c, bound_p = _mode_bounds(law, b)
            done = bound_c < cut and (bound_p < cut or not need_pdf)
        else:
            modulus = abs(complex(law.cf(b)))
            done = modulus / max(b, 1.0) < cut
            if need_pdf:
                done = done and modulus < cut
        if done:
            break
        a, b = b, 2.0 * b
    else:
        raise QuadratureFailure(
            "Panel budget of {} exhausted at s={:.6g} before the truncation "
            "test passed.".format(cfg.max_panels, s))
    return 0.5 - total_c / np.pi, total_p / np.pi


def cf_functional(law, beta):
    """
    Characteristic function of the functional at beta
    """
    value = law.cf(beta)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def cdf(law, s, cfg=None):
    """
    Cumulative distribution function of the functional at s.

    Args:
        law: LinearFunctionalLaw.
        s: Evaluation point.
        cfg: QuadratureConfig. If None, the defaults are used.

    Returns:
        Probability clamped to [0, 1].

    Raises:
        QuadratureFailure: The quadrature did not converge.
    """
    cfg = cfg or QuadratureConfig()
    if law.is_degenerate():
        return 1.0 if s >= law.mean else 0.0
    value, _ = _invert(law, s, cfg, need_pdf=False)
    return float(min(1.0, max(0.0, value)))


def pdf(law, s, cfg=None):
    """
    Probability density of the functional at s, clamped at zero.

    Raises:
        QuadratureFailure: The quadrature did not converge.
    """
    cfg = cfg or QuadratureConfig()
    if law.is_degenerate():
        return 0.0
    _, value = _invert(law, s, cfg, need_pdf=True)
    return float(max(0.0, value))


def cdf_and_pdf(law, s, cfg=None):
    """
    Returns (Phi(s), psi(s)) from one pass over the characteristic function
    """
    cfg = cfg or QuadratureConfig()
    if law.is_degenerate():
        return (1.0 if s >= law.mean else 0.0), 0.0
    phi, psi = _invert(law, s, cfg, need_pdf=True)
    return float(min(1.0, max(0.0, phi))), float(max(0.0, psi))


def inverse_cdf(law, p, cfg=None, tol=None):
    """
    Quantile of the functional.

    The root of cdf(s) - p is bracketed by expanding mean -/+ k * stddev for
    k = 1, 2, 4, ..., 64 and refined with Brent's method to width tol.

    Args:
        law: LinearFunctionalLaw.
        p: Probability in (0, 1).
        cfg: QuadratureConfig. If None, the defaults are used.
        tol: Absolute tolerance on the returned point. Defaults to
            1e-9 * max(1, stddev).

    Returns:
        Float s with cdf(s) = p up to tolerances.

    Raises:
        ValueError: p is not in (0, 1).
        BracketFailure: No sign change within mean -/+ 64 stddev.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p should lie in (0, 1), got {}.".format(p))
    cfg = cfg or QuadratureConfig()
    if law.is_degenerate():
        raise BracketFailure("Degenerate law (stddev 0) has no bracket.")
    if tol is None:
        tol = 1e-9 * max(1.0, law.stddev)

    def residual(x):
        return cdf(law, x, cfg) - p

    lo = hi = None
    k = 1.0
    while k <= 64.0:
        if lo is None and residual(law.mean - k * law.stddev) < 0:
            lo = law.mean - k * law.stddev
        if hi is None and residual(law.mean + k * law.stddev) > 0:
            hi = law.mean + k * law.stddev
        if lo is not None and hi is not None:
            break
        k *= 2.0
    if lo is None or hi is None:
        raise BracketFailure(
            "No sign change of cdf - {} within mean -/+ 64 stddev.".format(p))
    return float(optimize.brentq(residual, lo, hi, xtol=tol))


def log_cdf_and_grad(law, s, cfg=None):
    """
    Returns (log Phi(s), psi(s) / Phi(s)).

    Raises:
        DomainError: Phi(s) is not above the quadrature tolerance.
    """
    cfg = cfg or QuadratureConfig()
    phi, psi = cdf_and_pdf(law, s, cfg)
    if phi <= cfg.abs_tol:
        raise DomainError(
            "log Phi undefined at s={:.6g}: Phi={:.3g} is below the "
            "quadrature tolerance.".format(s, phi))
    return float(np.log(phi)), psi / phi


def functional_law(weights, disturbance, initial_state=None):
    """
    Convenience constructor accepting a plain list of laws as disturbance
    """
    if not isinstance(disturbance, DisturbanceVector):
        disturbance = DisturbanceVector(disturbance)
    return LinearFunctionalLaw(weights, disturbance, initial_state)
