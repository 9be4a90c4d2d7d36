import warnings

import pytest
import numpy as np
from scipy import special

from cc_synth import pwa
from cc_synth import distributions as dist
from cc_synth import inversion as inv
from cc_synth.errors import NonConcaveInput, BreakpointFailure
from cc_synth.problems import log_cdf_pwa


def _certify(approx, f, domain, eta, points=1000):
    grid = np.linspace(domain[0], domain[1], points)
    gap = np.array([f(x) for x in grid]) - approx(grid)
    assert np.all(gap >= -1e-9)
    assert np.all(gap <= eta + 1e-9)


def test_sandwich_log():
    approx = pwa.sandwich(np.log, lambda x: 1.0 / x, (0.01, 10.0), 0.05)
    _certify(approx, np.log, (0.01, 10.0), 0.05)
    assert len(approx) > 1
    assert approx.pieces[0][0] > approx.pieces[-1][0]


def test_sandwich_gaussian_quantile():
    def f(z):
        return -special.ndtri(1.0 - z)

    def grad(z):
        x = special.ndtri(1.0 - z)
        return np.sqrt(2.0 * np.pi) * np.exp(0.5 * x**2)

    domain = (1e-6, 0.5)
    approx = pwa.sandwich(f, grad, domain, 0.1)
    _certify(approx, f, domain, 0.1)


def test_sandwich_affine_is_one_piece():
    approx = pwa.sandwich(lambda x: 2.0 * x + 1.0, lambda x: 2.0,
                          (-1.0, 3.0), 0.1)
    assert len(approx) == 1
    assert approx.pieces[0] == pytest.approx((2.0, 1.0))


def test_sandwich_history_records_every_interval():
    approx = pwa.sandwich(np.log, lambda x: 1.0 / x, (0.1, 5.0), 0.1)
    assert len(approx.history) >= len(approx)
    assert approx.history[0][:2] == (0.1, 5.0)
    assert all(err >= 0 for _, _, err in approx.history)


def test_sandwich_rejects_convex_function():
    with pytest.raises((NonConcaveInput, BreakpointFailure)):
        pwa.sandwich(np.exp, np.exp, (0.0, 2.0), 0.01)


def test_sandwich_invalid_arguments():
    with pytest.raises(ValueError):
        pwa.sandwich(np.log, lambda x: 1.0 / x, (2.0, 1.0), 0.1)
    with pytest.raises(ValueError):
        pwa.sandwich(np.log, lambda x: 1.0 / x, (1.0, 2.0), 0.0)


def test_break_point():
    x = pwa.break_point(lambda x: -2.0 * x, -1.0, 1.0, 0.5)
    assert x == pytest.approx(-0.25)
    assert pwa.break_point(lambda x: -2.0 * x, 0.0, 1.0, 0.0) == 0.0
    with pytest.raises(BreakpointFailure):
        pwa.break_point(lambda x: -2.0 * x, 0.0, 1.0, 5.0)


def test_evaluate_warns_outside_domain():
    approx = pwa.PwaUnderapprox([1.0, -1.0], [0.0, 0.0], (-1.0, 1.0), 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        assert approx(0.5) == pytest.approx(-0.5)
    with pytest.warns(pwa.ExtrapolationWarning):
        assert approx(2.0) == pytest.approx(-2.0)


def test_pieces_are_sorted_and_framed():
    approx = pwa.PwaUnderapprox([-1.0, 1.0], [0.0, 0.0], (-1.0, 1.0), 0.1,
                                lefts=[0.0, -1.0], rights=[1.0, 0.0])
    assert approx.pieces == [(1.0, 0.0), (-1.0, 0.0)]
    frame = approx.to_frame()
    assert list(frame.columns) == ['slope', 'intercept', 'left', 'right']
    assert frame['left'].tolist() == [-1.0, 0.0]
    assert approx.to_dict()['domain'] == [-1.0, 1.0]
    with pytest.raises(ValueError):
        pwa.PwaUnderapprox([], [], (0.0, 1.0), 0.1)


def test_log_cdf_pwa_of_composite_law():
    components = [dist.Exponential(0.5), dist.Exponential(0.25),
                  dist.Exponential(0.1667)]
    law = inv.functional_law([1.0, 0.5, 0.75], components)
    approx, x_lo, x_hi, clipped = log_cdf_pwa(law, 1e-3, 0.1)
    assert clipped is False
    assert inv.cdf(law, x_lo) == pytest.approx(1e-3, abs=1e-8)

    def f(x):
        return np.log(inv.cdf(law, x))

    _certify(approx, f, (x_lo, x_hi), approx.eta)
    assert approx.eta <= 0.1 + 1e-5
    # The flat cap keeps the pieces below log Phi beyond the domain
    assert approx.slopes[-1] == 0.0
    with pytest.warns(pwa.ExtrapolationWarning):
        assert approx(x_hi + 5.0) <= 0.0


def _max_gap(approx, f, domain, points=1000):
    grid = np.linspace(domain[0], domain[1], points)
    return np.max(f(grid) - approx(grid))


def test_halving_eta_refines():
    domain = (0.01, 10.0)
    coarse = pwa.sandwich(np.log, lambda x: 1.0 / x, domain, 0.1)
    fine = pwa.sandwich(np.log, lambda x: 1.0 / x, domain, 0.05)
    assert len(fine) > len(coarse)
    assert _max_gap(fine, np.log, domain) < _max_gap(coarse, np.log, domain)
    assert _max_gap(fine, np.log, domain) <= 0.05 + 1e-9


def test_underapproximation_is_concave():
    approx = pwa.sandwich(np.log, lambda x: 1.0 / x, (0.01, 10.0), 0.02)
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0.01, 10.0, (2, 500))
    mid = approx(0.5 * (x + y))
    assert np.all(mid >= 0.5 * (approx(x) + approx(y)) - 1e-12)


def test_unsplittable_chord_is_certified():
    # Steep rise on [0, 1e-13], flat afterwards
    def f(x):
        return min(1e13 * x, 1.0)

    def grad(x):
        return 1e13 if x < 1e-13 else 0.0

    approx = pwa.sandwich(f, grad, (0.0, 1.0), 0.1, tol=1e-14)
    assert len(approx) == 1
    assert approx.eta > 0.5
    assert approx.eta == pytest.approx(max(e for _, _, e in approx.history))
    assert approx.to_dict()['eta'] == approx.eta
