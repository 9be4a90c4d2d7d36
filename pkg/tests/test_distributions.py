import pytest
import numpy as np
from scipy import integrate, stats

from cc_synth import distributions as dist
from cc_synth.errors import SchemaError, DimensionMismatch


LAWS = [
    dist.Gaussian(0.3, 1.7),
    dist.Exponential(0.5),
    dist.Uniform(-1.0, 2.0),
    dist.Triangular(-0.2, 0.05, 0.3),
    dist.Triangular(0.0, 0.0, 1.0),
]


def _numerical_cf(law, beta):
    lo, hi = law.support()
    lo = max(lo, law.mean() - 40 * np.sqrt(law.variance()))
    hi = min(hi, law.mean() + 40 * np.sqrt(law.variance()))
    re = integrate.quad(lambda x: law.pdf(x) * np.cos(beta * x), lo, hi,
                        limit=200)[0]
    im = integrate.quad(lambda x: law.pdf(x) * np.sin(beta * x), lo, hi,
                        limit=200)[0]
    return re + 1j * im


@pytest.mark.parametrize("law", LAWS)
def test_cf_matches_density(law):
    assert law.cf(0.0) == pytest.approx(1.0)
    for beta in [0.3, 1.0, 4.0]:
        assert complex(law.cf(beta)) == pytest.approx(
            _numerical_cf(law, beta), abs=1e-7)


def test_moments_match_scipy():
    assert dist.Gaussian(1, 2).moments() == pytest.approx((1, 4))
    assert dist.Exponential(0.5).moments() == pytest.approx((0.5, 0.25))
    assert dist.Uniform(-1, 2).moments() == pytest.approx(
        stats.uniform(-1, 3).stats('mv'))
    tri = dist.Triangular(-0.2, 0.05, 0.3)
    ref = stats.triang(0.5, loc=-0.2, scale=0.5)
    assert tri.moments() == pytest.approx(ref.stats('mv'))


@pytest.mark.parametrize("law", LAWS)
def test_ppf_inverts_cdf(law):
    p = np.linspace(0.01, 0.99, 25)
    assert law.cdf(law.ppf(p)) == pytest.approx(p, abs=1e-10)


def test_triangular_cf_series_branch():
    tri = dist.Triangular(-1.0, 0.5, 1.0)
    beta = tri.series_cutoff / 10.0
    # Series and exact branch agree just above the cutoff
    above = 2.0 * tri.series_cutoff / (tri.hi - tri.lo)
    assert complex(tri.cf(beta)) == pytest.approx(
        np.exp(1j * beta * tri.mean()), abs=1e-8)
    assert complex(tri.cf(above)) == pytest.approx(
        _numerical_cf(tri, above), abs=1e-8)


def test_deterministic_law():
    law = dist.Deterministic(2.5)
    assert law.moments() == (2.5, 0.0)
    assert complex(law.cf(1.0)) == pytest.approx(np.exp(2.5j))
    assert float(law.cdf(2.4)) == 0.0
    assert float(law.cdf(2.5)) == 1.0
    rng = np.random.default_rng(0)
    assert np.all(law.sample(rng, 10) == 2.5)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        dist.Gaussian(0.0, 0.0)
    with pytest.raises(ValueError):
        dist.Exponential(-1.0)
    with pytest.raises(ValueError):
        dist.Exponential.from_rate(0.0)
    with pytest.raises(ValueError):
        dist.Uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        dist.Triangular(0.0, 2.0, 1.0)


def test_laws_are_immutable():
    law = dist.Gaussian()
    with pytest.raises(AttributeError):
        law.sigma = 2.0


def test_from_literal():
    law = dist.from_literal({'type': 'exponential', 'rate': 5})
    assert law == dist.Exponential(0.2)
    assert dist.from_literal({'type': 'exponential', 'scale': 0.2}) == law
    law = dist.from_literal({'type': 'triangular', 'lo': -1, 'mode': 0,
                             'hi': 1})
    assert dist.from_literal(law.to_literal()) == law
    assert dist.from_literal({'type': 'deterministic', 'value': 3}) == \
        dist.Deterministic(3.0)


def test_from_literal_errors():
    with pytest.raises(SchemaError) as err:
        dist.from_literal({'type': 'gaussian', 'mean': 0, 'stddev': 1,
                           'foo': 2}, 'w[0]')
    assert err.value.path == 'w[0].foo'
    with pytest.raises(SchemaError):
        dist.from_literal({'type': 'cauchy'})
    with pytest.raises(SchemaError):
        dist.from_literal({'type': 'exponential', 'rate': 1, 'scale': 1})
    with pytest.raises(SchemaError):
        dist.from_literal({'type': 'uniform', 'lo': 0})
    with pytest.raises(SchemaError):
        dist.from_literal({'type': 'uniform', 'lo': 0, 'hi': 'one'})
    with pytest.raises(SchemaError):
        dist.from_literal({'type': 'uniform', 'lo': 1, 'hi': 0})
    with pytest.raises(SchemaError):
        dist.from_literal([1, 2])


def test_sampling_is_seeded():
    law = dist.Exponential(0.5)
    a = law.sample(np.random.default_rng(3), 1000)
    b = law.sample(np.random.default_rng(3), 1000)
    assert np.array_equal(a, b)
    big = law.sample(np.random.default_rng(4), 200000)
    assert np.mean(big) == pytest.approx(0.5, abs=5 * 0.5 / np.sqrt(200000))
    assert isinstance(law.sample(np.random.default_rng(0)), float)


def test_disturbance_vector():
    step = [dist.Exponential(0.2), dist.Exponential(0.1)]
    W = dist.DisturbanceVector.broadcast(step, 3)
    assert len(W) == 6
    assert W.means() == pytest.approx([0.2, 0.1] * 3)
    assert W.variances() == pytest.approx([0.04, 0.01] * 3)
    assert W == dist.DisturbanceVector.from_steps([step] * 3)
    assert not W.is_gaussian()
    assert dist.DisturbanceVector([dist.Gaussian(),
                                   dist.Deterministic(1.0)]).is_gaussian()
    X = W.sample(np.random.default_rng(0), 5)
    assert X.shape == (5, 6)
    assert np.all(X >= 0)


def test_disturbance_vector_errors():
    with pytest.raises(DimensionMismatch):
        dist.DisturbanceVector.from_steps([[dist.Gaussian()],
                                           [dist.Gaussian()] * 2])
    with pytest.raises(ValueError):
        dist.DisturbanceVector([])
    with pytest.raises(TypeError):
        dist.DisturbanceVector([1.0])
