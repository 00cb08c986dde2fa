"""Edge-family likelihoods against finite differences and closed forms."""

import numpy as np
import pytest

from mlsm import FamilySpec, loglik, mean_link, sample, score
from mlsm.families import curvature_bounds, neg_hess
from mlsm.errors import SupportError

X_GRID = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
Y_BY_KIND = {
    "gaussian": np.array([0.0, 1.0, 2.0, 5.0, -1.5]),
    "poisson": np.array([0.0, 1.0, 2.0, 5.0]),
    "bernoulli": np.array([0.0, 1.0]),
}


@pytest.mark.parametrize("kind", ["gaussian", "poisson", "bernoulli"])
def test_score_matches_finite_difference(kind):
    f = FamilySpec(kind)
    h = 1e-6
    for y in Y_BY_KIND[kind]:
        for x in X_GRID:
            fd = (loglik(y, x + h, f) - loglik(y, x - h, f)) / (2 * h)
            got = score(y, x, f)
            assert abs(got - fd) <= 1e-5 * max(1.0, abs(fd))


@pytest.mark.parametrize("kind", ["gaussian", "poisson", "bernoulli"])
def test_neg_hess_matches_finite_difference(kind):
    f = FamilySpec(kind)
    h = 1e-4
    for y in Y_BY_KIND[kind]:
        for x in X_GRID:
            fd = -(loglik(y, x + h, f) - 2 * loglik(y, x, f) + loglik(y, x - h, f)) / h**2
            got = neg_hess(y, x, f)
            assert abs(got - fd) <= 1e-5 * max(1.0, abs(fd))


def test_closed_form_values():
    # N(0,1) density at its mode
    assert np.isclose(loglik(0.0, 0.0, FamilySpec("gaussian")),
                      -0.5 * np.log(2 * np.pi), atol=1e-14)
    # Poisson(e^0 = 1) at y = 0: log P = -1
    assert np.isclose(loglik(0.0, 0.0, FamilySpec("poisson")), -1.0, atol=1e-14)
    # Bernoulli(1/2): log(1/2)
    assert np.isclose(loglik(1.0, 0.0, FamilySpec("bernoulli")), -np.log(2.0), atol=1e-14)


def test_bernoulli_loglik_stable_at_extremes():
    f = FamilySpec("bernoulli")
    assert np.isfinite(loglik(1.0, 700.0, f))
    assert np.isfinite(loglik(0.0, -700.0, f))
    # log-lik of the favored outcome approaches 0
    assert -1e-10 < loglik(1.0, 40.0, f) <= 0.0


def test_clamp_bounds_derivatives():
    for kind in ("poisson", "bernoulli"):
        f = FamilySpec(kind, clamp=30.0)
        lo, hi = curvature_bounds(f)
        assert 0 < lo < hi or (kind == "bernoulli" and hi == 0.25)
        for x in (-1e6, -31.0, 31.0, 1e6):
            w = neg_hess(0.0, x, f)
            assert lo - 1e-15 <= w <= hi + 1e-15
    # gaussian is unaffected by clamping
    f = FamilySpec("gaussian", dispersion=2.0)
    assert score(0.0, 1e6, f) == -1e6 / 2.0


def test_support_checks():
    with pytest.raises(SupportError):
        loglik(np.array([0.5]), 0.0, FamilySpec("bernoulli"))
    with pytest.raises(SupportError):
        loglik(np.array([-1.0]), 0.0, FamilySpec("poisson"))
    with pytest.raises(SupportError):
        loglik(np.array([1.5]), 0.0, FamilySpec("poisson"))
    # gaussian accepts anything real
    assert np.isfinite(loglik(np.array([-7.3]), 0.0, FamilySpec("gaussian"))).all()


def test_family_spec_validation():
    with pytest.raises(ValueError):
        FamilySpec("binomial")
    with pytest.raises(ValueError):
        FamilySpec("poisson", dispersion=2.0)
    with pytest.raises(ValueError):
        FamilySpec("gaussian", dispersion=-1.0)
    spec = FamilySpec("gaussian", dispersion=0.5)
    assert FamilySpec.from_dict(spec.to_dict()) == spec


def test_sampling_moments():
    rng = np.random.default_rng(3)
    m = 200_000
    x = np.full(m, 0.7)
    for kind in ("gaussian", "poisson", "bernoulli"):
        f = FamilySpec(kind)
        y = sample(x, f, rng)
        mu = mean_link(0.7, f)
        assert abs(y.mean() - mu) < 6 * np.sqrt(max(mu, 1.0) / m) + 1e-2


def test_gaussian_zero_dispersion_is_exact():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 5))
    y = sample(x, FamilySpec("gaussian", dispersion=0.0), rng)
    assert np.array_equal(y, x)
