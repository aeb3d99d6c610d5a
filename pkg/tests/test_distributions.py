import math

import numpy as np
import pytest

from dgsa.distributions import (
    Exponential,
    Gumbel,
    InputSpace,
    Normal,
    Truncated,
    Uniform,
    Weibull,
    poincare_cheeger,
    poincare_constant,
    poincare_log_concave,
    poincare_tabulated,
    poincare_truncated,
    sample,
    uniform_unit_space,
)

ALL_KINDS = [
    Uniform(0.0, 1.0),
    Uniform(-2.0, 5.0),
    Normal(0.0, 1.0),
    Normal(2.0, 3.0),
    Exponential(0.5),
    Gumbel(1.0, 2.0),
    Weibull(1.7, 2.0),
    Truncated(Normal(0.0, 1.0), -1.0, 2.0),
]


def test_pdf_values():
    assert Uniform(0, 1).pdf(0.5) == 1.0
    assert Normal(0, 1).pdf(0.0) == pytest.approx(0.3989422804, abs=1e-9)
    assert Exponential(2.0).pdf(0.0) == 2.0


def test_pdf_outside_support_is_zero():
    assert Uniform(0, 1).pdf(1.5) == 0.0
    assert Exponential(1.0).pdf(-0.1) == 0.0
    assert Weibull(2.0, 1.0).pdf(-1.0) == 0.0
    assert Truncated(Normal(0, 1), -1, 1).pdf(1.5) == 0.0


def test_quantile_values():
    assert Uniform(2, 4).quantile(0.5) == pytest.approx(3.0)
    assert Exponential(1.0).quantile(0.5) == pytest.approx(math.log(2.0), abs=1e-10)
    assert Normal(1, 2).quantile(0.5) == pytest.approx(1.0)


@pytest.mark.parametrize("p", [-0.1, 1.5, 2.0])
def test_quantile_rejects_outside_unit_interval(p):
    with pytest.raises(ValueError):
        Uniform(0, 1).quantile(p)
    with pytest.raises(ValueError):
        Normal(0, 1).quantile(p)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind + repr(d.support()))
def test_quantile_cdf_roundtrip(dist):
    lo, hi = dist.support()
    # interior probe points via the quantile itself
    ps = np.linspace(0.01, 0.99, 23)
    xs = np.asarray(dist.quantile(ps))
    back = np.asarray(dist.quantile(np.asarray(dist.cdf(xs))))
    assert np.allclose(back, xs, atol=1e-10, rtol=1e-10)
    assert np.all(xs >= lo) and np.all(xs <= hi)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind + repr(d.support()))
def test_cdf_monotone_zero_to_one(dist):
    ps = np.linspace(0.001, 0.999, 101)
    xs = np.asarray(dist.quantile(ps))
    cs = np.asarray(dist.cdf(xs))
    assert np.all(np.diff(cs) >= 0)
    assert cs[0] > 0.0 and cs[-1] < 1.0
    assert np.all(np.asarray(dist.pdf(xs)) >= 0.0)


def test_constructor_validation():
    with pytest.raises(ValueError):
        Uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        Normal(0.0, 0.0)
    with pytest.raises(ValueError):
        Exponential(-1.0)
    with pytest.raises(ValueError):
        Gumbel(0.0, 0.0)
    with pytest.raises(ValueError):
        Weibull(0.5, 1.0)
    with pytest.raises(ValueError):
        Truncated(Normal(0, 1), 2.0, 1.0)
    with pytest.raises(ValueError):
        Truncated(Normal(0, 1), 50.0, 60.0)  # no probability mass
    with pytest.raises(ValueError):
        Truncated(Truncated(Normal(0, 1), -1, 1), -0.5, 0.5)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind + repr(d.support()))
def test_sample_moments_match_analytic(dist):
    # 10^6 quantile-transform draws; mean and variance within 4 standard errors
    n = 10**6
    rng = np.random.Generator(np.random.Philox(42))
    x = sample(dist, n, rng)
    se_mean = x.std(ddof=1) / math.sqrt(n)
    assert abs(x.mean() - dist.mean()) < 4.0 * se_mean
    s2 = x.var(ddof=1)
    m4 = np.mean((x - x.mean()) ** 4)
    se_var = math.sqrt(max(m4 - s2**2, 0.0) / n)
    assert abs(s2 - dist.variance()) < 4.0 * se_var


# --- spectral-gap constants --------------------------------------------------


def test_tabulated_constants_exact():
    assert poincare_constant(Uniform(0, 1)) == pytest.approx(1.0 / math.pi**2, abs=1e-12)
    assert poincare_constant(Uniform(2, 5)) == pytest.approx(9.0 / math.pi**2, abs=1e-12)
    assert poincare_constant(Normal(0, 3)) == pytest.approx(9.0, abs=1e-12)
    assert poincare_constant(Exponential(2.0)) == pytest.approx(1.0, abs=1e-12)
    assert poincare_constant(Gumbel(0.0, 1.5)) == pytest.approx(
        (3.0 / math.log(2.0)) ** 2, abs=1e-12
    )
    k, lam = 2.0, 3.0
    expected = (2.0 * lam * math.log(2.0) ** ((1.0 - k) / k) / k) ** 2
    assert poincare_constant(Weibull(k, lam)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0, 8.0])
def test_weibull_shape_one_equals_exponential(lam):
    # Weibull(1, lam) is the exponential with rate 1/lam: identical
    # distributions must give identical constants, exactly (dyadic scales keep
    # the reciprocal representable; other scales agree to roundoff)
    assert poincare_constant(Weibull(1.0, lam)) == poincare_constant(Exponential(1.0 / lam))
    assert poincare_constant(Weibull(1.0, 7.0)) == pytest.approx(
        poincare_constant(Exponential(1.0 / 7.0)), rel=1e-14
    )


def test_weibull_shape_one_unit_scale():
    assert poincare_constant(Weibull(1.0, 1.0)) == pytest.approx(4.0, abs=1e-12)


def test_tabulated_beats_generic_log_concave():
    # rationale for the resolution order: the generic 1/f(median)^2 rule is
    # not optimal for uniform and normal marginals
    for dist in (Uniform(0, 1), Normal(0, 1)):
        assert poincare_tabulated(dist) < poincare_log_concave(dist)


def test_truncated_rule_uses_base_quantities():
    base = Normal(0.0, 1.0)
    t = Truncated(base, -1.0, 1.0)
    mass = float(base.cdf(1.0) - base.cdf(-1.0))
    expected = mass**2 / float(base.pdf(0.0)) ** 2  # symmetric: q(mid) = 0
    assert poincare_truncated(t) == pytest.approx(expected, rel=1e-12)
    assert poincare_constant(t) == pytest.approx(expected, rel=1e-12)


def test_cheeger_upper_bounds_optimal_constant():
    # the optimal constant for the standard normal is sigma^2 = 1
    assert poincare_cheeger(Normal(0, 1)) >= 1.0
    # for the unit uniform the optimal constant is 1/pi^2
    assert poincare_cheeger(Uniform(0, 1)) >= 1.0 / math.pi**2
    # exponential: the Cheeger value attains the tabulated constant in the tail
    assert poincare_cheeger(Exponential(2.0)) == pytest.approx(1.0, rel=1e-3)


# --- input space ---------------------------------------------------------------


def test_input_space_quantile_transform():
    space = InputSpace((Uniform(2, 4), Normal(0, 1)))
    pts = space.quantile_transform(np.array([[0.5, 0.5], [0.25, 0.5]]))
    assert pts[0, 0] == pytest.approx(3.0)
    assert pts[0, 1] == pytest.approx(0.0)
    assert pts[1, 0] == pytest.approx(2.5)
    with pytest.raises(ValueError):
        space.quantile_transform(np.zeros((3, 3)))


def test_input_space_unit_uniform_detection():
    space = InputSpace((Uniform(0, 1), Uniform(0, 2), Normal(0, 1)))
    assert space.is_unit_uniform(0)
    assert not space.is_unit_uniform(1)
    assert not space.is_unit_uniform(2)
    assert uniform_unit_space(3).dimension == 3
    with pytest.raises(ValueError):
        InputSpace(())


def test_cheeger_vanishing_density_unavailable():
    from dgsa.errors import ConstantUnavailableError

    class GappyDensity:
        # stand-in whose density vanishes on part of its support
        kind = "gappy"
        log_concave = False

        def pdf(self, x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0.9, 1.0, 0.0)

        def quantile(self, p):
            return np.asarray(p, dtype=float)

        def cdf(self, x):
            return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    with pytest.raises(ConstantUnavailableError):
        poincare_cheeger(GappyDensity())
