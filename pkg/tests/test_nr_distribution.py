import math

import numpy as np
import pytest

from failsafe_nr.config_setup import Approach
from failsafe_nr.core.nr_distribution import (
    NrDistribution,
    cf_intermediates,
    nr_cdf,
    nr_cf,
    nr_moments,
    nr_pdf,
    nr_pdf_asymptotic,
    nr_quantile,
    nr_support,
    pdf_gap,
    printed_delta,
    sum_params,
    truncation_corrections,
)
from failsafe_nr.errors import DomainError, SupportError
from failsafe_nr.normal_kit import std_normal_cdf

APPROACHES = [Approach.TRUNCATED, Approach.FOLDED]


def test_sum_params_k15():
    p = sum_params(15, 0.05)
    assert p.mu == pytest.approx(11.9683, abs=1e-4)
    assert p.sigma_sq == pytest.approx(5.4507, abs=1e-4)
    assert p.lam == pytest.approx(2.398, abs=1e-3)
    assert p.lam == pytest.approx((p.mu - p.z_alpha * math.sqrt(15)) / p.sigma, rel=1e-15)
    assert p.model_dump(by_alias=True)["lambda"] == p.lam


@pytest.mark.parametrize("k, alpha", [(0, 0.05), (-3, 0.05), (2.5, 0.05), (5, 0.0), (5, 0.7), (5, 0.5)])
def test_sum_params_domain(k, alpha):
    with pytest.raises(DomainError):
        sum_params(k, alpha)


def test_mills_ratio_is_stable_in_the_far_tail():
    p = sum_params(1, 1e-12)
    assert p.lam < -9
    r = p.mills_ratio
    assert math.isfinite(r)
    # phi(x)/Phi(x) ~ -x as x -> -inf
    assert r == pytest.approx(-p.lam, rel=0.02)


def test_support():
    assert nr_support(NrDistribution.create(7, approach=Approach.TRUNCATED)) == (0.0, True)
    assert nr_support(NrDistribution.create(7, approach=Approach.FOLDED)) == (-7.0, False)


def test_pdf_is_zero_outside_support(folded15, truncated15):
    assert nr_pdf(-1e-9, truncated15) == 0.0
    assert nr_pdf(-15.0, truncated15) == 0.0
    assert nr_pdf(-20.0, folded15) == 0.0
    assert nr_pdf(0.0, truncated15) > 0.0
    assert nr_pdf(-14.5, folded15) > 0.0


def test_folded_pdf_at_minus_k_is_an_error(folded15):
    with pytest.raises(SupportError):
        nr_pdf(-15.0, folded15)
    with pytest.raises(SupportError):
        nr_pdf(np.array([-15.0, 3.0]), folded15)


def test_pdf_vectorises(folded15):
    grid = np.linspace(-14, 120, 50)
    np.testing.assert_allclose(nr_pdf(grid, folded15), [nr_pdf(x, folded15) for x in grid], rtol=1e-14)


def test_folded_moments_k15(folded15):
    m = nr_moments(folded15)
    assert m.mean == pytest.approx(39.96, abs=0.01)
    assert m.variance == pytest.approx(434.8, abs=0.1)
    assert m.epsilon == 0.0
    assert m.delta == 0.0


@pytest.mark.parametrize("k", [2, 5, 15, 50])
def test_truncated_moments_are_folded_plus_corrections(k):
    folded = nr_moments(NrDistribution.create(k, approach=Approach.FOLDED))
    trunc = nr_moments(NrDistribution.create(k, approach=Approach.TRUNCATED))
    epsilon, delta = truncation_corrections(sum_params(k))
    assert trunc.epsilon == epsilon >= 0
    assert trunc.mean - folded.mean == pytest.approx(epsilon, abs=1e-10)
    assert trunc.variance - folded.variance == pytest.approx(delta, abs=1e-9)
    assert trunc.variance > 0


def test_printed_delta_differs_from_exact_correction():
    p = sum_params(15)
    _, delta = truncation_corrections(p)
    assert abs(printed_delta(p) - delta) > 10.0


@pytest.mark.parametrize("approach", APPROACHES)
@pytest.mark.parametrize("k", [3, 15, 60])
def test_cdf_is_monotone_and_bounded(approach, k):
    d = NrDistribution.create(k, approach=approach)
    grid = np.linspace(-k - 1, 20 * k, 500)
    cdf = nr_cdf(grid, d)
    assert np.all((cdf >= 0) & (cdf <= 1))
    assert np.all(np.diff(cdf) >= 0)
    assert nr_cdf(1e6 * k, d) == pytest.approx(1.0, abs=1e-12)


def test_cdf_boundaries(folded15, truncated15):
    assert nr_cdf(0.0, truncated15) == 0.0
    assert nr_cdf(-15.0, folded15) == 0.0
    # P(N_R < 0) under the folded law is the mass of |S| below the cutoff
    p = folded15.params
    expected = std_normal_cdf((p.cutoff - p.mu) / p.sigma) - std_normal_cdf((-p.cutoff - p.mu) / p.sigma)
    assert nr_cdf(0.0, folded15) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("approach", APPROACHES)
@pytest.mark.parametrize("p", [1e-4, 0.01, 0.5, 0.9, 0.999])
def test_quantile_inverts_cdf(approach, p):
    d = NrDistribution.create(15, approach=approach)
    assert nr_cdf(nr_quantile(p, d), d) == pytest.approx(p, abs=1e-8)


@pytest.mark.parametrize("approach", APPROACHES)
@pytest.mark.parametrize("x", [5.0, 30.0, 80.0])
def test_cdf_inverts_quantile(approach, x):
    d = NrDistribution.create(15, approach=approach)
    assert nr_quantile(nr_cdf(x, d), d) == pytest.approx(x, abs=1e-6)


@pytest.mark.parametrize("p", [0.0, 1.0, 1.2])
def test_quantile_domain(folded15, p):
    with pytest.raises(DomainError):
        nr_quantile(p, folded15)


@pytest.mark.parametrize("approach", APPROACHES)
def test_cf_at_zero_is_exactly_one(approach):
    for k in (1, 5, 15, 500):
        assert nr_cf(0.0, NrDistribution.create(k, approach=approach)) == complex(1.0, 0.0)


def test_cf_intermediates_at_zero_frequency():
    ci = cf_intermediates(0.0, sum_params(15))
    assert ci.mu1 == 0
    assert ci.sigma1_sq == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("approach", APPROACHES)
def test_cf_properties(approach):
    d = NrDistribution.create(15, approach=approach)
    assert abs(nr_cf(1e-9, d) - 1.0) < 1e-6
    ts = np.linspace(-0.5, 0.5, 41)
    values = nr_cf(ts, d)
    assert np.all(np.abs(values) <= 1.0 + 1e-12)
    np.testing.assert_allclose(nr_cf(-ts, d), np.conj(values), atol=1e-12)


def test_cf_derivative_at_zero_is_i_times_mean(truncated15, folded15):
    h = 1e-6
    for d in (truncated15, folded15):
        slope = (nr_cf(h, d) - nr_cf(-h, d)) / (2 * h)
        assert slope.imag == pytest.approx(nr_moments(d).mean, rel=1e-5)


def test_asymptotic_pdf_matches_truncated_at_k50():
    d = NrDistribution.create(50, approach=Approach.TRUNCATED)
    grid = np.linspace(0, 2000, 4001)
    gap = np.max(np.abs(nr_pdf_asymptotic(grid, d.params) - nr_pdf(grid, d)))
    assert gap < 1e-6
    assert gap <= (1 - std_normal_cdf(d.params.lam)) * np.max(nr_pdf(grid, d)) + 1e-15
    assert nr_pdf_asymptotic(-1.0, d.params) == 0.0


def test_pdf_gap_shrinks_with_k():
    gaps = [pdf_gap(k) for k in (5, 10, 15, 25, 50)]
    sup = [g.sup_gap for g in gaps]
    assert all(a >= b for a, b in zip(sup, sup[1:]))
    k15 = gaps[2]
    assert k15.sup_gap < 0.1 * k15.pdf_max


def test_distribution_methods_delegate(folded15):
    assert folded15.pdf(3.0) == nr_pdf(3.0, folded15)
    assert folded15.cdf(3.0) == nr_cdf(3.0, folded15)
    assert folded15.moments() == nr_moments(folded15)
    assert folded15.cf(0.1) == nr_cf(0.1, folded15)


def test_truncated_support_includes_zero(truncated15):
    assert nr_pdf(0.0, truncated15) > 0.0
    assert nr_pdf(np.nextafter(0.0, -np.inf), truncated15) == 0.0
    assert nr_cdf(np.nextafter(0.0, np.inf), truncated15) > 0.0
