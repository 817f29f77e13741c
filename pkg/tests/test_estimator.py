import itertools
import math

import numpy as np
import pytest
from pydantic import ValidationError

from failsafe_nr.core.estimator import (
    StudySet,
    as_study_set,
    fail_safe_n,
    minimal_bias_rule,
    nr_from_sums,
    stouffer_z,
    tolerance_level,
    z_alpha_for,
)
from failsafe_nr.errors import DomainError
from failsafe_nr.normal_kit import std_normal_cdf

K4 = [1.5, 2.0, 1.0, 2.5]


def test_stouffer_z():
    z, p = stouffer_z(K4)
    assert z == 3.5
    assert p == pytest.approx(std_normal_cdf(-3.5), rel=1e-14)


def test_fail_safe_n_k4():
    report = fail_safe_n(StudySet(z_scores=tuple(K4)), alpha=0.05)
    assert report.n_r_raw == pytest.approx(49 / 1.6448536269514722**2 - 4, rel=1e-12)
    assert report.n_r_raw == pytest.approx(14.110, abs=1e-3)
    assert report.n_r_reported == report.n_r_raw
    assert report.threshold == 30
    assert report.minimal_bias is False
    assert report.k == 4


def test_all_zero_studies_give_minus_k():
    report = fail_safe_n([0.0] * 7)
    assert report.n_r_raw == -7
    assert report.n_r_reported == 0.0
    assert report.minimal_bias is False


@pytest.mark.parametrize("z", [K4, [0.3, -1.2, 4.0], [2.2] * 12])
def test_appending_a_null_study_decrements_by_one(z):
    before = fail_safe_n(z).n_r_raw
    after = fail_safe_n(list(z) + [0.0]).n_r_raw
    assert before - after == pytest.approx(1.0, abs=1e-12)


def test_permutation_invariance():
    z = [0.31, 2.7, -1.05, 1.9, 0.002]
    expected = fail_safe_n(z).n_r_raw
    for perm in itertools.permutations(z):
        assert fail_safe_n(list(perm)).n_r_raw == expected


def test_permutation_invariance_large():
    rng = np.random.default_rng(3)
    z = rng.normal(1.0, 3.0, size=500)
    expected = fail_safe_n(z).n_r_raw
    for _ in range(5):
        assert fail_safe_n(rng.permutation(z)).n_r_raw == expected


@pytest.mark.parametrize("k", [1, 4, 30])
def test_tolerance_boundary(k):
    threshold = tolerance_level(k)
    assert threshold == 5 * k + 10
    assert minimal_bias_rule(np.nextafter(threshold, np.inf), k) is True
    assert minimal_bias_rule(threshold, k) is False
    assert minimal_bias_rule(np.nextafter(threshold, -np.inf), k) is False


def test_from_effects():
    s = StudySet.from_effects([2.0, -1.0], [0.5, 2.0], labels=["a", "b"])
    assert s.z_scores == (4.0, -0.5)
    assert s.labels == ("a", "b")
    with pytest.raises(DomainError):
        StudySet.from_effects([1.0], [0.0])
    with pytest.raises(DomainError):
        StudySet.from_effects([1.0, 2.0], [1.0])


def test_study_set_validation():
    with pytest.raises(DomainError):
        as_study_set([])
    with pytest.raises(ValidationError):
        StudySet(z_scores=(1.0, float("nan")))
    with pytest.raises(ValidationError):
        StudySet(z_scores=(1.0,), effects=(1.0,))


@pytest.mark.parametrize("alpha", [0.0, -0.1, 0.6, float("nan")])
def test_alpha_domain(alpha):
    with pytest.raises(DomainError):
        fail_safe_n(K4, alpha=alpha)


def test_alpha_half_has_no_fail_safe_number():
    assert z_alpha_for(0.5) == 0.0
    with pytest.raises(DomainError):
        fail_safe_n(K4, alpha=0.5)


def test_nr_from_sums_matches_report():
    z_alpha = z_alpha_for(0.05)
    sums = np.array([7.0, 0.0, 3.3])
    np.testing.assert_allclose(nr_from_sums(sums, 4, z_alpha), [fail_safe_n(K4).n_r_raw, -4.0, 3.3**2 / z_alpha**2 - 4])
    assert math.isclose(stouffer_z([1.0])[0], 1.0)
