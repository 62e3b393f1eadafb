import math

import numpy as np
import pytest
import scipy.special as sps
import scipy.stats

from ecmle.special import (
    chi2_cdf,
    gamma_half_integer,
    log_gamma_half_integer,
    log_unit_ball_volume,
    regularized_lower_incomplete_gamma,
    unit_ball_volume,
)


def test_gamma_half_integer_matches_scipy():
    for two_a in range(1, 60):
        ours = gamma_half_integer(two_a)
        ref = sps.gamma(two_a / 2.0)
        assert ours == pytest.approx(ref, rel=1e-14), two_a


def test_gamma_half_integer_small_values_exact():
    assert gamma_half_integer(2) == 1.0
    assert gamma_half_integer(4) == 1.0
    assert gamma_half_integer(6) == 2.0
    assert gamma_half_integer(8) == 6.0
    assert gamma_half_integer(1) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_half_integer(3) == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-15)


def test_gamma_half_integer_rejects_bad_input():
    with pytest.raises(ValueError):
        gamma_half_integer(0)
    with pytest.raises(ValueError):
        gamma_half_integer(-3)
    with pytest.raises(ValueError):
        gamma_half_integer(2.5)


def test_log_gamma_half_integer_matches_scipy():
    # covers both the exact small-argument branch and the lgamma branch
    for two_a in list(range(1, 30)) + [341, 500, 1001, 4000]:
        ours = log_gamma_half_integer(two_a)
        ref = sps.gammaln(two_a / 2.0)
        assert ours == pytest.approx(ref, rel=1e-13, abs=1e-13), two_a


def test_unit_ball_volume_matches_closed_form():
    for d in range(1, 25):
        ref = math.pi ** (d / 2.0) / sps.gamma(d / 2.0 + 1.0)
        assert unit_ball_volume(d) == pytest.approx(ref, rel=1e-13)
        assert log_unit_ball_volume(d) == pytest.approx(math.log(ref), rel=1e-13)


def test_unit_ball_volume_low_dimensions():
    assert unit_ball_volume(1) == pytest.approx(2.0, rel=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)


def test_unit_ball_volume_rejects_bad_input():
    with pytest.raises(ValueError):
        unit_ball_volume(0)
    with pytest.raises(ValueError):
        unit_ball_volume(-1)
    with pytest.raises(ValueError):
        log_unit_ball_volume(0)


def test_regularized_lower_incomplete_gamma_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(300):
        a = float(rng.uniform(0.05, 60.0))
        x = float(rng.uniform(0.0, 120.0))
        ours = regularized_lower_incomplete_gamma(a, x)
        ref = float(sps.gammainc(a, x))
        assert ours == pytest.approx(ref, abs=1e-11), (a, x)


def test_regularized_lower_incomplete_gamma_edges():
    assert regularized_lower_incomplete_gamma(3.0, 0.0) == 0.0
    assert regularized_lower_incomplete_gamma(0.5, 1e6) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        regularized_lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        regularized_lower_incomplete_gamma(1.0, -0.1)


def test_chi2_cdf_matches_scipy():
    rng = np.random.default_rng(9)
    for _ in range(200):
        k = int(rng.integers(1, 40))
        x = float(rng.uniform(0.0, 100.0))
        assert chi2_cdf(x, k) == pytest.approx(float(scipy.stats.chi2.cdf(x, k)), abs=1e-11)


def test_chi2_cdf_d1_is_erf_identity():
    # for one degree of freedom, P(chi2 <= r^2) = erf(r / sqrt(2))
    for r in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0]:
        assert chi2_cdf(r * r, 1) == pytest.approx(math.erf(r / math.sqrt(2.0)), abs=1e-12)


def test_chi2_cdf_edges():
    assert chi2_cdf(0.0, 3) == 0.0
    assert chi2_cdf(-1.0, 3) == 0.0
    with pytest.raises(ValueError):
        chi2_cdf(1.0, 0)
