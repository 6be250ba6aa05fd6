"""Special-function accuracy, recurrences and cross-checks."""

import math

import numpy as np
import pytest
from scipy import special as sp

from memsel.specfun import digamma, log_gamma, log_multivariate_beta, trigamma

EULER_GAMMA = 0.5772156649015329


def grid(seed=0, n=4000):
    rng = np.random.default_rng(seed)
    return np.concatenate([10 ** rng.uniform(-3, 6, n), [1e-3, 0.5, 1.0, 2.0, 1e6]])


def test_log_gamma_known_values():
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-13)
    # ln(9!) by exact integer factorial
    assert log_gamma(10.0) == pytest.approx(math.log(math.factorial(9)), rel=1e-13)


def test_digamma_known_values():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(2.0) == pytest.approx(1.0 - EULER_GAMMA, abs=1e-12)
    # recurrence from psi(1/2) = -gamma - 2 ln 2
    ref = -EULER_GAMMA - 2 * math.log(2) + sum(1.0 / (0.5 + k) for k in range(5))
    assert digamma(5.5) == pytest.approx(ref, abs=1e-12)
    assert digamma(5.5) == pytest.approx(1.6110931486, abs=1e-9)


def test_trigamma_known_values():
    assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, rel=1e-12)
    assert trigamma(2.0) == pytest.approx(math.pi**2 / 6 - 1.0, rel=1e-12)
    assert trigamma(0.5) == pytest.approx(math.pi**2 / 2, rel=1e-12)


def test_grid_accuracy_against_scipy():
    # tolerance floors at 1 so tiny arguments (huge psi values) are judged
    # relatively; float64 cannot do better near psi'(1e-3) ~ 1e6
    z = grid()
    assert np.max(np.abs(log_gamma(z) - sp.gammaln(z)) / np.maximum(1.0, np.abs(sp.gammaln(z)))) < 1e-12
    assert np.max(np.abs(digamma(z) - sp.digamma(z)) / np.maximum(1.0, np.abs(sp.digamma(z)))) < 1e-10
    ref = sp.polygamma(1, z)
    assert np.max(np.abs(trigamma(z) - ref) / np.maximum(1.0, np.abs(ref))) < 1e-10


def test_recurrences_on_random_grid():
    rng = np.random.default_rng(42)
    z = 10 ** rng.uniform(-2, 4, 500)
    assert np.allclose(log_gamma(z + 1) - log_gamma(z), np.log(z), rtol=1e-9, atol=1e-9)
    assert np.allclose(digamma(z + 1) - digamma(z), 1.0 / z, rtol=1e-9, atol=1e-9)
    assert np.allclose(trigamma(z + 1) - trigamma(z), -1.0 / z**2, rtol=1e-9, atol=1e-9)


def test_psi_functions_match_finite_differences():
    rng = np.random.default_rng(3)
    z = rng.uniform(0.5, 50.0, 200)
    step = 1e-4
    fd_digamma = (log_gamma(z + step) - log_gamma(z - step)) / (2 * step)
    assert np.max(np.abs(fd_digamma - digamma(z))) < 1e-6
    fd_trigamma = (digamma(z + step) - digamma(z - step)) / (2 * step)
    assert np.max(np.abs(fd_trigamma - trigamma(z))) < 1e-6


def test_log_beta_values():
    assert log_multivariate_beta([1.0, 1.0]) == pytest.approx(0.0, abs=1e-14)
    # factorials: 1! 2! / 4! = 1/12
    assert log_multivariate_beta([2.0, 3.0]) == pytest.approx(math.log(1 / 12), rel=1e-13)
    assert log_multivariate_beta([1.0, 1.0, 1.0]) == pytest.approx(math.log(0.5), rel=1e-13)


def test_log_beta_symmetry_and_rows():
    rng = np.random.default_rng(11)
    v = rng.uniform(0.1, 20.0, 6)
    p = rng.permutation(v)
    assert log_multivariate_beta(v) == pytest.approx(log_multivariate_beta(p), rel=1e-12)
    mat = rng.uniform(0.1, 9.0, (5, 4))
    rows = log_multivariate_beta(mat, axis=-1)
    assert rows.shape == (5,)
    for i in range(5):
        assert rows[i] == pytest.approx(log_multivariate_beta(mat[i]), rel=1e-12)


@pytest.mark.parametrize("fn", [log_gamma, digamma, trigamma])
def test_domain_errors(fn):
    for bad in (0.0, -1.5, math.nan, math.inf):
        with pytest.raises(ValueError):
            fn(bad)


def test_log_beta_domain_errors():
    with pytest.raises(ValueError):
        log_multivariate_beta([1.0])
    with pytest.raises(ValueError):
        log_multivariate_beta([1.0, 0.0])
    with pytest.raises(ValueError):
        log_multivariate_beta([1.0, -2.0])
