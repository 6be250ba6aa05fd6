"""Monte-Carlo oracle behavior (small-draw smoke level; the full
50-instance audit runs in the acceptance suite)."""

import numpy as np
import pytest

from conftest import random_instance
from memsel.chain import StateAlphabet, Trajectory, count_transitions
from memsel.criteria import dic, loo, lpd, lppd, lppd_cv2, waic
from memsel.oracle import (
    MIN_DRAWS,
    as_single_point,
    cv2_refit,
    loo_refit,
    mc_cv2,
    mc_loo,
    mc_lpd,
    mc_lppd,
    mc_variance_loglik,
)

AB2 = StateAlphabet(("0", "1"))
DRAWS = 20_000


def test_minimum_draws_enforced():
    _, _, tc = random_instance(np.random.default_rng(0))
    for fn in (mc_lppd, mc_loo, mc_variance_loglik):
        with pytest.raises(ValueError):
            fn(tc, draws=MIN_DRAWS - 1)
    with pytest.raises(ValueError):
        mc_lpd(tc.total, draws=10)


def test_zero_counts_estimates():
    from memsel.chain import BoundaryMode

    trajs = [Trajectory("a", (0,)), Trajectory("b", (1,))]
    tc = count_transitions(trajs, 2, AB2, BoundaryMode.TRUNCATED)
    est = mc_lppd(tc, draws=DRAWS, seed=0)
    assert est.estimate == 0.0 and est.std_error == 0.0
    est = mc_variance_loglik(tc, draws=DRAWS, seed=0)
    assert est.estimate == 0.0


def test_lppd_agreement():
    rng = np.random.default_rng(1)
    for i in range(6):
        _, _, tc = random_instance(rng)
        est = mc_lppd(tc, draws=DRAWS, seed=100 + i)
        assert abs(est.z(lppd(tc))) < 4.0


def test_lpd_agreement_and_j1_collapse():
    rng = np.random.default_rng(2)
    for i in range(6):
        _, _, tc = random_instance(rng, j=1)
        est_lpd = mc_lpd(tc.total, draws=DRAWS, seed=200 + i)
        est_lppd = mc_lppd(tc, draws=DRAWS, seed=200 + i)
        assert abs(est_lpd.z(lpd(tc.total))) < 4.0
        # same quantity and same seed: identical cells, identical estimate
        assert est_lpd.estimate == est_lppd.estimate


def test_loo_and_cv2_agreement():
    rng = np.random.default_rng(3)
    for i in range(4):
        _, trajs, tc = random_instance(rng, j=3)
        assert abs(mc_loo(tc, draws=DRAWS, seed=300 + i).z(loo(tc))) < 4.0
        assert abs(mc_cv2(tc, draws=DRAWS, seed=400 + i).z(lppd_cv2(tc))) < 4.0


def test_variance_oracle_validates_waic2_and_dic2():
    rng = np.random.default_rng(4)
    for i in range(4):
        _, _, tc = random_instance(rng)
        k2 = waic(tc, variant=2)[1]
        est = mc_variance_loglik(tc, draws=DRAWS, seed=500 + i)
        assert est.estimate >= 0.0
        assert abs(est.z(k2)) < 4.0
        kd2 = dic(tc, variant=2)[1]
        est_total = mc_variance_loglik(as_single_point(tc), draws=DRAWS, seed=600 + i)
        assert abs((kd2 / 2 - est_total.estimate) / est_total.std_error) < 4.0


def test_known_variance_value():
    # single context with counts [2, 1]: posterior variance of the
    # log-likelihood is 4 psi'(3) + psi'(2) - 9 psi'(5) = 0.23276...
    tc = count_transitions([Trajectory("t", (0, 0, 1))], 0, AB2)
    est = mc_variance_loglik(tc, draws=200_000, seed=7)
    assert abs(est.z(0.2327637326)) < 4.0


def test_std_error_scales_with_draws():
    rng = np.random.default_rng(5)
    _, _, tc = random_instance(rng, j=2)
    se1 = mc_lppd(tc, draws=20_000, seed=8).std_error
    se2 = mc_lppd(tc, draws=40_000, seed=9).std_error
    ratio = se2 / se1
    assert 0.8 / np.sqrt(2) < ratio < 1.2 / np.sqrt(2)


def test_determinism():
    rng = np.random.default_rng(6)
    _, _, tc = random_instance(rng)
    a = mc_lppd(tc, draws=DRAWS, seed=42)
    b = mc_lppd(tc, draws=DRAWS, seed=42)
    assert a == b
    c = mc_lppd(tc, draws=DRAWS, seed=43)
    assert a.estimate != c.estimate


def test_refit_oracles_match_closed_forms():
    rng = np.random.default_rng(7)
    for _ in range(25):
        _, trajs, tc = random_instance(rng, h=1)
        assert loo_refit(tc) == loo(tc)
        if tc.n_trajectories >= 2:
            assert cv2_refit(trajs, 1, tc.alphabet) == lppd_cv2(tc)
