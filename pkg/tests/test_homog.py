import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcllt import corpus as cp
from mcllt.chain_core import stationary_law
from mcllt.errors import DegenerateVariance, NotStationary
from mcllt.exact_dist import variance_curve
from mcllt.homog import (
    birkhoff_eigenfunction,
    coboundary_detect,
    green_kubo_sigma2,
    hilbert_distance,
    homogeneous_report,
    max_mean_cycle,
    min_mean_cycle,
    perron_eigenpair,
    periodicity_detect,
)
from oracles import random_kernel

K2 = cp.TWO_STATE_KERNEL
MU2 = np.array([2 / 3, 1 / 3])
F_IND = np.array([[1.0, 1.0], [0.0, 0.0]])


def test_green_kubo_two_state_closed_form():
    # for an indicator on a two-state chain: sigma^2 = pi0 pi1 (1 + lam) / (1 - lam), lam = 0.7
    want = (2 / 9) * 1.7 / 0.3
    assert green_kubo_sigma2(K2, MU2, F_IND) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(1.2592592592592593)


def test_green_kubo_matches_variance_growth():
    e = cp.two_state(2000)
    curve = variance_curve(e.chain, e.functional)
    slope = (curve.V(2000) - curve.V(1000)) / 1000
    assert green_kubo_sigma2(K2, MU2, F_IND) == pytest.approx(slope, rel=1e-9)


def test_not_stationary():
    with pytest.raises(NotStationary):
        green_kubo_sigma2(K2, [0.5, 0.5], F_IND)


@given(st.integers(0, 10_000))
def test_green_kubo_random_chain(seed):
    rng = np.random.default_rng(seed)
    P = random_kernel(rng, 3, 3, floor=0.1)
    mu = stationary_law(P)
    f = rng.normal(size=(3, 3))
    # oracle: fundamental-matrix formula for the pair chain's summand
    A = np.ones((3, 1)) @ mu[None, :]
    Z = np.linalg.inv(np.eye(3) - P + A)
    joint = mu[:, None] * P
    fc = f - (joint * f).sum()
    g = (P * fc).sum(axis=1)
    w = (joint * fc).sum(axis=0)
    oracle = (joint * fc**2).sum() + 2 * w @ (Z @ g - A @ g)
    assert green_kubo_sigma2(P, mu, f) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


def test_coboundary_detected():
    b = np.array([0.0, 2.0, -1.0])
    P = np.array([[0.2, 0.5, 0.3], [0.4, 0.4, 0.2], [0.3, 0.3, 0.4]])
    mu = stationary_law(P)
    f = b[None, :] - b[:, None] + 0.5
    cob = coboundary_detect(P, mu, f)
    assert cob is not None
    assert cob.kappa == pytest.approx(0.5)
    np.testing.assert_allclose(cob.potential[None, :] - cob.potential[:, None] + cob.kappa, f, atol=1e-9)
    assert coboundary_detect(K2, MU2, F_IND) is None


def test_periodicity_detected():
    # f in b(y) - b(x) + 1/3 + 2Z with b = (0, 1/2)
    P = K2
    b = np.array([0.0, 0.5])
    jumps = np.array([[0.0, 2.0], [4.0, -2.0]])
    f = b[None, :] - b[:, None] + 1 / 3 + jumps
    per = periodicity_detect(P, MU2, f)
    assert per is not None
    assert per.step == pytest.approx(2.0)
    coset = f + per.potential[:, None] - per.potential[None, :] + per.kappa
    np.testing.assert_allclose(np.mod(coset + 1e-9, 2.0), 0.0, atol=1e-7)


def test_periodicity_of_indicator():
    per = periodicity_detect(K2, MU2, F_IND)
    assert per.step == pytest.approx(1.0)


def test_periodicity_degenerate():
    with pytest.raises(DegenerateVariance):
        periodicity_detect(K2, MU2, np.zeros((2, 2)))


@given(st.integers(0, 10_000), st.floats(-2, 2))
def test_birkhoff_matches_perron(seed, xi):
    rng = np.random.default_rng(seed)
    P = random_kernel(rng, 3, 3, floor=0.1)
    mu = stationary_law(P)
    f = rng.uniform(-1, 1, size=(3, 3))
    b = birkhoff_eigenfunction(P, mu, f, xi)
    h, p = perron_eigenpair(P, mu, f, xi)
    assert b.p == pytest.approx(p, abs=1e-10)
    np.testing.assert_allclose(b.h, h, atol=1e-10)
    assert mu @ b.h == pytest.approx(1.0)
    assert b.contraction_ok


@given(st.lists(st.floats(0.1, 10), min_size=3, max_size=3), st.floats(0.1, 10))
def test_hilbert_distance_properties(u, c):
    u = np.array(u)
    v = np.array([1.0, 2.0, 3.0])
    assert hilbert_distance(u, u) == pytest.approx(0.0, abs=1e-12)
    assert hilbert_distance(c * u, v) == pytest.approx(hilbert_distance(u, v), abs=1e-9)
    assert hilbert_distance(u, v) == pytest.approx(hilbert_distance(v, u), abs=1e-9)


def _brute_max_mean_cycle(P, f):
    n = P.shape[0]
    best = -np.inf
    for k in range(1, n + 1):
        for cyc in itertools.permutations(range(n), k):
            edges = list(zip(cyc, cyc[1:] + cyc[:1]))
            if all(P[a, b] > 0 for a, b in edges):
                best = max(best, np.mean([f[a, b] for a, b in edges]))
    return best


@given(st.integers(0, 10_000))
def test_karp_matches_cycle_enumeration(seed):
    rng = np.random.default_rng(seed)
    P = random_kernel(rng, 4, 4)
    P[rng.random((4, 4)) < 0.4] = 0.0
    np.fill_diagonal(P, np.where(P.sum(axis=1) == 0, 1.0, np.diag(P)))
    f = rng.integers(-3, 4, size=(4, 4)).astype(float)
    assert max_mean_cycle(P, f) == pytest.approx(_brute_max_mean_cycle(P, f))
    assert min_mean_cycle(P, f) == pytest.approx(-_brute_max_mean_cycle(P, -f))


def test_homogeneous_report_two_state():
    rep = homogeneous_report(K2, MU2, F_IND)
    s2 = (2 / 9) * 1.7 / 0.3
    assert rep.sigma2 == pytest.approx(s2)
    assert rep.s_plus == pytest.approx((1 / 3) / s2)
    assert rep.s_minus == pytest.approx((-2 / 3) / s2)
    assert rep.coboundary is None
    assert rep.periodicity.step == pytest.approx(1.0)
    assert set(rep.to_dict()) == {"sigma2", "s_minus", "s_plus", "coboundary", "periodicity"}
