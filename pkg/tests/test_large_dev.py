import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import small_chains
from mcllt import corpus as cp
from mcllt.chain_core import Functional, ellipticity_constant, validate_chain
from mcllt.errors import DegenerateVariance, NotReachable, OutOfDomain, ValidationError
from mcllt.large_dev import (
    RateFunction,
    admissibility_test,
    change_of_measure_identity_check,
    edge_rate,
    eigen_identity_residual,
    eigen_relation_residual,
    eigendata,
    ld_llt_evaluate,
    ld_threshold_estimate,
    legendre,
    log_mgf_profile,
    richardson_derivatives,
    solve_tilt,
    tilted_chain,
)
from oracles import lazy_point_mass, path_law


@given(small_chains(), st.floats(-3, 3))
def test_eigen_relations(cf, xi):
    chain, fun = cf
    data = eigendata(chain, None, fun, xi)
    assert eigen_relation_residual(chain, fun, data) < 1e-10
    assert eigen_identity_residual(chain, fun, data) < 1e-9
    m = validate_chain(chain)
    for n in range(1, chain.horizon + 2):
        assert m[n] @ data.h(n) == pytest.approx(1.0, rel=1e-10)


@given(small_chains(), st.floats(-3, 3))
def test_tilted_chain_is_stochastic_and_elliptic(cf, xi):
    chain, fun = cf
    t = tilted_chain(chain, None, fun, xi)
    for k in t.kernels:
        np.testing.assert_allclose(k.sum(axis=1), 1.0, atol=1e-10)
    assert ellipticity_constant(t, validate_chain(t)).epsilon0 > 0


@given(small_chains(max_N=4), st.floats(-2, 2))
def test_tilted_path_law_is_exponential_tilt(cf, xi):
    # P~(S = s) = exp(xi s) P(S = s) / E exp(xi S) with the tilted start mu_1 h_1
    chain, fun = cf
    t = tilted_chain(chain, None, fun, xi)
    law = path_law(list(chain.kernels), chain.initial, list(fun.values))
    tlaw = path_law(list(t.kernels), t.initial, list(fun.values))
    Z = sum(p * np.exp(xi * s) for s, p in law.items())
    for s, p in law.items():
        assert tlaw[s] == pytest.approx(p * np.exp(xi * s) / Z, rel=1e-9)


def test_tilt_zero_is_identity():
    e = cp.chain_d(10)
    t = tilted_chain(e.chain, None, e.functional, 0.0)
    for a, b in zip(t.kernels, e.chain.kernels):
        np.testing.assert_allclose(a, b, atol=1e-14)


def test_tilted_start_options():
    e = cp.chain_d(5)
    t = tilted_chain(e.chain, None, e.functional, 0.4, start="original")
    np.testing.assert_allclose(t.initial, e.chain.initial)
    with pytest.raises(ValidationError):
        tilted_chain(e.chain, None, e.functional, 0.4, start="bogus")


@given(st.floats(-4, 4))
def test_srw_closed_forms(xi):
    # F = log cosh, F' = tanh, F'' = sech^2 with V_N = N
    rate = RateFunction(cp.srw(30).chain, None, cp.srw(30).functional)
    assert rate.VN == pytest.approx(30.0)
    assert rate.F(xi) == pytest.approx(np.log(np.cosh(xi)), abs=1e-12)
    assert rate.F1(xi) == pytest.approx(np.tanh(xi), abs=1e-12)
    assert rate.F2(xi) == pytest.approx(1 / np.cosh(xi) ** 2, abs=1e-12)


def test_srw_legendre_value():
    # I(1/2) = (1/2) artanh(1/2) - log cosh(artanh(1/2))
    rate = RateFunction(cp.srw(30).chain, None, cp.srw(30).functional)
    I, xi = legendre(rate, 0.5)
    assert xi == pytest.approx(np.arctanh(0.5), abs=1e-9)
    assert I == pytest.approx(0.5 * np.arctanh(0.5) - np.log(np.cosh(np.arctanh(0.5))), abs=1e-12)
    assert I == pytest.approx(0.130812035941137, abs=1e-12)


@given(st.floats(-0.9, 0.9))
def test_legendre_round_trip(eta):
    rate = RateFunction(cp.chain_d(40).chain, None, cp.chain_d(40).functional)
    lo, hi = rate.safe_window
    eta = lo + (hi - lo) * (eta + 1) / 2 * 0.98 + 0.01 * (hi - lo)
    _, xi = rate.legendre(eta)
    assert rate.F1(xi) == pytest.approx(eta, abs=1e-8)


def test_legendre_is_convex_and_zero_at_mean():
    e = cp.lazy(50)
    rate = RateFunction(e.chain, None, e.functional)
    etas = np.linspace(-1.2, 1.2, 13)
    vals = np.array([rate.legendre(x)[0] for x in etas])
    assert np.all(np.diff(vals, 2) > 0)
    assert rate.legendre(0.0)[0] == pytest.approx(0.0, abs=1e-14)


def test_out_of_domain():
    e = cp.lazy(50)
    rate = RateFunction(e.chain, None, e.functional)
    # the lazy walk has V_N = 2N/3, so S_N / V_N lives in [-3/2, 3/2]
    assert rate.domain == pytest.approx((-1.5, 1.5))
    with pytest.raises(OutOfDomain):
        rate.solve(rate.domain[1])
    with pytest.raises(OutOfDomain):
        rate.solve(1.6)


def test_not_reachable_near_edge():
    e = cp.lazy(50)
    rate = RateFunction(e.chain, None, e.functional, R_max=5.0)
    with pytest.raises(NotReachable):
        solve_tilt(rate, 1.49 * rate.VN)
    assert solve_tilt(rate, rate.mean).xi == 0.0


def test_degenerate_variance():
    e = cp.gradient(6)
    c = Functional.constant(e.chain, 1.0, lattice=1.0)
    with pytest.raises(DegenerateVariance):
        RateFunction(e.chain, None, c)


@pytest.mark.parametrize("name", ["chain_d", "two_state", "perturbed_lazy", "mcre"])
def test_log_mgf_normalisation(name):
    e = cp.BUILDERS[name](60)
    prof = log_mgf_profile(e.chain, None, e.functional, np.linspace(-4, 4, 9))
    assert prof.F[4] == pytest.approx(0.0, abs=1e-12)
    assert prof.F1[4] == pytest.approx(variance_mean(e) / prof.VN, abs=1e-10)
    assert prof.F2[4] == pytest.approx(1.0, abs=1e-8)
    assert np.all(prof.F2 > 0)


def variance_mean(entry):
    from mcllt.exact_dist import variance_curve

    return variance_curve(entry.chain, entry.functional).E(entry.chain.horizon)


@pytest.mark.parametrize("xi", [-1.5, 0.3, 2.0])
def test_richardson_agrees(xi):
    rate = RateFunction(cp.chain_d(50).chain, None, cp.chain_d(50).functional)
    d1, d2 = richardson_derivatives(rate, xi)
    data = rate.data(xi)
    assert d1 == pytest.approx(data.d1, rel=1e-6)
    assert d2 == pytest.approx(data.d2, rel=1e-6)


@given(small_chains(), st.floats(-2, 2), st.integers(0, 1))
def test_change_of_measure(cf, xi, x):
    chain, fun = cf
    law = path_law(list(chain.kernels), chain.initial, list(fun.values), start=x)
    s = max(law, key=law.get)
    chk = change_of_measure_identity_check(chain, None, fun, xi, s, 0.0, x)
    assert chk.lhs == pytest.approx(law[s], rel=1e-10)
    assert chk.residual < 1e-9


def test_ld_llt_lazy_deep_tilt():
    # z = 1.2 V_N sits well inside the large-deviation regime
    e = cp.lazy(400)
    rate = RateFunction(e.chain, None, e.functional)
    z = float(np.round(1.2 * rate.VN))
    res = ld_llt_evaluate(rate, z)
    assert res.exact == pytest.approx(lazy_point_mass(400, z), rel=1e-10)
    assert 0.85 <= res.ratio <= 1.15


def test_ld_llt_interval_form():
    e = cp.chain_d(200)
    rate = RateFunction(e.chain, None, e.functional)
    z = float(np.round(rate.mean + 0.5 * rate.VN))
    res = ld_llt_evaluate(rate, z, interval=(-0.5, 2.5))
    assert 0.9 <= res.ratio <= 1.1


def test_ld_llt_needs_lattice():
    e = cp.perturbed_lazy(20)
    with pytest.raises(ValidationError):
        ld_llt_evaluate(RateFunction(e.chain, None, e.functional), 1.0)


def test_edge_rate_lazy():
    e = cp.lazy(60)
    V = 40.0
    assert edge_rate(e.chain, e.functional, 59) == pytest.approx(-60 * np.log(3) / V, abs=1e-12)
    assert edge_rate(e.chain, e.functional, 60) == -np.inf


def test_thresholds_srw():
    e = cp.srw(400)
    th = ld_threshold_estimate(e.chain, None, e.functional)
    assert th.c_minus == pytest.approx(-1.0, abs=0.02)
    assert th.c_plus == pytest.approx(1.0, abs=0.02)
    assert th.support_edges == pytest.approx((-1.0, 1.0))


def test_admissibility():
    e = cp.srw(200)
    ok = admissibility_test(e.chain, e.functional, {100: 20.0, 200: 40.0})
    assert ok.admissible and all(ok.reachable)
    bad = admissibility_test(e.chain, e.functional, lambda N: float(N))
    assert not bad.admissible
