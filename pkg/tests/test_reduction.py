import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import small_chains
from mcllt import corpus as cp
from mcllt.chain_core import Functional, validate_chain
from mcllt.errors import NotIntegerValued, NotSummable
from mcllt.exact_dist import variance_curve
from mcllt.hexagons import structure_constants
from mcllt.reduction import (
    Group,
    algebraic_range,
    center_tight_verdict,
    circular_mean,
    circular_variance,
    classify_range,
    gradient_decomposition,
    integer_reduction,
    summable_variance_convergence_check,
)


@given(small_chains(min_N=3, max_N=6, integer=False))
def test_gradient_decomposition_reconstructs(cf):
    chain, fun = cf
    m = validate_chain(chain)
    dec = gradient_decomposition(chain, m, fun)
    for n in range(1, chain.horizon + 1):
        rebuilt = dec.ftilde(n) + dec.a(n + 1)[None, :] - dec.a(n)[:, None] + dec.c(n)
        np.testing.assert_allclose(rebuilt, fun.f(n), atol=1e-12)


@given(small_chains(min_N=3, max_N=6, integer=False))
def test_gradient_residual_bounded_by_u(cf):
    chain, fun = cf
    m = validate_chain(chain)
    st_ = structure_constants(chain, m, fun)
    norms = gradient_decomposition(chain, m, fun).residual_norms(chain, m)[2:]
    assert np.all(norms <= st_.u + 1e-9)


def test_gradient_recovers_potential():
    # f = b(y) - b(x) is exactly absorbed: residual zero, potential = b up to a constant
    e = cp.gradient(6)
    m = validate_chain(e.chain)
    dec = gradient_decomposition(e.chain, m, e.functional)
    for n in range(3, 7):
        np.testing.assert_allclose(dec.ftilde(n), 0.0, atol=1e-12)
        diff = dec.a(n) - np.array([0.0, 2.0])
        assert np.ptp(diff) < 1e-12


@given(small_chains(min_N=3, max_N=6))
def test_integer_reduction_identity(cf):
    chain, fun = cf
    m = validate_chain(chain)
    st_ = structure_constants(chain, m, fun)
    red = integer_reduction(chain, m, fun, st_)
    for n in range(1, chain.horizon + 1):
        g = red.remainder[n - 1]
        assert np.all(g == np.rint(g))
        rebuilt = g + red.potentials[n][None, :] - red.potentials[n - 1][:, None] + red.constants[n - 1]
        np.testing.assert_array_equal(rebuilt, np.rint(fun.f(n)))
    assert red.within_bound


def test_integer_reduction_rejects_reals():
    e = cp.perturbed_lazy(5)
    with pytest.raises(NotIntegerValued):
        integer_reduction(e.chain, None, e.functional)


def test_integer_reduction_gradient_vanishes():
    e = cp.gradient(8)
    red = integer_reduction(e.chain, None, e.functional)
    assert red.total == 0.0


EXPECTED = {
    "srw": ("lattice", 2.0),
    "lazy": ("lattice", 1.0),
    "varying_iid": ("lattice", 1.0),
    "chain_d": ("lattice", 1.0),
    "two_state": ("lattice", 1.0),
    "gradient": ("zero", None),
    "summable": ("zero", None),
    "perturbed_lazy": ("R", None),
    "core_drop": ("lattice", 0.5),
    "mcre": ("lattice", 1.0),
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_classify_corpus(name):
    e = cp.BUILDERS[name](100)
    stats = structure_constants(e.chain, None, e.functional)
    rep = classify_range(stats, e.functional, e.chain)
    kind, step = EXPECTED[name]
    assert rep.essential.kind == kind
    if step is not None:
        assert rep.essential.step == pytest.approx(step)
    assert rep.graininess == pytest.approx(e.graininess) if np.isfinite(e.graininess) else np.isinf(rep.graininess)
    assert rep.algebraic.contains(rep.essential)


def test_algebraic_range_chain_d():
    e = cp.chain_d(5)
    group, consts = algebraic_range(e.chain, None, e.functional)
    assert group == Group("lattice", 1.0)
    # the algebraic range of a lattice with non-integer offsets keeps the step
    sh = Functional(tuple(v + 0.25 for v in e.functional.values))
    g2, c2 = algebraic_range(e.chain, None, sh)
    assert g2.step == pytest.approx(1.0)
    np.testing.assert_allclose(c2, 0.25)


def test_group_containment():
    assert Group("R").contains(Group("lattice", 0.3))
    assert Group("lattice", 1.0).contains(Group("lattice", 3.0))
    assert not Group("lattice", 2.0).contains(Group("lattice", 3.0))
    assert Group("lattice", 2.0).contains(Group("zero"))
    assert not Group("zero").contains(Group("lattice", 1.0))
    assert str(Group("lattice", 2.0)) == "2Z"


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8))
def test_circular_mean_minimises(angles):
    theta = circular_mean(angles)
    loss = lambda t: np.mean(np.abs(np.exp(1j * (np.array(angles) - t)) - 1) ** 2)  # noqa: E731
    grid = np.linspace(-np.pi, np.pi, 721)
    assert loss(theta) <= min(loss(t) for t in grid) + 1e-9
    assert circular_variance(angles) == pytest.approx(loss(theta), abs=1e-12)


def test_center_tight_verdicts():
    for name, bounded in (("gradient", True), ("summable", True), ("lazy", False), ("chain_d", False)):
        e = cp.BUILDERS[name](200)
        v = center_tight_verdict(structure_constants(e.chain, None, e.functional), variance_curve(e.chain, e.functional))
        assert v.bounded is bounded
        assert v.verdict == ("bounded" if bounded else "growing")


def test_summable_convergence():
    e = cp.summable(60)
    assert summable_variance_convergence_check(e.chain, e.functional, samples=200, seed=3).passed
    with pytest.raises(NotSummable):
        summable_variance_convergence_check(cp.lazy(60).chain, cp.lazy(60).functional)
