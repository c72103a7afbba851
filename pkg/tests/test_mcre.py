import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcllt import corpus as cp
from mcllt.chain_core import validate_chain
from mcllt.errors import NonUniformlyElliptic, ValidationError
from mcllt.hexagons import balance_law, structure_constants
from mcllt.mcre import (
    Family,
    NoiseProcess,
    noise_draws,
    quench,
    quenched_llt_check,
    quenched_structure_fn,
    quenched_variance_growth,
    window_table,
)

FAM = cp.mcre_family()
NOISE = cp.mcre_noise()


@given(st.integers(0, 2**31 - 1))
def test_replay_and_prefix_consistency(seed):
    a = NOISE.realization(seed)
    b = NOISE.realization(seed)
    np.testing.assert_array_equal(a.indices(30), b.indices(30))
    np.testing.assert_array_equal(a.indices(30)[:10], a.indices(10))


@given(st.integers(0, 2**31 - 1), st.integers(0, 7))
def test_shift_covariance(seed, k):
    omega = NOISE.realization(seed)
    long = quench(NOISE, FAM, 20 + k, omega)
    short = quench(NOISE, FAM, 20, omega.shift(k))
    assert short.symbols == long.symbols[k:]
    for n in range(1, 21):
        np.testing.assert_array_equal(short.chain.kernel(n), long.chain.kernel(n + k))


def test_quench_uses_shifted_symbols():
    omega = NOISE.realization(5)
    q = quench(NOISE, FAM, 10, omega)
    assert list(q.symbols) == omega.symbols(11)[1:]
    np.testing.assert_allclose(q.chain.initial, [0.5, 0.5])


def test_rotation_orbit():
    noise = NoiseProcess("rotation", ("A", "B"), alpha=2 * np.pi * (np.sqrt(5) - 1) / 2, arcs=[0.4], irrational=True)
    pts = np.mod(0.1 + np.arange(50) * (np.sqrt(5) - 1) / 2, 1.0)
    np.testing.assert_array_equal(noise.rotation_orbit(0.1, 50), (pts >= 0.4).astype(int))
    omega = noise.realization(point=0.1)
    np.testing.assert_array_equal(omega.shift(3).indices(10), omega.indices(13)[3:])


def test_markov_noise_frequencies():
    noise = NoiseProcess("markov", ("A", "B"), matrix=[[0.9, 0.1], [0.3, 0.7]])
    idx = noise.realization(1).indices(20000)
    assert np.mean(idx == 0) == pytest.approx(0.75, abs=0.03)
    assert idx.max() <= 1


def test_degenerate_noise_gives_homogeneous_chain():
    noise = NoiseProcess("bernoulli", ("A", "B"), weights=[1.0, 0.0])
    q = quench(noise, FAM, 15, noise.realization(2))
    assert set(q.symbols) == {"A"}


def test_family_validation():
    with pytest.raises(NonUniformlyElliptic):
        Family({"A": np.eye(2)}, {"A": np.zeros((2, 2))})
    with pytest.raises(ValidationError):
        Family({"A": np.eye(2)}, {"B": np.zeros((2, 2))})
    with pytest.raises(ValidationError):
        NoiseProcess("bernoulli", ("A", "B"), weights=[0.5, 0.6])
    with pytest.raises(ValidationError):
        NoiseProcess("levy", ("A",))


@given(st.integers(0, 2**31 - 1))
def test_window_matches_quenched_position(seed):
    q = quench(NOISE, FAM, 8, NOISE.realization(seed))
    m = validate_chain(q.chain)
    for n in (3, 6):
        window = q.symbols[n - 3:n]
        wc = quenched_structure_fn(FAM, window, xis=[0.7], marginal=m[n - 2])
        law = balance_law(q.chain, m, q.functional, n)
        assert wc.u == pytest.approx(law.u(), rel=1e-12)
        assert wc.d[0] == pytest.approx(float(np.ravel(law.d(0.7))[0]), rel=1e-12)


def test_window_table_covers_alphabet():
    tab = window_table(FAM, xis=[1.0])
    assert len(tab) == 8
    assert all(w.u > 0 for w in tab.values())


def test_gradient_family_has_bounded_structure():
    b = np.array([0.0, 1.0])
    grad = b[None, :] - b[:, None]
    fam = Family({"A": FAM.kernels["A"], "B": FAM.kernels["B"]}, {"A": grad, "B": grad}, lattice=1.0)
    q = quench(NOISE, fam, 30, NOISE.realization(0))
    st_ = structure_constants(q.chain, None, q.functional)
    assert st_.UN < 1e-20


def test_noise_draws_deterministic():
    a = [o.seed for o in noise_draws(NOISE, 5, 9)]
    b = [o.seed for o in noise_draws(NOISE, 5, 9)]
    assert a == b and len(set(a)) == 5


def test_variance_growth_small():
    rep = quenched_variance_growth(NOISE, FAM, [64, 128], trials=6, seed=0)
    assert rep.variances.shape == (6, 2)
    assert np.all(rep.spread() >= 0)
    assert rep.slope() > 0


def test_llt_check_small():
    rep = quenched_llt_check(NOISE, FAM, 120, trials=4, seed=2)
    assert rep.ratios.size + len(rep.skipped) == 4
    assert 0.8 < rep.median_ratio < 1.2
