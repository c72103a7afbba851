"""Quantitative checks run by ``mcllt report`` on the bundled corpus.

Each check returns a :class:`CheckResult` carrying the measured value, the
tolerance it was judged against and a short description.  The checks use
exact dynamic programs as their reference; none of them samples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import corpus as cp
from .chain_core import Functional, validate_chain
from .exact_dist import (
    clt_distance,
    exact_sn_distribution,
    llt_lattice_check,
    moments,
    round_to_lattice,
    universal_bound_check,
    variance_curve,
)
from .hexagons import structure_constants
from .homog import birkhoff_eigenfunction, green_kubo_sigma2, max_mean_cycle, perron_eigenpair
from .large_dev import (
    RateFunction,
    change_of_measure_identity_check,
    edge_rate,
    ld_llt_evaluate,
    ld_threshold_estimate,
    log_mgf_profile,
    richardson_derivatives,
)
from .mcre import quenched_llt_check, quenched_variance_growth
from .nagaev import char_fn, fourier_inversion_point_prob, operator_decay_check
from .reduction import gradient_decomposition


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    value: float
    tolerance: str
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: value={self.value:.6g} tol={self.tolerance} ({self.detail})"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "value": self.value,
                "tolerance": self.tolerance, "detail": self.detail, "seconds": round(self.seconds, 3)}


LATTICE_NAMES = ["srw", "lazy", "varying_iid", "chain_d", "two_state", "gradient", "core_drop", "mcre"]
GROWING_NAMES = ["srw", "lazy", "varying_iid", "chain_d", "two_state", "perturbed_lazy", "core_drop", "mcre"]
INDEPENDENT_NAMES = ["srw", "lazy", "varying_iid", "summable", "perturbed_lazy", "core_drop"]


def _lattice_dist(entry, h=1e-3):
    f = entry.functional if entry.lattice else round_to_lattice(entry.functional, h)[0]
    return exact_sn_distribution(entry.chain, f)


def check_change_of_measure(seed: int = 0, count: int = 50, N: int = 40) -> CheckResult:
    rng = np.random.default_rng(seed)
    entries = cp.corpus(N, LATTICE_NAMES)
    worst = 0.0
    for _ in range(count):
        e = entries[int(rng.integers(len(entries)))]
        xi = float(rng.uniform(-1.5, 1.5))
        x = int(rng.choice(np.flatnonzero(e.chain.initial > 0)))
        dist = exact_sn_distribution(e.chain, e.functional, from_state=x)
        vals, probs = dist.law()
        live = vals[probs > 1e-12]
        z = float(rng.choice(live))
        k = float(live[np.argmin(np.abs(live - z - e.functional.lattice * rng.integers(-2, 3)))] - z)
        res = change_of_measure_identity_check(e.chain, None, e.functional, xi, z, k, x).residual
        worst = max(worst, res)
    return CheckResult(1, "change-of-measure identity", worst < 1e-9, worst, "<1e-9 rel", f"{count} tuples")


def check_fourier_inversion(N: int = 60) -> CheckResult:
    worst = 0.0
    for e in cp.corpus(N, LATTICE_NAMES):
        dist = exact_sn_distribution(e.chain, e.functional)
        vals, probs = dist.law()
        for z in vals[np.argsort(probs)[-3:]]:
            got = fourier_inversion_point_prob(e.chain, None, e.functional, float(z))
            worst = max(worst, abs(got - dist.point_mass(float(z))))
    return CheckResult(2, "Fourier inversion vs DP", worst < 1e-6, worst, "<1e-6 abs", "lattice corpus, N=60")


def check_char_fn(N: int = 100) -> CheckResult:
    worst = 0.0
    xis = np.linspace(-3.0, 3.0, 32)
    for e in cp.corpus(N, LATTICE_NAMES):
        vals, probs = exact_sn_distribution(e.chain, e.functional).law()
        oracle = (probs[None, :] * np.exp(1j * xis[:, None] * vals[None, :])).sum(axis=1)
        got = char_fn(e.chain, None, e.functional, xis)
        worst = max(worst, float(np.abs(got - oracle).max()))
    return CheckResult(3, "char_fn vs DP transform", worst < 1e-9, worst, "<1e-9 abs", "32 frequencies per chain")


def check_gradient_bound(N: int = 100) -> CheckResult:
    worst = -np.inf
    for e in cp.corpus(N):
        m = validate_chain(e.chain)
        st = structure_constants(e.chain, m, e.functional)
        norms = gradient_decomposition(e.chain, m, e.functional).residual_norms(e.chain, m)[2:]
        worst = max(worst, float((norms - st.u).max()))
    return CheckResult(4, "gradient lemma bound", worst <= 1e-9, worst, "max(|ftilde|-u)<=1e-9", "all corpus chains")


def check_variance_sandwich(Nmax: int = 500) -> CheckResult:
    worst = 0.0
    for e in cp.corpus(Nmax, GROWING_NAMES):
        st = structure_constants(e.chain, None, e.functional)
        curve = variance_curve(e.chain, e.functional)
        for N in (50, 100, 200, 500):
            U, V = st.U_upto(N), curve.V(N)
            worst = max(worst, V / U, U / V)
    return CheckResult(5, "variance sandwich", worst <= 10, worst, "max ratio<=10", "N in {50,100,200,500}")


def check_iid_identity(N: int = 60) -> CheckResult:
    worst = 0.0
    for e in cp.corpus(N, INDEPENDENT_NAMES):
        m = validate_chain(e.chain)
        st = structure_constants(e.chain, m, e.functional)
        var = []
        for n in range(1, N + 1):
            v = e.functional.f(n)[:, 0]
            mean = (m[n] * v).sum()
            var.append((m[n] * (v - mean) ** 2).sum())
        var = np.array(var)
        target = 2 * (var[1:N - 1] + var[2:N])
        worst = max(worst, float(np.abs(st.u**2 - target).max()))
    return CheckResult(6, "iid structure constants", worst < 1e-10, worst, "<1e-10 abs", "independent corpus chains")


def check_lattice_llt() -> CheckResult:
    t0 = time.perf_counter()
    e = cp.srw(200)
    r = llt_lattice_check(exact_sn_distribution(e.chain, e.functional), 0.0).ratio
    dt = time.perf_counter() - t0
    return CheckResult(7, "lattice LLT (srw, N=200)", 0.95 <= r <= 1.05 and dt < 5, r, "[0.95,1.05], <5 s",
                       f"{dt:.2f} s")


def check_moderate_deviation() -> CheckResult:
    e = cp.lazy(400)
    rate = RateFunction(e.chain, None, e.functional)
    z = float(np.round(rate.mean + rate.VN**0.6))
    r = ld_llt_evaluate(rate, z).ratio
    return CheckResult(8, "moderate-deviation LLT (lazy, N=400)", 0.9 <= r <= 1.1, r, "[0.9,1.1]", f"z={z:g}")


def check_edge() -> CheckResult:
    N = 100
    e = cp.lazy(N)
    got = edge_rate(e.chain, e.functional, N - 1)
    err = abs(got + 1.5 * np.log(3))
    empty = edge_rate(e.chain, e.functional, N) == -np.inf
    return CheckResult(9, "edge exactness (lazy)", err < 1e-12 and empty, err, "<1e-12, empty at z=N",
                       f"rate={got:.15f}")


def check_thresholds(N: int = 1000) -> CheckResult:
    e = cp.srw(N)
    th = ld_threshold_estimate(e.chain, None, e.functional)
    srw_err = max(abs(th.c_minus + 1), abs(th.c_plus - 1))
    d = cp.core_drop(N)
    td = ld_threshold_estimate(d.chain, None, d.functional)
    up = abs(td.c_plus - 12) / 12
    low = abs(td.c_minus) / 12
    ok = srw_err <= 0.02 and up <= 0.1 and low <= 0.1
    return CheckResult(10, "thresholds", ok, max(srw_err, up, low), "srw 2%, core-drop 10%",
                       f"srw=({th.c_minus:.4f},{th.c_plus:.4f}) core=({td.c_minus:.3f},{td.c_plus:.3f})")


def check_logmgf(N: int = 100) -> CheckResult:
    worst, ok = 0.0, True
    for e in cp.corpus(N):
        prof = log_mgf_profile(e.chain, None, e.functional, np.linspace(-5, 5, 21))
        ok &= bool(np.all(prof.F2 > 0)) and abs(prof.F[10]) < 1e-12
        worst = max(worst, abs(prof.F2[10] - 1))
    return CheckResult(11, "log-MGF normalization", ok and worst < 1e-8, worst, "|F''(0)-1|<1e-8, F''>0",
                       "all corpus chains on [-5,5]")


def check_richardson(N: int = 100) -> CheckResult:
    worst = 0.0
    for e in cp.corpus(N, ["chain_d", "lazy", "perturbed_lazy", "two_state"]):
        rate = RateFunction(e.chain, None, e.functional)
        for xi in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
            fd1, fd2 = richardson_derivatives(rate, xi)
            d = rate.data(xi)
            worst = max(worst, abs(fd1 - d.d1) / abs(d.d1), abs(fd2 - d.d2) / abs(d.d2))
    return CheckResult(12, "derivatives vs finite differences", worst < 1e-6, worst, "<1e-6 rel", "6 tilts")


def check_operator_decay(N: int = 60) -> CheckResult:
    viol = 0
    for e in cp.corpus(N):
        xis = np.linspace(0.1, 2 * np.pi, 16)
        viol += operator_decay_check(e.chain, None, e.functional, xis).violations
    return CheckResult(13, "five-step operator decay", viol == 0, float(viol), "0 violations", "all corpus chains")


def check_clt() -> CheckResult:
    worst, mono = 0.0, True
    for name in GROWING_NAMES:
        ds = [clt_distance(_lattice_dist(cp.BUILDERS[name](N))) for N in (64, 128, 256)]
        mono &= ds[0] >= ds[1] >= ds[2]
        worst = max(worst, ds[2])
    return CheckResult(14, "CLT Kolmogorov distance", worst < 0.05 and mono, worst, "<0.05, monotone",
                       "N in {64,128,256}")


def check_moments(N: int = 200) -> CheckResult:
    vals = [moments(_lattice_dist(cp.BUILDERS[name](N)), 4).standardized(4) for name in GROWING_NAMES]
    ok = all(2.5 <= v <= 3.5 for v in vals)
    return CheckResult(15, "fourth moment", ok, float(max(abs(v - 3) for v in vals)), "[2.5,3.5]",
                       f"range [{min(vals):.3f},{max(vals):.3f}]")


def check_universal_bounds(N: int = 400) -> CheckResult:
    worst, ok = 0.0, True
    for name in GROWING_NAMES:
        e = cp.BUILDERS[name](N)
        dist = _lattice_dist(e)
        mean = moments(dist, 2).mean
        delta = e.graininess
        for extra in (0.15, 1.0, 4.0):
            L = 2 * delta + extra
            for shift in (-0.37, 0.0, 0.41):
                rep = universal_bound_check(dist, (shift - L / 2, shift + L / 2), mean, delta)
                ok &= bool(rep.crude_ok)
                worst = max(worst, rep.ratio, 1 / rep.ratio)
    return CheckResult(16, "universal bounds", ok, worst, "[1/3,3]", "9 intervals per chain")


def check_homogeneous(N: int = 1000) -> CheckResult:
    e = cp.two_state(N)
    K, mu = cp.TWO_STATE_KERNEL, cp.two_state_stationary()
    f = np.array([[1.0, 1.0], [0.0, 0.0]]) - mu[0]
    s2 = green_kubo_sigma2(K, mu, f)
    curve = variance_curve(e.chain, e.functional)
    slope = curve.V(N) / N
    gk = abs(s2 - slope) / slope
    bk = 0.0
    for xi in (-1.0, 0.5, 2.0):
        b = birkhoff_eigenfunction(K, mu, f, xi)
        h, p = perron_eigenpair(K, mu, f, xi)
        bk = max(bk, abs(b.p - p), float(np.abs(b.h - h).max()))
    centred = Functional(tuple([f] * N))
    th = ld_threshold_estimate(e.chain, None, centred)
    splus = max_mean_cycle(K, f) / s2
    cp_err = abs(th.c_plus - splus) / abs(splus)
    ok = gk <= 0.01 and bk <= 1e-10 and cp_err <= 0.02
    return CheckResult(17, "homogeneous consistency", ok, max(gk, cp_err), "GK 1%, Birkhoff 1e-10, c+ 2%",
                       f"GK={gk:.2e} Birkhoff={bk:.1e} c+={th.c_plus:.4f} s+={splus:.4f}")


def check_mcre() -> CheckResult:
    fam, noise = cp.mcre_family(), cp.mcre_noise()
    vg = quenched_variance_growth(noise, fam, [512], trials=32, seed=0)
    spread = float(vg.spread()[0])
    llt = quenched_llt_check(noise, fam, 400, trials=16, seed=1)
    med = llt.median_ratio
    ok = spread < 0.1 and abs(med - 1) <= 0.1
    return CheckResult(18, "random environment", ok, max(spread, abs(med - 1)), "spread<10%, median 10%",
                       f"spread={spread:.3f} median={med:.4f}")


CHECKS = [
    check_change_of_measure, check_fourier_inversion, check_char_fn, check_gradient_bound,
    check_variance_sandwich, check_iid_identity, check_lattice_llt, check_moderate_deviation, check_edge,
    check_thresholds, check_logmgf, check_richardson, check_operator_decay, check_clt, check_moments,
    check_universal_bounds, check_homogeneous, check_mcre,
]


def run_all(only=None, progress=None) -> list:
    """Run every check (or the numbers in ``only``) and time them."""
    out = []
    for k, fn in enumerate(CHECKS, start=1):
        if only and k not in only:
            continue
        t0 = time.perf_counter()
        res = fn()
        res = CheckResult(res.number, res.name, res.passed, res.value, res.tolerance, res.detail,
                          time.perf_counter() - t0)
        if progress is not None:
            progress(res)
        out.append(res)
    return out
