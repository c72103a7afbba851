"""Exponential tilting, rate functions and large-deviation local limits.

For a tilt ``xi`` the finite-horizon eigen-data are built backwards from
``h_{N+1} = 1``::

    hhat_n(x) = sum_y pi_n(x, y) exp(xi f_n(x, y)) h_{n+1}(y)
    p_n       = log (mu_n . hhat_n),     h_n = hhat_n exp(-p_n)

so that ``mu_n . h_n = 1`` and ``P_N = p_1 + ... + p_N = log E exp(xi S_N)``.
The tilted kernels

    pit_n(x, y) = pi_n(x, y) exp(xi f_n(x, y)) h_{n+1}(y) / (exp(p_n) h_n(x))

together with the initial law ``mu_1 h_1`` describe the path measure
``exp(xi S_N) dP / E exp(xi S_N)``; the derivatives of ``P_N`` are therefore
the exact mean and variance of ``S_N`` under the tilted chain.  All
arithmetic is done in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .chain_core import Chain, Functional, MarginalSet, ellipticity_constant, validate_chain
from .errors import (
    DegenerateVariance,
    InvariantBreach,
    NotReachable,
    OutOfDomain,
    ValidationError,
)
from .exact_dist import exact_sn_distribution, extremal_path_sums, variance_curve

#: default largest tilt treated as bounded
R_MAX = 20.0
#: Newton safeguards
NEWTON_MAX_ITER = 100
NEWTON_DERIV_FLOOR = 1e-14
LEGENDRE_TOL = 1e-10


def _log_kernel(P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(P)


@dataclass(frozen=True)
class EigenData:
    """Tilted eigen-data at one tilt ``xi``.

    Attributes
    ----------
    xi : float
    log_h : tuple of ndarray
        ``log h_n`` for ``n = 1..N+1`` (``log h_{N+1} = 0``).
    p : ndarray
        ``p_n(xi)`` for ``n = 1..N``.
    PN : float
        ``log E exp(xi S_N)``, including the normalization shift.
    d1, d2 : float
        First and second derivatives of ``PN`` in ``xi``.
    VN : float
        ``Var S_N`` of the untilted chain.
    shift : float
        Coefficient ``E S_N - d1(0)`` of the post-shift ``PN += shift * xi``.
    """

    xi: float
    log_h: tuple
    p: np.ndarray
    PN: float
    d1: float
    d2: float
    VN: float
    shift: float = 0.0
    tilted: Chain | None = field(default=None, repr=False, compare=False)

    def h(self, n: int) -> np.ndarray:
        return np.exp(self.log_h[n - 1])

    @property
    def logmgf(self) -> float:
        """``F_N(xi) = PN / V_N``."""
        return self.PN / self.VN

    @property
    def F1(self) -> float:
        return self.d1 / self.VN

    @property
    def F2(self) -> float:
        return self.d2 / self.VN

    def h_bound(self) -> float:
        """Smallest ``C`` with ``1/C <= h_n <= C`` on positive-mass states."""
        m = max(float(np.abs(lh[np.isfinite(lh)]).max()) for lh in self.log_h)
        return float(np.exp(m))


def _backward_tilt(chain: Chain, marginals: MarginalSet, functional: Functional, xi: float):
    N = chain.horizon
    log_h = [None] * (N + 1)
    log_h[N] = np.zeros(chain.size(N + 1))
    p = np.empty(N)
    for n in range(N, 0, -1):
        w = _log_kernel(chain.kernel(n)) + xi * functional.f(n) + log_h[n][None, :]
        lhat = logsumexp(w, axis=1)
        with np.errstate(divide="ignore"):
            lmu = np.log(marginals[n])
        live = np.isfinite(lmu)
        p[n - 1] = float(logsumexp(lmu[live] + lhat[live]))
        log_h[n - 1] = lhat - p[n - 1]
    return log_h, p


def _tilted_kernels(chain: Chain, functional: Functional, xi: float, log_h, p):
    kernels = []
    for n in range(1, chain.horizon + 1):
        w = _log_kernel(chain.kernel(n)) + xi * functional.f(n) + log_h[n][None, :] - p[n - 1] - log_h[n - 1][:, None]
        k = np.exp(w)
        kernels.append(k / k.sum(axis=1, keepdims=True))
    return kernels


def eigendata(chain: Chain, marginals: MarginalSet | None, functional: Functional, xi: float,
              R_max: float | None = R_MAX, shift: float | None = None) -> EigenData:
    """Eigen-data ``(h_n, p_n)`` and the derivatives of ``P_N`` at ``xi``.

    Parameters
    ----------
    xi : float
        Tilt; ``|xi| <= R_max`` unless ``R_max`` is ``None``.
    shift : float, optional
        Normalization coefficient; computed from ``xi = 0`` when omitted.

    Raises
    ------
    InvariantBreach
        If an eigenfunction fails to be positive.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    functional.check_against(chain)
    if R_max is not None and abs(xi) > R_max:
        raise ValidationError(f"|xi| = {abs(xi)} exceeds R_max = {R_max}")
    log_h, p = _backward_tilt(chain, marginals, functional, xi)
    for n, lh in enumerate(log_h, start=1):
        live = marginals[n] > 0
        if not np.all(np.isfinite(lh[live])):
            raise InvariantBreach("positive eigenfunction", f"h_{n} vanishes at xi={xi}")
    kernels = _tilted_kernels(chain, functional, xi, log_h, p)
    start = marginals[1] * np.exp(log_h[0])
    tilted = Chain(tuple(kernels), start / start.sum(), chain.states)
    curve = variance_curve(tilted, functional)
    d1, d2 = curve.E(chain.horizon), curve.V(chain.horizon)
    if xi == 0.0:
        VN = d2
    else:
        VN = variance_curve(chain, functional, marginals).V(chain.horizon)
    if shift is None:
        mean = variance_curve(chain, functional, marginals).E(chain.horizon)
        shift = mean - (d1 if xi == 0.0 else _d1_at_zero(chain, marginals, functional))
    PN = float(p.sum()) + shift * xi
    return EigenData(float(xi), tuple(log_h), p, PN, d1 + shift, d2, VN, float(shift), tilted)


def _d1_at_zero(chain, marginals, functional) -> float:
    log_h, p = _backward_tilt(chain, marginals, functional, 0.0)
    kernels = _tilted_kernels(chain, functional, 0.0, log_h, p)
    start = marginals[1] * np.exp(log_h[0])
    return variance_curve(Chain(tuple(kernels), start / start.sum(), chain.states), functional).E(chain.horizon)


def eigen_relation_residual(chain: Chain, functional: Functional, data: EigenData) -> float:
    """Largest relative defect of ``L_n h_{n+1} = exp(p_n) h_n``."""
    worst = 0.0
    for n in range(1, chain.horizon + 1):
        lhs = (chain.kernel(n) * np.exp(data.xi * functional.f(n)) * data.h(n + 1)[None, :]).sum(axis=1)
        rhs = np.exp(data.p[n - 1]) * data.h(n)
        worst = max(worst, float(np.abs(lhs / rhs - 1.0).max()))
    return worst


def eigen_identity_residual(chain: Chain, functional: Functional, data: EigenData) -> float:
    """``max_x |log E_x exp(xi S_N) - sum p_n - log h_1(x)|``."""
    v = np.zeros(chain.size(chain.horizon + 1))
    for n in range(chain.horizon, 0, -1):
        v = logsumexp(_log_kernel(chain.kernel(n)) + data.xi * functional.f(n) + v[None, :], axis=1)
    return float(np.abs(v - data.p.sum() - data.log_h[0]).max())


# ---------------------------------------------------------------------------
# log-MGF and rate function
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LogMGFProfile:
    """``F_N``, ``F_N'`` and ``F_N''`` on a grid of tilts."""

    xis: np.ndarray
    F: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    VN: float


class RateFunction:
    """Normalized log-MGF ``F_N`` of a chain and its Legendre transform ``I_N``.

    Parameters
    ----------
    chain, marginals, functional
    R_max : float
        Tilts up to this size define the safe window.

    Raises
    ------
    DegenerateVariance
        If ``V_N = 0``.
    """

    def __init__(self, chain: Chain, marginals: MarginalSet | None, functional: Functional, R_max: float = R_MAX):
        self.chain = chain
        self.marginals = validate_chain(chain) if marginals is None else marginals
        self.functional = functional
        self.R_max = float(R_max)
        curve = variance_curve(chain, functional, self.marginals)
        self.VN = curve.V(chain.horizon)
        self.mean = curve.E(chain.horizon)
        if not self.VN > 1e-12:
            raise DegenerateVariance(f"V_N = {self.VN}")
        lo, hi = extremal_path_sums(chain, functional, marginals=self.marginals)
        self.support = (lo, hi)
        self.shift = self.mean - self._raw(0.0).d1
        self._cache = {}

    # ---------------------------------------------------------------- values
    def _raw(self, xi: float) -> EigenData:
        return eigendata(self.chain, self.marginals, self.functional, xi, R_max=None, shift=0.0)

    def data(self, xi: float) -> EigenData:
        xi = float(xi)
        if xi not in self._cache:
            self._cache[xi] = eigendata(self.chain, self.marginals, self.functional, xi, R_max=None, shift=self.shift)
        return self._cache[xi]

    def F(self, xi: float) -> float:
        return self.data(xi).logmgf

    def F1(self, xi: float) -> float:
        return self.data(xi).d1 / self.VN

    def F2(self, xi: float) -> float:
        return self.data(xi).d2 / self.VN

    @property
    def domain(self) -> tuple:
        """``(inf F_N', sup F_N') = (ess inf S_N, ess sup S_N) / V_N``."""
        return self.support[0] / self.VN, self.support[1] / self.VN

    @property
    def safe_window(self) -> tuple:
        """``[F_N'(-R), F_N'(R)]``."""
        return self.F1(-self.R_max), self.F1(self.R_max)

    def profile(self, xis) -> LogMGFProfile:
        xis = np.asarray(xis, dtype=float)
        F = np.array([self.F(x) for x in xis])
        F1 = np.array([self.F1(x) for x in xis])
        F2 = np.array([self.F2(x) for x in xis])
        return LogMGFProfile(xis, F, F1, F2, self.VN)

    # ---------------------------------------------------------------- inverse
    def solve(self, eta: float, tol: float = LEGENDRE_TOL, max_iter: int = NEWTON_MAX_ITER) -> float:
        """Unique ``xi`` with ``F_N'(xi) = eta`` by safeguarded Newton.

        Raises
        ------
        OutOfDomain
            If ``eta`` is not strictly inside the domain of ``I_N``.
        """
        lo_d, hi_d = self.domain
        if not lo_d < eta < hi_d:
            raise OutOfDomain(f"eta = {eta} outside ({lo_d}, {hi_d})")
        # grow a bracket geometrically
        lo, hi = -1.0, 1.0
        while self.F1(lo) > eta:
            hi, lo = lo, 2 * lo
            if lo < -1e4:
                raise OutOfDomain(f"eta = {eta} needs a tilt beyond -1e4")
        while self.F1(hi) < eta:
            lo, hi = hi, 2 * hi
            if hi > 1e4:
                raise OutOfDomain(f"eta = {eta} needs a tilt beyond 1e4")
        xi = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
        for _ in range(max_iter * 4):
            g = self.F1(xi) - eta
            if abs(g) < tol:
                return xi
            if g > 0:
                hi = xi
            else:
                lo = xi
            d = max(self.F2(xi), NEWTON_DERIV_FLOOR)
            step = xi - g / d
            xi = step if lo < step < hi else 0.5 * (lo + hi)
            if hi - lo < 1e-15 * max(1.0, abs(xi)):
                return xi
        return xi

    def legendre(self, eta: float) -> tuple:
        """``(I_N(eta), xi(eta))`` with ``I_N(eta) = xi eta - F_N(xi)``."""
        xi = self.solve(eta)
        return xi * eta - self.F(xi), xi

    __call__ = legendre


def log_mgf_profile(chain: Chain, marginals: MarginalSet | None, functional: Functional, xis,
                    R_max: float = R_MAX) -> LogMGFProfile:
    """``F_N``, ``F_N'`` and ``F_N''`` on a grid, with the normalization checks.

    Raises
    ------
    DegenerateVariance
        If ``V_N = 0``.
    InvariantBreach
        If ``F_N''`` is not positive or ``F_N''(0)`` differs from one.
    """
    rf = RateFunction(chain, marginals, functional, R_max)
    prof = rf.profile(xis)
    if not np.all(prof.F2 > 0):
        raise InvariantBreach("strict convexity of F_N", f"min F_N'' = {prof.F2.min()}")
    zero = np.flatnonzero(prof.xis == 0.0)
    if zero.size:
        if abs(prof.F[zero[0]]) > 1e-12:
            raise InvariantBreach("F_N(0) = 0", f"F_N(0) = {prof.F[zero[0]]}")
        if abs(prof.F2[zero[0]] - 1.0) > 1e-8:
            raise InvariantBreach("F_N''(0) = 1", f"F_N''(0) = {prof.F2[zero[0]]}")
    return prof


def legendre(rate: RateFunction, eta: float) -> tuple:
    """``(I_N(eta), xi(eta))``; see :meth:`RateFunction.legendre`."""
    return rate.legendre(eta)


def richardson_derivatives(rate: RateFunction, xi: float, steps=(1e-4, 1e-5)) -> tuple:
    """Finite-difference ``(P_N', P_N'')`` with one Richardson step.

    ``P_N'`` is differenced from ``P_N`` and ``P_N''`` from the exact
    ``P_N'``, using central differences at ``steps`` (``h_1 = 10 h_2``).
    """
    h1, h2 = steps
    V = rate.VN

    def cd(fun, h):
        return (fun(xi + h) - fun(xi - h)) / (2 * h)

    def P(x):
        return rate.F(x) * V

    def P1(x):
        return rate.F1(x) * V

    r = (h1 / h2) ** 2
    d1 = (r * cd(P, h2) - cd(P, h1)) / (r - 1)
    d2 = (r * cd(P1, h2) - cd(P1, h1)) / (r - 1)
    return d1, d2


# ---------------------------------------------------------------------------
# tilts and the change of measure
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TiltSolution:
    """``xi_N`` with ``P_N'(xi_N) = z_N`` and the ratio constant ``C(R)``."""

    xi: float
    z: float
    ratio_constant: float


def solve_tilt(rate: RateFunction, z: float) -> TiltSolution:
    """Tilt placing the tilted mean of ``S_N`` at ``z``.

    Raises
    ------
    NotReachable
        If ``z / V_N`` lies outside ``[F_N'(-R), F_N'(R)]``.
    """
    lo, hi = rate.safe_window
    eta = z / rate.VN
    if not lo <= eta <= hi:
        raise NotReachable(f"z / V_N = {eta} outside the safe window [{lo}, {hi}]")
    xi = 0.0 if abs(z - rate.mean) <= 1e-12 * max(1.0, abs(z)) else rate.solve(eta)
    dev = abs(z - rate.mean) / rate.VN
    C = abs(xi) / dev if dev > 0 else 0.0
    return TiltSolution(float(xi), float(z), float(C))


def tilted_chain(chain: Chain, marginals: MarginalSet | None, functional: Functional, xi: float,
                 start: str = "tilted") -> Chain:
    """Chain with the tilted kernels.

    Parameters
    ----------
    start : {'tilted', 'original'}
        Initial law ``mu_1 h_1`` (which makes the tilted law of the path
        exactly ``exp(xi S_N) dP / E exp(xi S_N)``) or the original ``mu_1``.
    """
    data = eigendata(chain, marginals, functional, xi, R_max=None, shift=0.0)
    if start == "tilted":
        return data.tilted
    if start == "original":
        return data.tilted.with_initial(chain.initial)
    raise ValidationError("start must be 'tilted' or 'original'")


@dataclass(frozen=True)
class ChangeOfMeasureCheck:
    """Both sides of ``P_x[S_N = z + k] = exp(P_N - xi (z+k)) h_1(x) Pt_x[S_N = z + k]``."""

    lhs: float
    rhs: float
    residual: float


def change_of_measure_identity_check(chain: Chain, marginals: MarginalSet | None, functional: Functional,
                                     xi: float, z: float, k: float, x: int) -> ChangeOfMeasureCheck:
    """Compare the exact point mass with its tilted representation.

    The left side comes from the dynamic program of the original chain, the
    right side from the dynamic program of the tilted chain started at
    ``x``; ``h_{N+1} = 1`` so its inverse drops out.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    data = eigendata(chain, marginals, functional, xi, R_max=None, shift=0.0)
    s = z + k
    lhs = exact_sn_distribution(chain, functional, from_state=x).point_mass(s)
    ptilde = exact_sn_distribution(data.tilted, functional, from_state=x).point_mass(s)
    if lhs == 0.0 and ptilde == 0.0:
        return ChangeOfMeasureCheck(0.0, 0.0, 0.0)
    if ptilde == 0.0:
        return ChangeOfMeasureCheck(lhs, 0.0, 1.0)
    log_rhs = data.PN - xi * s + data.log_h[0][x] + np.log(ptilde)
    rhs = float(np.exp(log_rhs))
    if lhs == 0.0:
        return ChangeOfMeasureCheck(0.0, rhs, 1.0)
    residual = float(abs(np.expm1(log_rhs - np.log(lhs))))
    return ChangeOfMeasureCheck(float(lhs), rhs, residual)


# ---------------------------------------------------------------------------
# local limit theorem with large deviations
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LDLLTResult:
    """Prediction of the tilted local limit theorem against the exact value."""

    prediction: float
    exact: float
    xi: float
    rate: float
    rho_hat: float
    rho_bar: float

    @property
    def ratio(self) -> float:
        return self.exact / self.prediction


def ld_llt_evaluate(rate: RateFunction, z: float, interval=None, x: int | None = None) -> LDLLTResult:
    """``P(S_N - z in (a, b))`` (or ``P(S_N = z)``) against the tilted LLT.

    The prediction is::

        exp(-V_N I_N(z / V_N)) / sqrt(2 pi V_N) * rho_hat * rho_bar * t * sum_s exp(-xi_N s)

    with ``rho_hat = sqrt(V_N / P_N''(xi_N))``, ``rho_bar = h_1(x)`` (one
    when averaging over the initial law) and ``s`` running over lattice
    points of ``(a, b)``, or ``s = 0`` for the point form.

    Raises
    ------
    NotReachable
    """
    functional = rate.functional
    if functional.lattice is None:
        raise ValidationError("the lattice form needs a lattice functional")
    tilt = solve_tilt(rate, z)
    data = rate.data(tilt.xi)
    V = rate.VN
    I = tilt.xi * z / V - data.logmgf
    rho_hat = float(np.sqrt(V / data.d2))
    rho_bar = 1.0 if x is None else float(data.h(1)[x])
    dist = exact_sn_distribution(rate.chain, functional, from_state=x)
    t = functional.lattice
    if interval is None:
        offsets = np.array([0.0])
        exact = dist.point_mass(z)
    else:
        a, b = interval
        gamma = dist.offsets[-1]
        ks = np.arange(np.floor((z + a - gamma) / t) - 1, np.ceil((z + b - gamma) / t) + 2)
        pts = gamma + t * ks - z
        offsets = pts[(pts > a + 1e-9 * t) & (pts < b - 1e-9 * t)]
        exact = dist.interval_mass(z + a, z + b)
    log_pref = -V * I - 0.5 * np.log(2 * np.pi * V)
    pred = float(np.exp(log_pref) * rho_hat * rho_bar * t * np.exp(-tilt.xi * offsets).sum())
    return LDLLTResult(pred, float(exact), tilt.xi, float(I), rho_hat, rho_bar)


def edge_rate(chain: Chain, functional: Functional, z: float) -> float:
    """``(1 / V_N) log P[S_N - z > 0]`` from the exact law (``-inf`` if empty)."""
    dist = exact_sn_distribution(chain, functional)
    V = variance_curve(chain, functional).V(chain.horizon)
    mass = dist.tail_mass(z, "upper", strict=True)
    return float(np.log(mass) / V) if mass > 0 else float("-inf")


# ---------------------------------------------------------------------------
# thresholds and admissibility
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ThresholdEstimate:
    """Finite-horizon surrogates of the reachable window ``(c_-, c_+)``.

    Attributes
    ----------
    logmgf_edges : tuple
        ``(F_N'(-R_max), F_N'(R_max))``.
    support_edges : tuple
        ``(ess inf S_N, ess sup S_N) / V_N``.
    core_edges : tuple
        Extremal sums over the second half of the horizon, along transitions
        of probability at least ``N^(-2/3)``, divided by ``V_N - V_{N/2}``.
    c_minus, c_plus : float
        The estimates, taken from ``core_edges``.
    """

    logmgf_edges: tuple
    support_edges: tuple
    core_edges: tuple
    c_minus: float
    c_plus: float
    VN: float
    block_variance: float
    floor: float


def ld_threshold_estimate(chain: Chain, marginals: MarginalSet | None, functional: Functional,
                          R_max: float = R_MAX, floor: float | None = None) -> ThresholdEstimate:
    """Estimate the large-deviation thresholds at the horizon of ``chain``."""
    if marginals is None:
        marginals = validate_chain(chain)
    N = chain.horizon
    rate = RateFunction(chain, marginals, functional, R_max)
    curve = variance_curve(chain, functional, marginals)
    VN = curve.V(N)
    half = N // 2
    block_var = VN - (curve.V(half) if half >= 1 else 0.0)
    tau = N ** (-2.0 / 3.0) if floor is None else floor
    lo, hi = extremal_path_sums(chain, functional, start=half + 1, stop=N, floor=tau, marginals=marginals)
    core = (lo / block_var, hi / block_var)
    logmgf = rate.safe_window
    support = rate.domain
    return ThresholdEstimate(logmgf, support, core, core[0], core[1], VN, block_var, tau)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Tail masses ``P(S_N >= z_N + eps V_N)`` and ``P(S_N <= z_N - eps V_N)``.

    ``eta_upper[i] = P_upper^(1 / V_N)`` for horizon ``horizons[i]``, and
    similarly below; ``reachable`` records whether ``solve_tilt`` succeeded.
    """

    horizons: tuple
    eta_upper: np.ndarray
    eta_lower: np.ndarray
    reachable: tuple
    eta_floor: float

    @property
    def admissible(self) -> bool:
        return bool(np.all(self.eta_upper > self.eta_floor) and np.all(self.eta_lower > self.eta_floor))


def admissibility_test(chain: Chain, functional: Functional, targets, eps: float = 0.1, eta: float = 1e-3,
                       R_max: float = R_MAX) -> AdmissibilityReport:
    """Finite-horizon check of the tail criterion for admissibility.

    Parameters
    ----------
    targets : mapping or callable
        ``N -> z_N`` for the horizons to test (a mapping), or a callable
        together with the full horizon of ``chain``.
    eps : float
        Relative margin ``eps V_N``.
    eta : float
        Floor below which an implied ``eta`` counts as vanishing.
    """
    if callable(targets):
        targets = {chain.horizon: targets(chain.horizon)}
    horizons, up, down, reach = [], [], [], []
    for N, z in sorted(targets.items()):
        sub, fsub = chain.prefix(N), functional.prefix(N)
        dist = exact_sn_distribution(sub, fsub)
        V = variance_curve(sub, fsub).V(N)
        pu = dist.tail_mass(z + eps * V, "upper")
        pl = dist.tail_mass(z - eps * V, "lower")
        up.append(pu ** (1.0 / V) if pu > 0 else 0.0)
        down.append(pl ** (1.0 / V) if pl > 0 else 0.0)
        try:
            solve_tilt(RateFunction(sub, None, fsub, R_max), z)
            reach.append(True)
        except (NotReachable, OutOfDomain):
            reach.append(False)
        horizons.append(N)
    return AdmissibilityReport(tuple(horizons), np.array(up), np.array(down), tuple(reach), eta)
