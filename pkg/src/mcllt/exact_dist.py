"""Exact laws of additive functionals by dynamic programming.

For a lattice functional (every ``f_n`` lies in a coset ``c_n + t Z``) the
joint law of ``(X_{n+1}, S_n)`` is propagated exactly::

    table[n+1](y, s + f_n(x, y)) += table[n](x, s) * pi_n(x, y)

This is the brute-force oracle the asymptotic formulas are compared with.
The module also provides exact moment recursions that need no lattice,
Gaussian comparison checks, and the universal interval bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.special import ndtr

from .chain_core import Chain, Functional, MarginalSet, summand_variances, validate_chain
from .errors import (
    DegenerateVariance,
    GridTooLarge,
    IntervalTooShort,
    OffLattice,
    ValidationError,
)

#: default bound on ``N K / t`` for the lattice dynamic program
GRID_GUARD = 1_000_000


# ---------------------------------------------------------------------------
# the distribution table
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DistTable:
    """Exact joint law of ``(X_{n+1}, S_n)`` on a lattice.

    Attributes
    ----------
    step : float
        Lattice step ``t``.
    offsets : ndarray
        ``gamma_n = c_1 + ... + c_n`` for ``n = 0..N``; ``S_n`` lives on
        ``gamma_n + t Z``.
    slices : dict
        ``n -> (kmin, array)`` where ``array[x, j]`` is
        ``P(X_{n+1} = x, S_n = gamma_n + (kmin + j) t)``.
    horizon : int
        Number of summands ``N``.
    from_state : int or None
        Initial state when the table is conditioned on ``X_1``.
    mass_drift : ndarray
        ``|total mass - 1|`` of every slice.
    """

    step: float
    offsets: np.ndarray
    slices: dict
    horizon: int
    from_state: int | None
    mass_drift: np.ndarray

    # ----------------------------------------------------------- raw access
    def slice(self, n: int | None = None):
        n = self.horizon if n is None else n
        if n not in self.slices:
            raise ValidationError(f"slice {n} was not stored; rebuild with store='all'")
        return self.slices[n]

    def support(self, n: int | None = None) -> np.ndarray:
        """Lattice points ``gamma_n + k t`` covered by slice ``n``."""
        n = self.horizon if n is None else n
        kmin, arr = self.slice(n)
        return self.offsets[n] + self.step * (kmin + np.arange(arr.shape[1]))

    def law(self, n: int | None = None, terminal=None):
        """Law of ``S_n``, optionally restricted to ``X_{n+1}`` in ``terminal``.

        Returns
        -------
        values, probs : ndarray
            Lattice points and (unnormalized, when restricted) masses.
        """
        n = self.horizon if n is None else n
        kmin, arr = self.slice(n)
        if terminal is not None:
            arr = arr[np.asarray(terminal, dtype=int)]
        return self.support(n), arr.sum(axis=0)

    def terminal_mass(self, terminal, n: int | None = None) -> float:
        """``P(X_{n+1} in terminal)``."""
        _, arr = self.slice(n)
        return float(arr[np.asarray(terminal, dtype=int)].sum())

    def conditional_law(self, terminal, n: int | None = None):
        """Law of ``S_n`` given ``X_{n+1}`` in ``terminal`` (column restriction)."""
        vals, probs = self.law(n, terminal)
        tot = probs.sum()
        if not tot > 0:
            from .errors import NullConditioningEvent

            raise NullConditioningEvent("terminal event has zero probability")
        return vals, probs / tot

    # ------------------------------------------------------------- queries
    def lattice_index(self, z: float, n: int | None = None) -> int:
        """Integer ``k`` with ``z = gamma_n + k t``.

        Raises
        ------
        OffLattice
            If ``z`` is not a lattice point.
        """
        n = self.horizon if n is None else n
        k = (z - self.offsets[n]) / self.step
        if abs(k - round(k)) > 1e-9:
            raise OffLattice(f"{z} is not in {self.offsets[n]} + {self.step} Z")
        return int(round(k))

    def point_mass(self, z: float, n: int | None = None, terminal=None) -> float:
        """``P(S_n = z)`` (restricted to a terminal set when given)."""
        n = self.horizon if n is None else n
        k = self.lattice_index(z, n)
        kmin, arr = self.slice(n)
        j = k - kmin
        if j < 0 or j >= arr.shape[1]:
            return 0.0
        col = arr[:, j] if terminal is None else arr[np.asarray(terminal, dtype=int), j]
        return float(col.sum())

    def interval_mass(self, a: float, b: float, n: int | None = None, closed: bool = False) -> float:
        """``P(S_n in (a, b))``, or ``[a, b]`` when ``closed``."""
        vals, probs = self.law(n)
        tol = 1e-9 * self.step
        if closed:
            mask = (vals >= a - tol) & (vals <= b + tol)
        else:
            mask = (vals > a + tol) & (vals < b - tol)
        return float(probs[mask].sum())

    def tail_mass(self, threshold: float, side: str = "upper", n: int | None = None, strict: bool = False) -> float:
        """``P(S_n >= threshold)`` (``side='upper'``) or ``P(S_n <= threshold)``.

        With ``strict`` the inequality is strict.
        """
        vals, probs = self.law(n)
        tol = 1e-9 * self.step
        if side == "upper":
            mask = vals > threshold + tol if strict else vals >= threshold - tol
        elif side == "lower":
            mask = vals < threshold - tol if strict else vals <= threshold + tol
        else:
            raise ValidationError("side must be 'upper' or 'lower'")
        return float(probs[mask].sum())


def exact_sn_distribution(chain: Chain, functional: Functional, from_state: int | None = None,
                          store: str = "last", grid_guard: float = GRID_GUARD) -> DistTable:
    """Exact law of ``S_N`` (jointly with ``X_{N+1}``) on the value lattice.

    Parameters
    ----------
    chain : Chain
    functional : Functional
        Must declare a lattice step (see :func:`round_to_lattice` for real
        valued functionals).
    from_state : int, optional
        Condition on ``X_1 = from_state``.
    store : {'last', 'all'}
        Keep every time slice, or only the final one.
    grid_guard : float
        Refuse when ``N K / t`` exceeds this.

    Raises
    ------
    GridTooLarge
        If the lattice grid would exceed the guard.
    """
    if functional.lattice is None:
        raise ValidationError("exact_sn_distribution needs a lattice functional; see round_to_lattice")
    functional.check_against(chain)
    N = chain.horizon
    t = functional.lattice
    K = max(functional.prefix(N).bound, t)
    if N * K / t > grid_guard:
        raise GridTooLarge(f"N K / t = {N * K / t:.3g} exceeds the guard {grid_guard:.3g}")
    offs, steps = functional.prefix(N).lattice_steps()
    gamma = np.concatenate([[0.0], np.cumsum(offs)])

    if from_state is None:
        cur = chain.initial.reshape(-1, 1).copy()
    else:
        cur = np.zeros((chain.size(1), 1))
        cur[from_state, 0] = 1.0
    kmin = 0
    slices = {}
    if store == "all":
        slices[0] = (0, cur.copy())
    drift = np.zeros(N + 1)
    drift[0] = abs(cur.sum() - 1.0)
    for n in range(1, N + 1):
        P = chain.kernel(n)
        k = steps[n - 1]
        live = P > 0
        if not live.any():
            raise ValidationError(f"kernel {n} has no positive entry")
        lo, hi = int(k[live].min()), int(k[live].max())
        width = cur.shape[1]
        new = np.zeros((P.shape[1], width + hi - lo))
        for d in np.unique(k[live]):
            m = np.where((k == d) & live, P, 0.0)
            new[:, d - lo: d - lo + width] += m.T @ cur
        kmin += lo
        # trim exactly-empty edge columns (for example parity gaps)
        colmass = new.sum(axis=0)
        nz = np.flatnonzero(colmass > 0)
        if nz.size:
            new = new[:, nz[0]: nz[-1] + 1]
            kmin += int(nz[0])
        cur = new
        drift[n] = abs(cur.sum() - 1.0)
        if store == "all" or n == N:
            slices[n] = (kmin, cur)
    for key in slices:
        slices[key][1].setflags(write=False)
    return DistTable(float(t), gamma, slices, N, from_state, drift)


def round_to_lattice(functional: Functional, h: float | None = None):
    """Round a real functional to the grid ``h Z``.

    Parameters
    ----------
    functional : Functional
    h : float, optional
        Grid step; defaults to ``K / 2**12``.

    Returns
    -------
    rounded : Functional
        Lattice functional with step ``h``.
    error_bound : float
        ``N h / 2``, a bound on ``|S_N(rounded) - S_N|``.
    """
    if h is None:
        h = functional.bound / 2**12
    vals = tuple(np.round(v / h) * h for v in functional.values)
    return Functional(vals, h), functional.horizon * h / 2.0


# ---------------------------------------------------------------------------
# residues modulo t
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ModTable:
    """Joint law of ``(X_{N+1}, S_N mod t)`` on ``bins`` equal cells."""

    period: float
    bins: int
    table: np.ndarray

    @property
    def width(self) -> float:
        return self.period / self.bins

    def arc_mass(self, a: float, b: float, terminal=None) -> float:
        """``P(S_N in (a, b) + t Z)`` for ``0 <= a < b <= t``.

        Cells are centred on the grid points ``j t / bins``.
        """
        arr = self.table if terminal is None else self.table[np.asarray(terminal, dtype=int)]
        centers = np.arange(self.bins) * self.width
        mask = (centers > a) & (centers < b)
        return float(arr[:, mask].sum())

    def terminal_mass(self, terminal) -> float:
        return float(self.table[np.asarray(terminal, dtype=int)].sum())


def exact_mod_distribution(chain: Chain, functional: Functional, period: float, bins: int = 4096,
                           from_state: int | None = None) -> ModTable:
    """Law of ``S_N`` modulo ``period`` with summands rounded to ``period / bins``.

    The rounding moves each summand by at most half a cell, so the residue of
    ``S_N`` is displaced by at most ``N period / (2 bins)``.
    """
    functional.check_against(chain)
    h = period / bins
    if from_state is None:
        cur = np.zeros((chain.size(1), bins))
        cur[:, 0] = chain.initial
    else:
        cur = np.zeros((chain.size(1), bins))
        cur[from_state, 0] = 1.0
    for n in range(1, chain.horizon + 1):
        P = chain.kernel(n)
        shift = np.mod(np.rint(functional.f(n) / h).astype(np.int64), bins)
        new = np.zeros((P.shape[1], bins))
        for x in range(P.shape[0]):
            for y in np.flatnonzero(P[x] > 0):
                new[y] += P[x, y] * np.roll(cur[x], shift[x, y])
        cur = new
    return ModTable(float(period), int(bins), cur)


# ---------------------------------------------------------------------------
# exact moments without a lattice
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class VarianceCurve:
    """``E S_n`` and ``V_n = Var S_n`` for ``n = 1..N``.

    ``mean[n-1]`` and ``var[n-1]`` refer to ``S_n``.
    """

    mean: np.ndarray
    var: np.ndarray

    def V(self, n: int) -> float:
        return float(self.var[n - 1])

    def E(self, n: int) -> float:
        return float(self.mean[n - 1])


def variance_curve(chain: Chain, functional: Functional, marginals: MarginalSet | None = None) -> VarianceCurve:
    """Exact means and variances of every partial sum.

    Uses the forward recursion for ``E[T 1{X=x}]`` and ``E[T^2 1{X=x}]``
    where ``T`` is the centred partial sum; no lattice is needed.
    """
    functional.check_against(chain)
    if marginals is None:
        marginals = validate_chain(chain)
    N = chain.horizon
    a = chain.initial.copy()
    b = np.zeros_like(a)
    c = np.zeros_like(a)
    means = np.empty(N)
    var = np.empty(N)
    total = 0.0
    for n in range(1, N + 1):
        P = chain.kernel(n)
        f = functional.f(n)
        m = float(marginals[n] @ (P * f).sum(axis=1))
        g = f - m
        total += m
        pa = P * a[:, None]
        b_new = (P * b[:, None]).sum(axis=0) + (pa * g).sum(axis=0)
        c_new = (P * c[:, None]).sum(axis=0) + 2.0 * (P * g * b[:, None]).sum(axis=0) + (pa * g * g).sum(axis=0)
        a = a @ P
        b, c = b_new, c_new
        means[n - 1] = total
        var[n - 1] = max(float(c.sum() - b.sum() ** 2), 0.0)
    return VarianceCurve(means, var)


def pair_covariances(chain: Chain, functional: Functional, marginals: MarginalSet | None = None,
                     max_lag: int | None = None) -> np.ndarray:
    """Exact ``Cov(f_m, f_n)`` as an ``N x N`` matrix (0-based indices).

    Entries with ``|m - n| > max_lag`` are ``nan``.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    N = chain.horizon
    if max_lag is None:
        max_lag = N
    cov = np.full((N, N), np.nan)
    centered = []
    for n in range(1, N + 1):
        f = functional.f(n)
        P = chain.kernel(n)
        m = float(marginals[n] @ (P * f).sum(axis=1))
        centered.append(f - m)
    var = summand_variances(chain, marginals, functional)
    for n in range(1, N + 1):
        cov[n - 1, n - 1] = var[n - 1]
        G = (chain.kernel(n) * centered[n - 1]).sum(axis=1)  # function on S_n
        for m in range(n - 1, max(0, n - 1 - max_lag), -1):
            joint = marginals[m][:, None] * chain.kernel(m)
            val = float((joint * centered[m - 1] * G[None, :]).sum())
            cov[m - 1, n - 1] = cov[n - 1, m - 1] = val
            G = chain.kernel(m) @ G
    return cov


# ---------------------------------------------------------------------------
# moments and Gaussian comparisons
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Moments:
    """Mean, variance and central moments ``central[r] = E(S - ES)^r``."""

    mean: float
    variance: float
    central: np.ndarray

    def standardized(self, r: int) -> float:
        """``E(S - ES)^r / V^(r/2)``."""
        if self.variance <= 0:
            raise DegenerateVariance("variance is zero")
        return float(self.central[r] / self.variance ** (r / 2))


def moments(dist: DistTable, r: int = 4, n: int | None = None) -> Moments:
    """Exact moments of ``S_n`` up to order ``r <= 8``."""
    if not 0 <= r <= 8:
        raise ValidationError("moment order must lie in [0, 8]")
    vals, probs = dist.law(n)
    tot = probs.sum()
    mean = float((vals * probs).sum() / tot)
    dev = vals - mean
    central = np.array([float((dev**k * probs).sum() / tot) for k in range(max(r, 2) + 1)])
    return Moments(mean, float(central[2]), central)


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def clt_distance(dist: DistTable, n: int | None = None) -> float:
    """Kolmogorov distance between ``S_n`` and ``Normal(E S_n, V_n)``.

    The supremum is taken over both one-sided limits at every atom.

    Raises
    ------
    DegenerateVariance
        If ``V_n = 0``.
    """
    vals, probs = dist.law(n)
    mom = moments(dist, 2, n)
    if mom.variance <= 1e-300:
        raise DegenerateVariance("V_N = 0")
    sd = sqrt(mom.variance)
    cdf_right = np.cumsum(probs)
    cdf_left = cdf_right - probs
    gauss = ndtr((vals - mom.mean) / sd)
    return float(max(np.abs(cdf_right - gauss).max(), np.abs(cdf_left - gauss).max()))


@dataclass(frozen=True)
class LLTCheck:
    """Exact point mass against the Gaussian local prediction."""

    exact: float
    prediction: float
    z: float

    @property
    def ratio(self) -> float:
        return self.exact / self.prediction


def llt_lattice_check(dist: DistTable, z_N: float, n: int | None = None) -> LLTCheck:
    """Ratio of ``P(S_N = z_N)`` to ``t exp(-z^2/2) / sqrt(2 pi V_N)``.

    ``z = (z_N - E S_N) / sqrt(V_N)``, moments taken from the table itself
    (so the conditioning on ``X_1`` of the table is respected).

    Raises
    ------
    OffLattice
        If ``z_N`` is not on the coset.
    """
    exact = dist.point_mass(z_N, n)
    mom = moments(dist, 2, n)
    if mom.variance <= 0:
        raise DegenerateVariance("V_N = 0")
    z = (z_N - mom.mean) / sqrt(mom.variance)
    pred = dist.step * np.exp(-0.5 * z * z) / sqrt(2 * np.pi * mom.variance)
    return LLTCheck(exact, float(pred), float(z))


@dataclass(frozen=True)
class UniversalBoundReport:
    """Exact interval mass against the universal bounds."""

    mass: float
    gaussian: float
    lower: float | None
    upper: float | None
    fine_ok: bool | None
    crude_applicable: bool
    crude_ok: bool | None
    ratio: float

    @property
    def passed(self) -> bool:
        checks = [c for c in (self.fine_ok, self.crude_ok) if c is not None]
        return all(checks)


def universal_bound_check(dist: DistTable, interval, z_N: float, delta_f: float, eps: float = 0.1,
                          n: int | None = None) -> UniversalBoundReport:
    """Check ``P(S_N - z_N in (a, b))`` against the universal sandwiches.

    With ``G = exp(-z^2/2) |a - b| / sqrt(2 pi V_N)`` and ``L = |a - b|``:

    * for ``L > delta_f`` the mass should lie in
      ``[G (1 - delta_f/L - eps), G (1 + 21 delta_f/L + eps)]``;
    * for ``L > 2 delta_f + eps`` it should lie in ``[G/3, 3G]``.

    Raises
    ------
    IntervalTooShort
        If ``L <= delta_f``.
    """
    a, b = interval
    L = abs(b - a)
    if not L > delta_f:
        raise IntervalTooShort(f"interval length {L} does not exceed the graininess {delta_f}")
    mass = dist.interval_mass(z_N + min(a, b), z_N + max(a, b), n)
    mom = moments(dist, 2, n)
    z = (z_N - mom.mean) / sqrt(mom.variance)
    G = float(np.exp(-0.5 * z * z) * L / sqrt(2 * np.pi * mom.variance))
    lower = G * (1 - delta_f / L - eps)
    upper = G * (1 + 21 * delta_f / L + eps)
    fine_ok = bool(lower <= mass <= upper)
    crude_applicable = L > 2 * delta_f + eps
    crude_ok = bool(G / 3 <= mass <= 3 * G) if crude_applicable else None
    return UniversalBoundReport(mass, G, lower, upper, fine_ok, crude_applicable, crude_ok, mass / G)


def counting_sandwich(a: float, b: float, delta: float, atoms, weights=None):
    """``delta * sum_m E 1_{(a,b)}(m delta + F)`` for a discrete law of ``F``.

    Returns
    -------
    value : float
    bounds : tuple
        ``((1 - delta/L) L, (1 + delta/L) L)`` with ``L = |a - b|``.
    """
    atoms = np.asarray(atoms, dtype=float)
    weights = np.full(atoms.size, 1.0 / atoms.size) if weights is None else np.asarray(weights, dtype=float)
    lo, hi = min(a, b), max(a, b)
    # number of integers m with lo < m delta + v < hi
    upper = np.ceil((hi - atoms) / delta) - 1
    lower = np.floor((lo - atoms) / delta) + 1
    counts = np.clip(upper - lower + 1, 0, None)
    value = float(delta * (weights * counts).sum())
    L = hi - lo
    return value, ((1 - delta / L) * L, (1 + delta / L) * L)


# ---------------------------------------------------------------------------
# extremal paths
# ---------------------------------------------------------------------------
def extremal_path_sums(chain: Chain, functional: Functional, start: int = 1, stop: int | None = None,
                       floor: float = 0.0, marginals: MarginalSet | None = None):
    """Smallest and largest ``sum_{n=start}^{stop} f_n`` along admissible paths.

    A path is admissible when it starts in a state of mass above ``floor``
    at time ``start`` and every transition has probability above ``floor``.

    Returns
    -------
    (float, float)
        ``(min, max)``; ``(inf, -inf)`` when no admissible path exists.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    stop = chain.horizon if stop is None else stop
    lo = np.where(marginals[start] > floor, 0.0, np.inf)
    hi = np.where(marginals[start] > floor, 0.0, -np.inf)
    for n in range(start, stop + 1):
        P = chain.kernel(n)
        f = functional.f(n)
        ok = P > floor
        cand_lo = np.where(ok, lo[:, None] + f, np.inf)
        cand_hi = np.where(ok, hi[:, None] + f, -np.inf)
        lo = cand_lo.min(axis=0)
        hi = cand_hi.max(axis=0)
    return float(lo.min()), float(hi.max())

