"""Finite-state inhomogeneous Markov chains and additive functionals.

A chain of horizon ``N`` has state sets ``S_1, ..., S_{N+1}``, kernels
``pi_1, ..., pi_N`` (``pi_n`` is a ``|S_n| x |S_{n+1}|`` row-stochastic
matrix) and an initial law on ``S_1``.  An additive functional attaches a
matrix ``f_n(x, y)`` to every kernel, and ``S_N = sum_n f_n(X_n, X_{n+1})``.

Time indices in the public API are 1-based, matching the usual notation;
states are addressed by their integer position inside each state set.  Use
:meth:`Chain.index` to translate a label into a position.

All densities are taken with respect to the exact forward marginals, so
``p_n(x, y) = pi_n(x, y) / mu_{n+1}(y)`` with ``0/0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    EmptyStateSet,
    InvariantBreach,
    NonStochasticRow,
    NotTwoStepElliptic,
    ValidationError,
    ZeroBridgeMass,
)

#: tolerance for row sums of a validated chain
STOCHASTIC_TOL = 1e-12
#: drift below which rows are silently renormalized at ingestion
RENORMALIZE_TOL = 1e-9
#: deviations from the limit law below this count as rounding noise when fitting cmix
MIXING_NOISE = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _normalize_rows(mat: np.ndarray, n: int, labels) -> np.ndarray:
    if np.any(mat < 0):
        x = int(np.argwhere(mat < 0)[0][0])
        raise NonStochasticRow(n, labels[x], float(mat[x].min()))
    sums = mat.sum(axis=1)
    dev = np.abs(sums - 1.0)
    if np.any(dev > RENORMALIZE_TOL):
        x = int(np.argmax(dev))
        raise NonStochasticRow(n, labels[x], float(dev[x]))
    return mat / sums[:, None]


@dataclass(frozen=True)
class Chain:
    """Finite-horizon inhomogeneous Markov chain.

    Parameters
    ----------
    kernels : sequence of array_like
        ``kernels[n-1]`` is the transition matrix from time ``n`` to ``n+1``.
    initial : array_like
        Law of ``X_1``.
    states : sequence of sequences, optional
        Labels of the state sets ``S_1..S_{N+1}``.  Defaults to integer
        positions.

    Notes
    -----
    Rows whose sums drift from one by less than ``1e-9`` are renormalized on
    construction; larger deviations raise :class:`NonStochasticRow`.
    Instances are immutable.
    """

    kernels: tuple
    initial: np.ndarray
    states: tuple = field(default=None)

    def __post_init__(self):
        kernels = [np.asarray(k, dtype=float) for k in self.kernels]
        if len(kernels) == 0:
            raise ValidationError("a chain needs at least one kernel")
        states = self.states
        if states is None:
            sizes = [k.shape[0] for k in kernels] + [kernels[-1].shape[1]]
            states = [tuple(range(s)) for s in sizes]
        states = tuple(tuple(s) for s in states)
        if len(states) != len(kernels) + 1:
            raise ValidationError(
                f"{len(kernels)} kernels need {len(kernels) + 1} state sets, got {len(states)}"
            )
        for n, s in enumerate(states, start=1):
            if len(s) == 0:
                raise EmptyStateSet(n)
        fixed = []
        for n, k in enumerate(kernels, start=1):
            if k.ndim != 2 or k.shape != (len(states[n - 1]), len(states[n])):
                raise ValidationError(
                    f"kernel {n} has shape {k.shape}, expected "
                    f"{(len(states[n - 1]), len(states[n]))}"
                )
            fixed.append(_frozen(_normalize_rows(k, n, states[n - 1])))
        init = np.asarray(self.initial, dtype=float).ravel()
        if init.shape != (len(states[0]),):
            raise ValidationError(f"initial law has length {init.size}, expected {len(states[0])}")
        if np.any(init < 0) or abs(init.sum() - 1.0) > RENORMALIZE_TOL:
            raise ValidationError(f"initial law is not a probability vector (sum {init.sum()!r})")
        object.__setattr__(self, "kernels", tuple(fixed))
        object.__setattr__(self, "initial", _frozen(init / init.sum()))
        object.__setattr__(self, "states", states)

    # ------------------------------------------------------------------ access
    @property
    def horizon(self) -> int:
        """Number of summands ``N``."""
        return len(self.kernels)

    def kernel(self, n: int) -> np.ndarray:
        """Transition matrix ``pi_n`` (1-based)."""
        if not 1 <= n <= self.horizon:
            raise IndexError(f"kernel index {n} outside [1, {self.horizon}]")
        return self.kernels[n - 1]

    def size(self, n: int) -> int:
        """Cardinality of ``S_n`` for ``1 <= n <= N+1``."""
        return len(self.states[n - 1])

    def index(self, n: int, label) -> int:
        """Position of ``label`` inside ``S_n``."""
        try:
            return self.states[n - 1].index(label)
        except ValueError:
            # labels read from text may arrive as strings
            for i, s in enumerate(self.states[n - 1]):
                if str(s) == str(label):
                    return i
            raise ValidationError(f"state {label!r} not in state set {n}") from None

    # ------------------------------------------------------------- derivation
    def with_initial(self, initial) -> "Chain":
        """Same kernels, different law of ``X_1``."""
        return Chain(self.kernels, initial, self.states)

    def started_at(self, x: int) -> "Chain":
        """Chain conditioned on ``X_1 = x`` (a point-mass initial law)."""
        init = np.zeros(self.size(1))
        init[x] = 1.0
        return self.with_initial(init)

    def prefix(self, N: int) -> "Chain":
        """The first ``N`` steps of the chain."""
        if not 1 <= N <= self.horizon:
            raise ValidationError(f"prefix length {N} outside [1, {self.horizon}]")
        return Chain(self.kernels[:N], self.initial, self.states[: N + 1])

    def drop_first(self) -> "Chain":
        """Chain started from the law of ``X_2`` with the first step removed."""
        mu2 = self.initial @ self.kernels[0]
        return Chain(self.kernels[1:], mu2, self.states[1:])

    @classmethod
    def homogeneous(cls, kernel, N: int, initial=None, labels=None) -> "Chain":
        """Chain using the same kernel at every step.

        ``initial`` defaults to the stationary law of ``kernel``.
        """
        kernel = np.asarray(kernel, dtype=float)
        if initial is None:
            initial = stationary_law(kernel)
        states = None if labels is None else [tuple(labels)] * (N + 1)
        return cls(tuple([kernel] * N), initial, states)

    @classmethod
    def independent(cls, laws: Sequence, labels=None) -> "Chain":
        """Chain of independent variables with the given laws of ``X_1..X_{N+1}``."""
        laws = [np.asarray(l, dtype=float) for l in laws]
        kernels = [np.tile(laws[n + 1], (laws[n].size, 1)) for n in range(len(laws) - 1)]
        states = None if labels is None else labels
        return cls(tuple(kernels), laws[0], states)


def stationary_law(kernel: np.ndarray) -> np.ndarray:
    """Stationary probability vector of an irreducible stochastic matrix."""
    kernel = np.asarray(kernel, dtype=float)
    s = kernel.shape[0]
    # solve mu (P - I) = 0 with sum(mu) = 1 by least squares
    a = np.vstack([kernel.T - np.eye(s), np.ones((1, s))])
    b = np.zeros(s + 1)
    b[-1] = 1.0
    mu, *_ = np.linalg.lstsq(a, b, rcond=None)
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


# ---------------------------------------------------------------------------
# additive functionals
# ---------------------------------------------------------------------------
def _lattice_offset(vals: np.ndarray, t: float) -> float:
    """Common residue of ``vals`` modulo ``t`` or ``nan`` if there is none."""
    base = float(vals.flat[0])
    resid = (vals - base) / t
    if np.all(np.abs(resid - np.round(resid)) * t <= 1e-9):
        return base - t * np.floor(base / t + 1e-12)
    return float("nan")


@dataclass(frozen=True)
class Functional:
    """Additive functional ``f_n(x, y)`` attached to a chain.

    Parameters
    ----------
    values : sequence of array_like
        ``values[n-1]`` is the ``|S_n| x |S_{n+1}|`` matrix ``f_n``.
    lattice : float, optional
        Declared lattice step ``t``: every ``f_n`` must take values in a
        single coset ``c_n + t Z``.
    """

    values: tuple
    lattice: float | None = None

    def __post_init__(self):
        vals = tuple(_frozen(v) for v in self.values)
        for n, v in enumerate(vals, start=1):
            if v.ndim != 2:
                raise ValidationError(f"functional matrix {n} is not two-dimensional")
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"functional matrix {n} has non-finite entries")
        object.__setattr__(self, "values", vals)
        if self.lattice is not None:
            t = float(self.lattice)
            if not t > 0:
                raise ValidationError("lattice step must be positive")
            object.__setattr__(self, "lattice", t)
            for n, v in enumerate(vals, start=1):
                if np.isnan(_lattice_offset(v, t)):
                    raise ValidationError(
                        f"functional matrix {n} does not sit in a single coset of {t} Z"
                    )

    @property
    def horizon(self) -> int:
        return len(self.values)

    def f(self, n: int) -> np.ndarray:
        """Matrix ``f_n`` (1-based)."""
        return self.values[n - 1]

    @property
    def bound(self) -> float:
        """Essential bound ``K = max_n max |f_n|``."""
        return float(max(np.abs(v).max() for v in self.values))

    def offsets(self) -> np.ndarray:
        """Coset constants ``c_n in [0, t)`` with ``f_n in c_n + t Z``."""
        if self.lattice is None:
            raise ValidationError("functional has no declared lattice step")
        return np.array([_lattice_offset(v, self.lattice) for v in self.values])

    def lattice_steps(self):
        """Integer representation ``f_n = c_n + t * k_n``.

        Returns
        -------
        offsets : ndarray
            The constants ``c_n``.
        steps : list of ndarray of int
            The integer matrices ``k_n``.
        """
        t = self.lattice
        offs = self.offsets()
        steps = [np.rint((v - c) / t).astype(np.int64) for v, c in zip(self.values, offs)]
        return offs, steps

    def check_against(self, chain: Chain) -> None:
        """Raise if the shapes do not match ``chain``."""
        if self.horizon < chain.horizon:
            raise ValidationError(
                f"functional has {self.horizon} matrices, the chain has horizon {chain.horizon}"
            )
        for n in range(1, chain.horizon + 1):
            if self.f(n).shape != chain.kernel(n).shape:
                raise ValidationError(f"functional matrix {n} has shape {self.f(n).shape}")

    # ------------------------------------------------------------ algebra
    def prefix(self, N: int) -> "Functional":
        return Functional(self.values[:N], self.lattice)

    def drop_first(self) -> "Functional":
        return Functional(self.values[1:], self.lattice)

    def __add__(self, other: "Functional") -> "Functional":
        lat = None
        if self.lattice is not None and other.lattice is not None:
            lat = _common_lattice(self.lattice, other.lattice)
        return Functional(tuple(a + b for a, b in zip(self.values, other.values)), lat)

    def scaled(self, c: float) -> "Functional":
        lat = None if self.lattice is None or c == 0 else abs(c) * self.lattice
        return Functional(tuple(c * v for v in self.values), lat)

    def centered(self, chain: Chain, marginals: "MarginalSet") -> "Functional":
        """Subtract the means ``E f_n(X_n, X_{n+1})``."""
        means = summand_means(chain, marginals, self)
        return Functional(tuple(v - m for v, m in zip(self.values, means)), None)

    # ------------------------------------------------------------ builders
    @classmethod
    def of_state(cls, chain: Chain, values, lattice=None, which: str = "x") -> "Functional":
        """Functional depending on one endpoint only.

        ``values`` is either one vector (used at every time) or a sequence of
        vectors indexed by time; ``which`` selects ``x`` (the current state)
        or ``y`` (the next state).
        """
        mats = []
        for n in range(1, chain.horizon + 1):
            r, c = chain.kernel(n).shape
            if which == "x":
                v = _pick(values, n, r)
                mats.append(np.repeat(v[:, None], c, axis=1))
            else:
                v = _pick(values, n + 1, c)
                mats.append(np.repeat(v[None, :], r, axis=0))
        return cls(tuple(mats), lattice)

    @classmethod
    def gradient(cls, chain: Chain, potentials, constants=None, lattice=None) -> "Functional":
        """``f_n(x, y) = b_{n+1}(y) - b_n(x) + kappa_n``."""
        mats = []
        for n in range(1, chain.horizon + 1):
            r, c = chain.kernel(n).shape
            b_now = _pick(potentials, n, r)
            b_next = _pick(potentials, n + 1, c)
            k = 0.0 if constants is None else float(np.broadcast_to(constants, (chain.horizon,))[n - 1])
            mats.append(b_next[None, :] - b_now[:, None] + k)
        return cls(tuple(mats), lattice)

    @classmethod
    def constant(cls, chain: Chain, value: float = 0.0, lattice=None) -> "Functional":
        return cls(tuple(np.full(chain.kernel(n).shape, float(value)) for n in range(1, chain.horizon + 1)), lattice)


def _pick(values, n: int, size: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float) if not callable(values) else None
    if callable(values):
        return np.asarray(values(n), dtype=float).reshape(size)
    if arr.ndim == 1:
        return arr.reshape(size)
    return arr[n - 1].reshape(size)


def _common_lattice(a: float, b: float) -> float | None:
    """Generator of the group ``aZ + bZ`` when it is discrete."""
    fa = Fraction(a).limit_denominator(10**6)
    fb = Fraction(b).limit_denominator(10**6)
    if abs(float(fa) - a) > 1e-12 or abs(float(fb) - b) > 1e-12:
        return None
    return float(_fraction_gcd(fa, fb))


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    from math import gcd

    num = gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


# ---------------------------------------------------------------------------
# marginals and ellipticity
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MarginalSet:
    """Forward marginals ``mu_1..mu_{N+1}``."""

    mu: tuple

    def __getitem__(self, n: int) -> np.ndarray:
        """``mu_n`` (1-based)."""
        return self.mu[n - 1]

    def __len__(self) -> int:
        return len(self.mu)


def validate_chain(chain: Chain) -> MarginalSet:
    """Check the chain invariants and propagate the forward marginals.

    Returns
    -------
    MarginalSet
        ``mu_{n+1} = mu_n pi_n`` for ``n = 1..N``.

    Raises
    ------
    NonStochasticRow
        If a row sum deviates from one by more than ``1e-12``.
    EmptyStateSet
        If a state set is empty.
    """
    for n, s in enumerate(chain.states, start=1):
        if len(s) == 0:
            raise EmptyStateSet(n)
    for n, k in enumerate(chain.kernels, start=1):
        if np.any(k < 0):
            x = int(np.argwhere(k < 0)[0][0])
            raise NonStochasticRow(n, chain.states[n - 1][x], float(k[x].min()))
        dev = np.abs(k.sum(axis=1) - 1.0)
        if np.any(dev > STOCHASTIC_TOL):
            x = int(np.argmax(dev))
            raise NonStochasticRow(n, chain.states[n - 1][x], float(dev[x]))
    mu = [chain.initial]
    for k in chain.kernels:
        nxt = mu[-1] @ k
        nxt = nxt / nxt.sum()
        mu.append(_frozen(nxt))
    return MarginalSet(tuple(mu))


def densities(chain: Chain, marginals: MarginalSet) -> list:
    """Densities ``p_n(x, y) = pi_n(x, y) / mu_{n+1}(y)`` with ``0/0 = 0``."""
    out = []
    for n in range(1, chain.horizon + 1):
        mu_next = marginals[n + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = np.where(mu_next[None, :] > 0, chain.kernel(n) / mu_next[None, :], 0.0)
        out.append(p)
    return out


def two_step_density(chain: Chain, marginals: MarginalSet, n: int, dens=None) -> np.ndarray:
    """``sum_y p_n(x, y) p_{n+1}(y, z) mu_{n+1}(y)`` as an ``(x, z)`` matrix."""
    if dens is None:
        dens = densities(chain, marginals)
    return (dens[n - 1] * marginals[n + 1][None, :]) @ dens[n]


@dataclass(frozen=True)
class EllipticityReport:
    """Ellipticity and mixing constants of a chain.

    Attributes
    ----------
    epsilon0 : float or None
        Largest constant satisfying the density bound and the two-step lower
        bound; ``None`` when some two-step density vanishes.
    density_sup : float
        ``max p_n(x, y)``.
    twostep_inf : float
        Minimum two-step density over positive-mass endpoints (``inf`` when
        the horizon is one).
    cmix : float
        Empirical mixing constant.
    theta : float
        Mixing rate ``(1 - epsilon0)^(1/2)``.
    """

    epsilon0: float | None
    density_sup: float
    twostep_inf: float
    cmix: float
    theta: float

    def __post_init__(self):
        if self.epsilon0 is not None:
            if not self.density_sup <= 1.0 / self.epsilon0 * (1 + 1e-12):
                raise InvariantBreach("ellipticity density bound", f"{self.density_sup} > 1/{self.epsilon0}")
            if not self.twostep_inf > self.epsilon0:
                raise InvariantBreach("ellipticity two-step bound", f"{self.twostep_inf} <= {self.epsilon0}")


def ellipticity_constant(chain: Chain, marginals: MarginalSet, max_lag: int | None = None) -> EllipticityReport:
    """Ellipticity constant and empirical mixing constants.

    Parameters
    ----------
    chain, marginals
        The chain and its forward marginals.
    max_lag : int, optional
        Largest lag ``n - m`` used when fitting ``cmix``.  Defaults to
        ``min(N, 60)``.

    Returns
    -------
    EllipticityReport

    Raises
    ------
    NotTwoStepElliptic
        If a two-step density vanishes between positive-mass states.

    Notes
    -----
    ``cmix`` is the smallest constant for which, on every measured pair
    ``m < n``, both

    * ``max_x ||pi_{m->n}(x, .) - mu_n||_1 <= cmix * theta^(n-m)`` and
    * the ``L^2(mu_n) -> L^2(mu_m)`` norm of ``pi_{m->n} - 1 mu_n`` is at most
      ``cmix * theta^(n-m+1)``

    hold.  The second condition makes the covariance bound
    ``|Cov(f_m, f_n)| <= cmix theta^(n-m) sd(f_m) sd(f_n)`` provable.
    """
    N = chain.horizon
    dens = densities(chain, marginals)
    density_sup = 0.0
    for n in range(1, N + 1):
        live = marginals[n] > 0
        if live.any():
            density_sup = max(density_sup, float(dens[n - 1][live].max()))
    twostep_inf = np.inf
    for n in range(1, N):
        live_x = np.flatnonzero(marginals[n] > 0)
        live_z = np.flatnonzero(marginals[n + 2] > 0)
        t2 = two_step_density(chain, marginals, n, dens)[np.ix_(live_x, live_z)]
        m = float(t2.min())
        if m <= 0.0:
            i, j = np.unravel_index(np.argmin(t2), t2.shape)
            raise NotTwoStepElliptic(n, chain.states[n - 1][live_x[i]], chain.states[n + 1][live_z[j]])
        twostep_inf = min(twostep_inf, m)
    eps0 = 1.0 / density_sup
    if np.isfinite(twostep_inf):
        eps0 = min(eps0, twostep_inf * (1.0 - 1e-12))
    theta = float(np.sqrt(1.0 - eps0))
    cmix = _fit_cmix(chain, marginals, theta, max_lag)
    return EllipticityReport(eps0, density_sup, float(twostep_inf), cmix, theta)


def _fit_cmix(chain: Chain, marginals: MarginalSet, theta: float, max_lag) -> float:
    N = chain.horizon
    if max_lag is None:
        max_lag = min(N, 60)
    if theta <= 0.0:
        # rank-one two-step kernels; any constant >= 2 works for lag >= 2
        theta = 1e-300
    log_theta = np.log(theta)
    log_best = -np.inf
    for m in range(1, N + 2):
        live_m = marginals[m] > 0
        prod = np.eye(chain.size(m))
        for n in range(m, min(N + 1, m + max_lag) + 1):
            if n > m:
                prod = prod @ chain.kernel(n - 1)
            live_n = marginals[n] > 0
            centered = prod[np.ix_(live_m, live_n)] - marginals[n][live_n][None, :]
            if n > m:
                linf = float(np.abs(centered).sum(axis=1).max())
                if linf > MIXING_NOISE:
                    log_best = max(log_best, np.log(linf) - log_theta * (n - m))
            sq_m = np.sqrt(marginals[m][live_m])
            sq_n = np.sqrt(marginals[n][live_n])
            op = centered * sq_m[:, None] / sq_n[None, :]
            l2 = float(np.linalg.norm(op, 2))
            if l2 > MIXING_NOISE:
                log_best = max(log_best, np.log(l2) - log_theta * (n - m + 1))
    return float(np.exp(min(log_best, 700.0)))


def contraction_coefficient(chain: Chain, n: int, span: int = 1, marginals: MarginalSet | None = None) -> float:
    """Dobrushin contraction coefficient of ``pi_{n, n+span}``.

    ``delta(pi) = max_{x1, x2} TV(pi(x1, .), pi(x2, .))`` over rows of states
    with positive mass.  For ``span = 2`` the two-step bound
    ``delta <= 1 - epsilon0`` is asserted.

    Raises
    ------
    InvariantBreach
        If the two-step bound fails on an elliptic chain.
    """
    if span not in (1, 2):
        raise ValidationError("span must be 1 or 2")
    if not (1 <= n and n + span <= chain.horizon + 1):
        raise ValidationError(f"time {n} with span {span} outside the horizon")
    if marginals is None:
        marginals = validate_chain(chain)
    k = chain.kernel(n)
    if span == 2:
        k = k @ chain.kernel(n + 1)
    rows = k[marginals[n] > 0]
    diff = np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)
    delta = 0.5 * float(diff.max())
    if span == 2:
        try:
            eps0 = ellipticity_constant(chain, marginals, max_lag=1).epsilon0
        except NotTwoStepElliptic:
            eps0 = None
        if eps0 is not None and delta > 1.0 - eps0 + 1e-12:
            raise InvariantBreach("two-step contraction", f"delta={delta} > 1-eps0={1 - eps0}")
    return delta


def bridge_distribution(chain: Chain, marginals: MarginalSet, n: int, x: int, z: int, dens=None) -> np.ndarray:
    """Law of ``X_{n+1}`` given ``X_n = x`` and ``X_{n+2} = z``.

    Returns
    -------
    ndarray
        ``y -> p_n(x, y) p_{n+1}(y, z) mu_{n+1}(y) / Z`` on ``S_{n+1}``.

    Raises
    ------
    ZeroBridgeMass
        If the normalizer ``Z`` vanishes.
    """
    if not 1 <= n <= chain.horizon - 1:
        raise ValidationError(f"bridge time {n} outside [1, {chain.horizon - 1}]")
    if dens is None:
        dens = densities(chain, marginals)
    w = dens[n - 1][x] * dens[n][:, z] * marginals[n + 1]
    total = w.sum()
    if not total > 0:
        raise ZeroBridgeMass(n, chain.states[n - 1][x], chain.states[n + 1][z])
    return w / total


def bridge_tensor(chain: Chain, marginals: MarginalSet, n: int, dens=None) -> np.ndarray:
    """All bridges at time ``n`` as an array ``B[x, y, z]``.

    Pairs ``(x, z)`` with zero bridge mass get an all-zero slice.
    """
    if dens is None:
        dens = densities(chain, marginals)
    w = dens[n - 1][:, :, None] * dens[n][None, :, :] * marginals[n + 1][None, :, None]
    tot = w.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, w / tot, 0.0)


def summand_means(chain: Chain, marginals: MarginalSet, functional: Functional) -> np.ndarray:
    """``E f_n(X_n, X_{n+1})`` for ``n = 1..N``."""
    return np.array(
        [float(marginals[n] @ (chain.kernel(n) * functional.f(n)).sum(axis=1)) for n in range(1, chain.horizon + 1)]
    )


def summand_variances(chain: Chain, marginals: MarginalSet, functional: Functional) -> np.ndarray:
    """``Var f_n(X_n, X_{n+1})`` for ``n = 1..N``."""
    out = np.empty(chain.horizon)
    for n in range(1, chain.horizon + 1):
        joint = marginals[n][:, None] * chain.kernel(n)
        f = functional.f(n)
        m = float((joint * f).sum())
        out[n - 1] = float((joint * (f - m) ** 2).sum())
    return out


@dataclass(frozen=True)
class CovarianceMixingReport:
    """Outcome of :func:`covariance_mixing_check`."""

    max_ratio: float
    worst_pair: tuple
    n_pairs: int
    cmix: float
    theta: float

    @property
    def passed(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-9


def covariance_mixing_check(chain: Chain, marginals: MarginalSet, functional: Functional,
                            report: EllipticityReport | None = None, max_lag: int | None = None) -> CovarianceMixingReport:
    """Compare exact covariances with the exponential mixing bound.

    Every pair ``m < n`` (up to ``max_lag``) is checked against
    ``|Cov(f_m, f_n)| <= cmix theta^(n-m) sd(f_m) sd(f_n)`` and the largest
    ratio of the two sides is reported.
    """
    from .exact_dist import pair_covariances

    if report is None:
        report = ellipticity_constant(chain, marginals, max_lag=max_lag)
    cov = pair_covariances(chain, functional, marginals, max_lag=max_lag)
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    N = chain.horizon
    worst, pair, count = 0.0, (0, 0), 0
    for m in range(N):
        for n in range(m + 1, N):
            if np.isnan(cov[m, n]):
                continue
            scale = report.cmix * report.theta ** (n - m) * sd[m] * sd[n]
            count += 1
            if scale <= 0:
                if abs(cov[m, n]) > 1e-14:
                    worst, pair = np.inf, (m + 1, n + 1)
                continue
            r = abs(cov[m, n]) / scale
            if r > worst:
                worst, pair = r, (m + 1, n + 1)
    return CovarianceMixingReport(float(worst), pair, count, report.cmix, report.theta)
