"""Markov chains in a random environment driven by finite ergodic noise.

A *family* maps each noise symbol to a transition matrix and a summand
matrix on a common state space.  A noise realization ``omega`` is a point
of the symbol shift (Bernoulli or Markov noise) or of the circle (an
irrational rotation read through an arc partition); the quenched chain
uses ``pi_n = pi(T^n omega)`` and ``f_n = f(T^n omega)`` for ``n = 1..N``.
Everything downstream is exact: the quenched chains are finite and go
through the same dynamic programs as any other chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .chain_core import Chain, Functional, validate_chain
from .errors import InconclusiveAtHorizon, NonUniformlyElliptic, ValidationError
from .exact_dist import exact_sn_distribution, variance_curve
from .hexagons import balance_law, default_xi_grid, structure_constants
from .reduction import classify_range


@dataclass(frozen=True)
class Family:
    """Symbol-indexed kernels and summands on one state space.

    Attributes
    ----------
    kernels : dict
        ``symbol -> transition matrix``.
    functionals : dict
        ``symbol -> summand matrix f(x, y)``.
    lattice : float, optional
        Common lattice step of every summand.
    epsilon0 : float
        Smallest two-step transition probability over ordered symbol pairs.
    """

    kernels: dict
    functionals: dict
    lattice: float | None = None
    epsilon0: float = field(default=0.0)

    def __post_init__(self):
        if set(self.kernels) != set(self.functionals):
            raise ValidationError("kernels and functionals must use the same symbols")
        if not self.kernels:
            raise ValidationError("a family needs at least one symbol")
        ks = {s: np.asarray(k, dtype=float) for s, k in self.kernels.items()}
        fs = {s: np.asarray(v, dtype=float) for s, v in self.functionals.items()}
        shapes = {k.shape for k in ks.values()} | {v.shape for v in fs.values()}
        if len(shapes) != 1:
            raise ValidationError(f"family matrices have different shapes {sorted(shapes)}")
        eps = np.inf
        for a, b in product(ks, repeat=2):
            two = ks[a] @ ks[b]
            m = float(two.min())
            if m <= 0:
                raise NonUniformlyElliptic(f"two-step kernel {a}{b} has a zero entry")
            eps = min(eps, m)
        object.__setattr__(self, "kernels", ks)
        object.__setattr__(self, "functionals", fs)
        object.__setattr__(self, "epsilon0", float(eps))

    @property
    def symbols(self) -> list:
        return sorted(self.kernels)

    @property
    def size(self) -> int:
        return next(iter(self.kernels.values())).shape[0]


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class NoiseProcess:
    """Finite ergodic noise.

    Parameters
    ----------
    kind : {'bernoulli', 'markov', 'rotation'}
    symbols : sequence
        Alphabet (for a rotation, one symbol per arc).
    weights : array_like, optional
        Bernoulli probabilities.
    matrix : array_like, optional
        Markov transition matrix; its stationary vector starts the chain.
    alpha : float, optional
        Rotation angle in radians.
    arcs : array_like, optional
        Increasing arc boundaries in ``(0, 1)``; arc ``i`` is
        ``[arcs[i-1], arcs[i])`` with ``arcs[-1] = 0`` and ``arcs[len] = 1``.
    irrational : bool
        User assertion that ``alpha / 2 pi`` is irrational (recorded only).
    """

    kind: str
    symbols: tuple
    weights: np.ndarray | None = None
    matrix: np.ndarray | None = None
    alpha: float | None = None
    arcs: np.ndarray | None = None
    irrational: bool = False

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        k = len(self.symbols)
        if self.kind == "bernoulli":
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (k,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ValidationError("Bernoulli weights must be a probability vector over the symbols")
            object.__setattr__(self, "weights", w / w.sum())
        elif self.kind == "markov":
            P = np.asarray(self.matrix, dtype=float)
            if P.shape != (k, k) or np.any(P < 0) or np.abs(P.sum(axis=1) - 1).max() > 1e-12:
                raise ValidationError("Markov noise needs a stochastic matrix over the symbols")
            object.__setattr__(self, "matrix", P)
            from .chain_core import stationary_law

            object.__setattr__(self, "weights", stationary_law(P))
        elif self.kind == "rotation":
            if self.alpha is None:
                raise ValidationError("rotation noise needs an angle")
            arcs = np.asarray(self.arcs if self.arcs is not None else [], dtype=float)
            if arcs.size != k - 1 or np.any(np.diff(arcs) <= 0) or (arcs.size and (arcs[0] <= 0 or arcs[-1] >= 1)):
                raise ValidationError("rotation needs len(symbols) - 1 increasing arc boundaries in (0, 1)")
            object.__setattr__(self, "arcs", arcs)
        else:
            raise ValidationError(f"unknown noise kind {self.kind!r}")

    def realization(self, seed: int = 0, point: float | None = None) -> "Realization":
        """A noise point ``omega``.

        Shift noise is generated from ``seed``; a rotation starts at
        ``point`` in ``[0, 1)`` (drawn from ``seed`` when omitted).
        """
        if self.kind == "rotation" and point is None:
            point = float(np.random.default_rng(seed).random())
        return Realization(self, int(seed), 0, point)

    def rotation_orbit(self, point: float, count: int) -> np.ndarray:
        """Symbols of ``T^n point`` for ``n = 0..count-1`` (rotation only)."""
        x = np.mod(point + np.arange(count) * self.alpha / (2 * np.pi), 1.0)
        return np.searchsorted(self.arcs, x, side="right")


@dataclass(frozen=True)
class Realization:
    """Noise point ``T^offset omega``; symbols are indices into the alphabet."""

    noise: NoiseProcess
    seed: int
    offset: int = 0
    point: float | None = None

    def shift(self, k: int = 1) -> "Realization":
        return Realization(self.noise, self.seed, self.offset + k, self.point)

    def indices(self, count: int) -> np.ndarray:
        """Symbol indices of ``T^n omega`` for ``n = 0..count-1``."""
        total = self.offset + count
        noise = self.noise
        if noise.kind == "rotation":
            return noise.rotation_orbit(self.point, total)[self.offset:]
        u = np.random.default_rng(self.seed).random(total)
        if noise.kind == "bernoulli":
            out = np.searchsorted(np.cumsum(noise.weights), u, side="right")
        else:
            out = np.empty(total, dtype=int)
            cum = np.cumsum(noise.matrix, axis=1)
            last = len(noise.symbols) - 1
            state = min(int(np.searchsorted(np.cumsum(noise.weights), u[0], side="right")), last)
            out[0] = state
            for n in range(1, total):
                state = min(int(np.searchsorted(cum[state], u[n], side="right")), last)
                out[n] = state
        out = np.minimum(out, len(noise.symbols) - 1)
        return out[self.offset:]

    def symbols(self, count: int) -> list:
        return [self.noise.symbols[i] for i in self.indices(count)]


@dataclass(frozen=True)
class QuenchedChain:
    """Chain and functional realized along one noise trajectory."""

    chain: Chain
    functional: Functional
    symbols: tuple


def quench(noise: NoiseProcess, family: Family, N: int, omega: Realization, initial=None) -> QuenchedChain:
    """Quenched chain with ``pi_n = pi(T^n omega)`` for ``n = 1..N``.

    ``initial`` defaults to the uniform law on the state space.

    Raises
    ------
    NonUniformlyElliptic
        Raised when the family is built.
    """
    if set(noise.symbols) - set(family.kernels):
        raise ValidationError("noise alphabet has symbols missing from the family")
    syms = omega.symbols(N + 1)[1:]
    init = np.full(family.size, 1.0 / family.size) if initial is None else initial
    chain = Chain(tuple(family.kernels[s] for s in syms), init)
    fun = Functional(tuple(family.functionals[s] for s in syms), family.lattice)
    return QuenchedChain(chain, fun, tuple(syms))


# ---------------------------------------------------------------------------
# structure constants
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class WindowConstants:
    """Single-position ``u`` and ``d(xi)`` for one symbol window."""

    window: tuple
    u: float
    xis: np.ndarray
    d: np.ndarray


def quenched_structure_fn(family: Family, window, xis=None, marginal=None) -> WindowConstants:
    """Structure constants of the hexagons governed by three consecutive symbols.

    ``window = (s_1, s_2, s_3)`` are the symbols of the kernels at the three
    steps of a hexagon; ``marginal`` is the law of its first state (uniform
    when omitted, which matches position 3 of a uniformly started quenched
    chain).
    """
    window = tuple(window)
    if len(window) != 3:
        raise ValidationError("a window has three symbols")
    init = np.full(family.size, 1.0 / family.size) if marginal is None else np.asarray(marginal, dtype=float)
    chain = Chain(tuple(family.kernels[s] for s in window), init)
    fun = Functional(tuple(family.functionals[s] for s in window))
    law = balance_law(chain, validate_chain(chain), fun, 3)
    xis = default_xi_grid(fun, 16) if xis is None else np.asarray(xis, dtype=float)
    return WindowConstants(window, law.u(), xis, law.d(xis))


def window_table(family: Family, xis=None) -> dict:
    """``window -> WindowConstants`` for every window of the alphabet."""
    return {w: quenched_structure_fn(family, w, xis) for w in product(family.symbols, repeat=3)}


# ---------------------------------------------------------------------------
# variance growth and local limit theorem
# ---------------------------------------------------------------------------
def noise_draws(noise: NoiseProcess, trials: int, seed: int) -> list:
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    return [noise.realization(int(s)) for s in seeds]


@dataclass(frozen=True)
class VarianceGrowthReport:
    """``V_N^omega`` for each draw (rows) and horizon (columns)."""

    horizons: np.ndarray
    variances: np.ndarray
    seeds: tuple

    @property
    def per_step(self) -> np.ndarray:
        return self.variances / self.horizons[None, :]

    def spread(self) -> np.ndarray:
        """``(max - min) / mean`` of ``V_N / N`` across draws, per horizon."""
        r = self.per_step
        return (r.max(axis=0) - r.min(axis=0)) / r.mean(axis=0)

    def slope(self) -> float:
        """Least-squares slope of the mean of ``V_N^omega`` against ``N``."""
        mean = self.variances.mean(axis=0)
        if self.horizons.size == 1:
            return float(mean[0] / self.horizons[0])
        return float(np.polyfit(self.horizons, mean, 1)[0])


def quenched_variance_growth(noise: NoiseProcess, family: Family, horizons, trials: int = 32,
                             seed: int = 0) -> VarianceGrowthReport:
    """Exact quenched variances along independent noise draws."""
    horizons = np.asarray(sorted(int(n) for n in horizons))
    Nmax = int(horizons[-1])
    rows, seeds = [], []
    for omega in noise_draws(noise, trials, seed):
        q = quench(noise, family, Nmax, omega)
        curve = variance_curve(q.chain, q.functional)
        rows.append([curve.V(int(n)) for n in horizons])
        seeds.append(omega.seed)
    return VarianceGrowthReport(horizons, np.array(rows), tuple(seeds))


@dataclass(frozen=True)
class QuenchedLLTReport:
    """Exact point masses against the quenched Gaussian prediction."""

    N: int
    sigma2: float
    targets: np.ndarray
    exact: np.ndarray
    prediction: np.ndarray
    seeds: tuple
    skipped: dict

    @property
    def ratios(self) -> np.ndarray:
        return self.exact / self.prediction

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios)) if self.ratios.size else float("nan")


def quenched_llt_check(noise: NoiseProcess, family: Family, N: int, trials: int = 16, seed: int = 0,
                       z_rule: str = "round_mean", classify: bool = True) -> QuenchedLLTReport:
    """``P[S_N^omega = z_N]`` against ``exp(-(z_N - E S_N)^2 / 2 N s^2) / sqrt(2 pi N s^2)``.

    ``s^2`` pools ``V_N^omega / N`` over the draws.  With ``classify`` every
    realized chain is passed through :func:`classify_range`; draws whose
    essential range is not ``Z`` are skipped and the witness recorded.

    Parameters
    ----------
    z_rule : {'round_mean'}
        ``z_N`` is the lattice point nearest to ``E S_N^omega``.
    """
    if family.lattice is None or abs(family.lattice - 1.0) > 1e-12:
        raise ValidationError("the quenched local limit check needs an integer family")
    if z_rule != "round_mean":
        raise ValidationError(f"unknown z rule {z_rule!r}")
    used, skipped = [], {}
    for omega in noise_draws(noise, trials, seed):
        q = quench(noise, family, N, omega)
        if classify:
            marg = validate_chain(q.chain)
            stats = structure_constants(q.chain, marg, q.functional)
            try:
                rep = classify_range(stats, q.functional, q.chain, marg, strict=False)
                witness = str(rep.essential)
            except InconclusiveAtHorizon as exc:
                witness = f"inconclusive: {exc}"
            if witness != "1Z":
                skipped[omega.seed] = witness
                continue
        used.append((omega, q))
    if not used:
        return QuenchedLLTReport(N, float("nan"), np.array([]), np.array([]), np.array([]), (), skipped)
    curves = [variance_curve(q.chain, q.functional) for _, q in used]
    sigma2 = float(np.mean([c.V(N) for c in curves]) / N)
    targets, exact, pred = [], [], []
    for (omega, q), curve in zip(used, curves):
        dist = exact_sn_distribution(q.chain, q.functional)
        gamma = dist.offsets[-1]
        mean = curve.E(N)
        z = gamma + np.round(mean - gamma)
        targets.append(z)
        exact.append(dist.point_mass(z))
        pred.append(np.exp(-((z - mean) ** 2) / (2 * N * sigma2)) / np.sqrt(2 * np.pi * N * sigma2))
    return QuenchedLLTReport(N, sigma2, np.array(targets), np.array(exact), np.array(pred),
                             tuple(o.seed for o, _ in used), skipped)
