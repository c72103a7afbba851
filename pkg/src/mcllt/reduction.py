"""Cohomological reductions and range classification.

* :func:`gradient_decomposition` splits ``f = ftilde + grad a + c`` with an
  explicit potential built from bridge expectations; the residual is the
  conditional expectation of a hexagon balance, so its ``L^2`` norm is at
  most ``u_n``.
* :func:`integer_reduction` does the same with integer potentials for
  integer functionals.
* :func:`classify_range` reads the algebraic range off the value sets and
  the essential range off the structure constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from .chain_core import (
    Chain,
    Functional,
    MarginalSet,
    bridge_tensor,
    densities,
    summand_means,
    summand_variances,
    validate_chain,
)
from .errors import InconclusiveAtHorizon, InvariantBreach, NotIntegerValued, NotSummable, ZeroBridgeMass
from .hexagons import HexagonStats, default_xi_grid

#: threshold on max_n d_n(xi) for a frequency to count as a co-range point
CORANGE_TOL = 1e-8
#: relative growth over the last quarter below which a curve has plateaued
PLATEAU_TOL = 0.01
#: per-position growth of D_N over (N/2, N] relative to (N/4, N/2] at or
#: above this counts as divergence; between the plateau and this it is
#: inconclusive
DIVERGENCE_RATIO = 0.75
#: largest denominator tried when recognising commensurable values
MAX_DENOMINATOR = 10_000


# ---------------------------------------------------------------------------
# circular statistics
# ---------------------------------------------------------------------------
def circular_mean(angles, weights=None) -> float:
    """Angle in ``[-pi, pi)`` minimising ``E|exp(i(W - theta)) - 1|^2``."""
    angles = np.asarray(angles, dtype=float)
    w = np.full(angles.size, 1.0 / angles.size) if weights is None else np.asarray(weights, dtype=float)
    z = (w * np.exp(1j * angles)).sum()
    theta = float(np.angle(z)) if abs(z) > 0 else -np.pi
    return theta if theta < np.pi else -np.pi


def circular_variance(angles, weights=None) -> float:
    """``min_theta E|exp(i(W - theta)) - 1|^2 = 2 - 2 |E exp(iW)|``."""
    angles = np.asarray(angles, dtype=float)
    w = np.full(angles.size, 1.0 / angles.size) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    return float(2.0 - 2.0 * abs((w * np.exp(1j * angles)).sum()))


# ---------------------------------------------------------------------------
# gradient lemma
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GradientDecomposition:
    """``f_n = ftilde_n + a_{n+1}(y) - a_n(x) + c_n``.

    ``potentials[n-1]`` is ``a_n`` for ``n = 1..N+1`` (zero for ``n <= 2``),
    ``constants[n-1]`` is ``c_n`` and ``residual[n-1]`` is ``ftilde_n``.
    """

    potentials: tuple
    constants: np.ndarray
    residual: tuple

    def a(self, n: int) -> np.ndarray:
        return self.potentials[n - 1]

    def c(self, n: int) -> float:
        return float(self.constants[n - 1])

    def ftilde(self, n: int) -> np.ndarray:
        return self.residual[n - 1]

    def residual_norms(self, chain: Chain, marginals: MarginalSet) -> np.ndarray:
        """``||ftilde_n||_2`` under the law of ``(X_n, X_{n+1})``, ``n = 1..N``."""
        out = np.empty(chain.horizon)
        for n in range(1, chain.horizon + 1):
            joint = marginals[n][:, None] * chain.kernel(n)
            out[n - 1] = np.sqrt((joint * self.ftilde(n) ** 2).sum())
        return out

    def as_functionals(self, chain: Chain):
        """``(ftilde, gradient part, constant part)`` as functionals."""
        N = chain.horizon
        grad = Functional(tuple(self.a(n + 1)[None, :] - self.a(n)[:, None] for n in range(1, N + 1)))
        const = Functional(tuple(np.full(chain.kernel(n).shape, self.c(n)) for n in range(1, N + 1)))
        return Functional(self.residual), grad, const


def gradient_decomposition(chain: Chain, marginals: MarginalSet | None, functional: Functional) -> GradientDecomposition:
    """Split a functional into a small residual, a gradient and constants.

    For ``3 <= n <= N+1``::

        a_n(x) = sum_{z, y} mu_{n-2}(z) B_{n-2}(y | z, x) [f_{n-2}(z, y) + f_{n-1}(y, x)]
        c_n    = E f_{n-2}(X_{n-2}, X_{n-1})

    with ``B`` the bridge law of the middle point; ``a_1 = a_2 = 0`` and
    ``c_1 = c_2 = 0``.  The residual ``ftilde_n(x, y)`` equals minus the
    expected balance of a random hexagon whose bottom tail is ``(x, y)``.

    Raises
    ------
    ZeroBridgeMass
        Propagated when a required bridge has zero mass.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    functional.check_against(chain)
    N = chain.horizon
    dens = densities(chain, marginals)
    pots = [np.zeros(chain.size(1))]
    if N >= 1:
        pots.append(np.zeros(chain.size(2)))
    consts = np.zeros(N)
    means = summand_means(chain, marginals, functional)
    for n in range(3, N + 2):
        B = bridge_tensor(chain, marginals, n - 2, dens)  # (z, y, x)
        _require_bridges(chain, marginals, B, n - 2)
        pair = functional.f(n - 2)[:, :, None] + functional.f(n - 1)[None, :, :]
        a = np.einsum("z,zyx,zyx->x", marginals[n - 2], B, pair)
        pots.append(a)
        if n <= N:
            consts[n - 1] = means[n - 3]
    resid = tuple(
        functional.f(n) - pots[n][None, :] + pots[n - 1][:, None] - consts[n - 1] for n in range(1, N + 1)
    )
    return GradientDecomposition(tuple(pots), consts, resid)


def _require_bridges(chain, marginals, B, n):
    mass = B.sum(axis=1)
    live = (marginals[n][:, None] > 0) & (marginals[n + 2][None, :] > 0)
    bad = live & (mass <= 0)
    if bad.any():
        x, z = np.argwhere(bad)[0]
        raise ZeroBridgeMass(n, chain.states[n - 1][x], chain.states[n + 1][z])


# ---------------------------------------------------------------------------
# integer reduction
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IntegerReduction:
    """``f_n = g_n + a_{n+1}(y) - a_n(x) + c_n`` with integer pieces.

    Attributes
    ----------
    reference_path : tuple of int
        The states ``z_1..z_{N-1}`` the potentials are built from.
    potentials, constants, remainder
        ``a_n`` (``n = 1..N+1``), ``c_n`` and ``g_n`` (``n = 1..N``).
    second_moments : ndarray
        ``E g_n^2`` for ``n = 1..N``.
    bound : float
        ``10^3 K^4 sum_{n=3}^N u_n^2`` when structure constants are supplied.
    """

    reference_path: tuple
    potentials: tuple
    constants: np.ndarray
    remainder: tuple
    second_moments: np.ndarray
    bound: float | None = None

    @property
    def total(self) -> float:
        """``sum_{n=3}^N E g_n^2``."""
        return float(self.second_moments[2:].sum())

    @property
    def within_bound(self) -> bool | None:
        return None if self.bound is None else self.total <= self.bound + 1e-9


def _require_integer(functional: Functional) -> None:
    for n, v in enumerate(functional.values, start=1):
        if np.any(np.abs(v - np.rint(v)) > 1e-9):
            raise NotIntegerValued(f"functional matrix {n} has non-integer entries")


def _most_likely(values: np.ndarray, probs: np.ndarray) -> int:
    """Smallest value of largest total probability."""
    mass = {}
    for v, p in zip(values, probs):
        if p > 0:
            mass[int(v)] = mass.get(int(v), 0.0) + float(p)
    if not mass:
        return 0
    top = max(mass.values())
    return min(v for v, p in mass.items() if p >= top * (1 - 1e-12))


def integer_reduction(chain: Chain, marginals: MarginalSet | None, functional: Functional,
                      stats: HexagonStats | None = None) -> IntegerReduction:
    """Integer version of the gradient decomposition.

    For a reference path ``z`` let ``c_n = f_{n-2}(z_{n-2}, z_{n-1})`` and
    let ``a_n(x)`` be the smallest most likely value of
    ``f_{n-2}(z_{n-2}, Y) + f_{n-1}(Y, x)`` with ``Y`` bridging
    ``z_{n-2}`` to ``x``.  Then ``g_n = f_n - a_{n+1}(y) + a_n(x) - c_n``.

    ``E g_n^2`` only depends on ``(z_{n-2}, z_{n-1})``, so the path that
    minimises ``sum_{n=3}^N E g_n^2`` over positive-probability paths is
    found exactly by dynamic programming.

    Raises
    ------
    NotIntegerValued
    """
    if marginals is None:
        marginals = validate_chain(chain)
    functional.check_against(chain)
    _require_integer(functional)
    N = chain.horizon
    K = functional.bound
    f = [np.rint(functional.f(n)).astype(np.int64) for n in range(1, N + 1)]
    dens = densities(chain, marginals)

    # candidate potentials: cand[n][z] = a_n(.) built from z in S_{n-2}, n = 3..N+1
    cand = {}
    for n in range(3, N + 2):
        B = bridge_tensor(chain, marginals, n - 2, dens)
        rows = []
        for z in range(chain.size(n - 2)):
            pot = np.zeros(chain.size(n), dtype=np.int64)
            for x in range(chain.size(n)):
                vals = f[n - 3][z, :] + f[n - 2][:, x]
                pot[x] = _most_likely(vals, B[z, :, x])
            rows.append(pot)
        cand[n] = np.array(rows)

    if N < 3:
        path = tuple(int(np.argmax(marginals[m])) for m in range(1, max(N, 1)))
        pots = tuple(np.zeros(chain.size(n), dtype=np.int64) for n in range(1, N + 2))
        consts = np.zeros(N, dtype=np.int64)
        rem = tuple(f)
        return _finish(chain, marginals, path, pots, consts, rem, K, stats)

    # cost[n][z, w] = E g_n^2 with z = z_{n-2}, w = z_{n-1}
    def cost(n):
        joint = marginals[n][:, None] * chain.kernel(n)
        a_now = cand[n]  # (z, x)
        a_next = cand[n + 1]  # (w, y)
        c = f[n - 3]  # (z, w)
        g = (f[n - 1][None, None, :, :] - a_next[None, :, None, :] + a_now[:, None, :, None]
             - c[:, :, None, None])
        return np.einsum("xy,zwxy->zw", joint, g.astype(float) ** 2)

    # Viterbi over z_1 .. z_{N-1}; transitions must have positive probability
    best = np.where(marginals[1] > 0, 0.0, np.inf)
    back = []
    for n in range(3, N + 1):
        allowed = chain.kernel(n - 2) > 0
        tot = np.where(allowed, best[:, None] + cost(n), np.inf)
        arg = np.argmin(tot, axis=0)
        back.append(arg)
        best = tot[arg, np.arange(tot.shape[1])]
    last = int(np.argmin(best))
    path = [last]
    for arg in reversed(back):
        path.append(int(arg[path[-1]]))
    path = tuple(reversed(path))  # z_1 .. z_{N-1}

    pots = [np.zeros(chain.size(1), dtype=np.int64), np.zeros(chain.size(2), dtype=np.int64)]
    for n in range(3, N + 2):
        pots.append(cand[n][path[n - 3]])
    consts = np.zeros(N, dtype=np.int64)
    for n in range(3, N + 1):
        consts[n - 1] = f[n - 3][path[n - 3], path[n - 2]]
    rem = tuple(f[n - 1] - pots[n][None, :] + pots[n - 1][:, None] - consts[n - 1] for n in range(1, N + 1))
    return _finish(chain, marginals, path, tuple(pots), consts, rem, K, stats)


def _finish(chain, marginals, path, pots, consts, rem, K, stats):
    N = chain.horizon
    sm = np.array([float((marginals[n][:, None] * chain.kernel(n) * rem[n - 1].astype(float) ** 2).sum())
                   for n in range(1, N + 1)])
    bound = None if stats is None else 1e3 * K**4 * stats.UN
    return IntegerReduction(path, pots, consts, rem, sm, bound)


# ---------------------------------------------------------------------------
# ranges
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Group:
    """Closed subgroup of the reals: ``R``, ``t Z`` or ``{0}``."""

    kind: str  # "R", "lattice" or "zero"
    step: float | None = None

    def __str__(self) -> str:
        if self.kind == "R":
            return "R"
        if self.kind == "zero":
            return "{0}"
        return f"{self.step:g}Z"

    def contains(self, other: "Group", tol: float = 1e-8) -> bool:
        if self.kind == "R" or other.kind == "zero":
            return True
        if self.kind == "zero" or other.kind == "R":
            return False
        q = other.step / self.step
        return abs(q - round(q)) <= tol * max(1.0, q)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "step": self.step, "label": str(self)}


def _as_fraction(v: float) -> Fraction | None:
    fr = Fraction(v).limit_denominator(MAX_DENOMINATOR)
    return fr if abs(float(fr) - v) <= 1e-9 * max(1.0, abs(v)) else None


def algebraic_range(chain: Chain, marginals: MarginalSet | None, functional: Functional):
    """Group generated by differences of positive-probability values.

    Returns
    -------
    group : Group
    constants : ndarray
        Coset representatives ``c_n`` (``f_n - c_n`` lies in the group on the
        support).
    """
    if marginals is None:
        marginals = validate_chain(chain)
    diffs, reps = [], []
    for n in range(1, chain.horizon + 1):
        live = (marginals[n][:, None] > 0) & (chain.kernel(n) > 0)
        vals = np.unique(np.round(functional.f(n)[live], 12))
        reps.append(float(vals[0]))
        diffs.extend((vals[1:] - vals[0]).tolist())
    return _group_from_differences(diffs, reps)


@dataclass(frozen=True)
class RangeReport:
    """Outcome of :func:`classify_range`."""

    algebraic: Group
    constants: np.ndarray
    corange_candidates: np.ndarray
    essential: Group
    graininess: float
    center_tight: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algebraic": self.algebraic.to_dict(),
            "coset_constants": [float(c) for c in self.constants],
            "corange_candidates": [float(x) for x in self.corange_candidates],
            "essential": self.essential.to_dict(),
            "graininess": _json_float(self.graininess),
            "center_tight": bool(self.center_tight),
            "evidence": {k: _json_float(v) if isinstance(v, float) else v for k, v in self.evidence.items()},
        }


def _json_float(v: float):
    if np.isinf(v):
        return "inf"
    return float(v)


def candidate_frequencies(group: Group, K: float, default_grid: np.ndarray) -> np.ndarray:
    """Frequencies where a co-range point could sit.

    For an algebraic range ``g Z`` these are ``2 pi j / (m g)`` with
    ``1 <= j <= m <= 12 K / g``; the default grid is always added.
    """
    pts = list(np.asarray(default_grid, dtype=float))
    if group.kind == "lattice":
        g = group.step
        mmax = max(1, int(np.floor(12 * K / g + 1e-9)))
        for m in range(1, mmax + 1):
            for j in range(1, m + 1):
                if gcd(j, m) == 1:
                    pts.append(2 * np.pi * j / (m * g))
    pts = np.unique(np.round(np.array(pts), 12))
    return pts[pts > 0]


def _plateaued(curve: np.ndarray, tol: float = PLATEAU_TOL) -> tuple:
    """Whether a nondecreasing curve grew by less than ``tol`` over its last quarter."""
    if curve.size == 0:
        return True, 0.0
    end = float(curve[-1])
    q = max(1, curve.size // 4)
    start = float(curve[-1 - q]) if curve.size > q else 0.0
    if end <= 1e-12:
        return True, 0.0
    rel = (end - start) / end
    return rel < tol, rel


def classify_range(stats: HexagonStats, functional: Functional, chain: Chain | None = None,
                   marginals: MarginalSet | None = None, plateau_tol: float = PLATEAU_TOL,
                   strict: bool = True) -> RangeReport:
    """Algebraic range, co-range candidates, essential range and graininess.

    Parameters
    ----------
    stats : HexagonStats
        Structure constants of ``functional`` (their balance laws are used to
        evaluate every candidate frequency).
    functional : Functional
    chain, marginals : optional
        Needed for the support-aware algebraic range; without them every
        entry of ``f_n`` counts as possible.
    plateau_tol : float
        Relative growth of ``U_N`` over the last quarter that still counts
        as bounded.
    strict : bool
        Raise :class:`InconclusiveAtHorizon` on ambiguous trends; otherwise
        record them in the evidence.

    Raises
    ------
    InconclusiveAtHorizon
        When the growth of ``D_N(xi)`` at some candidate cannot be decided.
    """
    if chain is not None:
        alg, consts = algebraic_range(chain, marginals, functional)
    else:
        alg, consts = _algebraic_from_values(functional)
    K = functional.bound
    grid = candidate_frequencies(alg, K, default_xi_grid(functional))
    dmat = stats.d_at(grid)  # (xi, position)
    maxd = dmat.max(axis=1) if dmat.shape[1] else np.zeros(grid.size)
    zero = maxd < CORANGE_TOL
    evidence = {"U_N": float(stats.UN)}

    tight, rel = _plateaued(stats.U_curve(), plateau_tol)
    evidence["U_growth_last_quarter"] = float(rel)

    # growth test on frequencies that are not exact zeros
    npos = stats.positions.size
    ambiguous = []
    if npos >= 4 and not tight:
        N = int(stats.positions[-1])
        cuts = [max(3, N // 4), max(3, N // 2), N]
        D = np.stack([(dmat[:, stats.positions <= c] ** 2).sum(axis=1) for c in cuts], axis=1)
        for j in np.flatnonzero(~zero):
            if D[j, -1] <= 0:
                continue
            if (D[j, -1] - D[j, 1]) <= plateau_tol * D[j, -1]:
                zero[j] = True  # summable tail: co-range evidence
                continue
            early = (D[j, 1] - D[j, 0]) / max(cuts[1] - cuts[0], 1)
            late = (D[j, 2] - D[j, 1]) / max(cuts[2] - cuts[1], 1)
            if early > 0 and late < DIVERGENCE_RATIO * early:
                ambiguous.append(float(grid[j]))
    candidates = grid[zero]
    evidence["ambiguous_frequencies"] = ambiguous
    if ambiguous and strict:
        raise InconclusiveAtHorizon(f"growth of D_N is ambiguous at xi = {ambiguous[:5]}")

    if tight:
        essential, delta = Group("zero"), np.inf
    elif candidates.size:
        xi_star = float(candidates.min())
        t = 2 * np.pi / xi_star
        if alg.kind == "lattice":
            m = t / alg.step
            if abs(m - round(m)) < 1e-6:
                t = round(m) * alg.step
        essential, delta = Group("lattice", t), t
        if alg.kind == "lattice" and _is_integer_group(alg) and not t <= 12 * K + 1e-9:
            raise InvariantBreach("essential step bound", f"step {t} exceeds 12K = {12 * K}")
    else:
        essential, delta = Group("R"), 0.0
    if not alg.contains(essential):
        raise InvariantBreach("essential range inside algebraic range", f"{essential} not in {alg}")
    return RangeReport(alg, consts, candidates, essential, float(delta), bool(tight), evidence)


def _is_integer_group(group: Group) -> bool:
    return group.kind == "lattice" and abs(group.step - round(group.step)) < 1e-9


def _algebraic_from_values(functional: Functional):
    diffs, reps = [], []
    for v in functional.values:
        vals = np.unique(np.round(v, 12))
        reps.append(float(vals[0]))
        diffs.extend((vals[1:] - vals[0]).tolist())
    return _group_from_differences(diffs, reps)


def _group_from_differences(diffs, reps):
    """Closed group generated by ``diffs`` and coset representatives of ``reps``."""
    diffs = [d for d in diffs if abs(d) > 1e-12]
    if not diffs:
        return Group("zero"), np.array(reps)
    fracs = [_as_fraction(d) for d in diffs]
    if any(fr is None for fr in fracs):
        return Group("R"), np.array(reps)
    den = 1
    for fr in fracs:
        den = den * fr.denominator // gcd(den, fr.denominator)
    num = 0
    for fr in fracs:
        num = gcd(num, abs(fr.numerator * (den // fr.denominator)))
    step = num / den
    consts = np.array([r - step * np.floor(r / step + 1e-9) for r in reps])
    return Group("lattice", float(step)), consts


# ---------------------------------------------------------------------------
# center tightness
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CenterTightVerdict:
    """Bounded or growing variance, with the empirical sandwich constant."""

    bounded: bool
    sandwich_constant: float
    U_growth: float
    V_growth: float

    @property
    def verdict(self) -> str:
        return "bounded" if self.bounded else "growing"


def center_tight_verdict(stats: HexagonStats, variance_curve, plateau_tol: float = PLATEAU_TOL,
                         burn_in: int | None = None) -> CenterTightVerdict:
    """Compare the growth of ``U_N`` and ``V_N``.

    Parameters
    ----------
    stats : HexagonStats
    variance_curve : VarianceCurve or array_like
        ``V_n`` for ``n = 1..N``.
    plateau_tol : float
        Relative increase over the last quarter that counts as a plateau.
    burn_in : int, optional
        Smallest ``n`` used for the sandwich constant; defaults to
        ``min(50, N // 2)``.
    """
    V = np.asarray(getattr(variance_curve, "var", variance_curve), dtype=float)
    N = V.size
    U_curve = stats.U_curve()
    u_ok, u_rel = _plateaued(U_curve, plateau_tol)
    v_ok, v_rel = _plateaued(V, plateau_tol)
    burn_in = min(50, N // 2) if burn_in is None else burn_in
    ratios = []
    for n in range(max(burn_in, 3), N + 1):
        U = float(U_curve[n - 3])
        Vn = float(V[n - 1])
        if U > 0 and Vn > 0:
            ratios.append(max(Vn / U, U / Vn))
    C1 = float(max(ratios)) if ratios else float("nan")
    return CenterTightVerdict(bool(u_ok and v_ok), C1, float(u_rel), float(v_rel))


# ---------------------------------------------------------------------------
# summable variances
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SummableReport:
    """Monte-Carlo oscillation of centred partial sums over the last quarter."""

    max_oscillation: float
    median_oscillation: float
    tail_sd: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.median_oscillation <= 3.0 * self.tail_sd


def sample_paths(chain: Chain, samples: int, seed: int = 0) -> np.ndarray:
    """Simulate ``samples`` trajectories ``X_1..X_{N+1}`` (state indices)."""
    rng = np.random.default_rng(seed)
    N = chain.horizon
    paths = np.empty((samples, N + 1), dtype=np.int64)
    cdf = np.cumsum(chain.initial)
    paths[:, 0] = np.minimum(np.searchsorted(cdf, rng.random(samples), side="right"), cdf.size - 1)
    for n in range(1, N + 1):
        cum = np.cumsum(chain.kernel(n), axis=1)
        u = rng.random(samples)
        rows = cum[paths[:, n - 1]]
        nxt = (rows <= u[:, None]).sum(axis=1)
        paths[:, n] = np.minimum(nxt, cum.shape[1] - 1)
    return paths


def summable_variance_convergence_check(chain: Chain, functional: Functional, samples: int = 200, seed: int = 0,
                                        tail_fraction: float = 0.25) -> SummableReport:
    """Monte-Carlo evidence that centred partial sums converge.

    Raises
    ------
    NotSummable
        If the variances of the second half carry more than
        ``tail_fraction`` of the total.
    """
    marginals = validate_chain(chain)
    functional.check_against(chain)
    N = chain.horizon
    var = summand_variances(chain, marginals, functional)
    total = var.sum()
    if total > 0 and var[N // 2:].sum() > tail_fraction * total:
        raise NotSummable("summand variances do not decay")
    means = summand_means(chain, marginals, functional)
    paths = sample_paths(chain, samples, seed)
    incr = np.stack([functional.f(n)[paths[:, n - 1], paths[:, n]] - means[n - 1] for n in range(1, N + 1)], axis=1)
    partial = np.cumsum(incr, axis=1)
    start = N - max(1, N // 4)
    window = partial[:, start - 1:] if start >= 1 else partial
    osc = window.max(axis=1) - window.min(axis=1)
    tail_sd = float(np.sqrt(var[start:].sum()))
    return SummableReport(float(osc.max()), float(np.median(osc)), tail_sd, samples)
