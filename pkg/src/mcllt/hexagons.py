"""Hexagon measures, balances and structure constants.

A hexagon at position ``n`` (``3 <= n <= N``) is a pair of length-three
paths from ``x_{n-2}`` to ``y_{n+1}``::

    top:     x_{n-2} -> x_{n-1} -> x_n -> y_{n+1}
    bottom:  x_{n-2} -> y_{n-1} -> y_n -> y_{n+1}

It is sampled by drawing ``(x_{n-2}, x_{n-1})`` and, independently,
``(y_n, y_{n+1})`` from the chain, then filling the two middle points with
bridges.  Its balance is the difference of the two path sums, and the
structure constants are the root mean squares

    u_n = E[Gamma^2]^(1/2),   d_n(xi) = E|exp(i xi Gamma) - 1|^2^(1/2).

Everything here is an exact finite sum over the six coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .chain_core import Chain, Functional, MarginalSet, bridge_tensor, densities, validate_chain
from .errors import TooManyHexagons, ValidationError

#: refuse positions with more hexagons than this
HEXAGON_GUARD = 10_000_000
#: decimals kept when grouping equal balances
_BALANCE_DECIMALS = 10


@dataclass(frozen=True)
class Hexagon:
    """Coordinates ``(x_{n-2}; x_{n-1}, y_{n-1}; x_n, y_n; y_{n+1})``."""

    position: int
    start: int
    top_1: int
    bottom_1: int
    top_2: int
    bottom_2: int
    end: int

    @property
    def top(self) -> tuple:
        return (self.start, self.top_1, self.top_2, self.end)

    @property
    def bottom(self) -> tuple:
        return (self.start, self.bottom_1, self.bottom_2, self.end)


@dataclass(frozen=True)
class HexagonMeasure:
    """Weights of every hexagon at one position.

    ``weights[a, b, p, q, r, s]`` is the mass of the hexagon with
    ``x_{n-2}=a, x_{n-1}=b, y_{n-1}=p, x_n=q, y_n=r, y_{n+1}=s``.
    """

    position: int
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __iter__(self) -> Iterator[tuple]:
        """Yield ``(Hexagon, weight)`` for every hexagon of positive weight."""
        for idx in zip(*np.nonzero(self.weights)):
            a, b, p, q, r, s = (int(i) for i in idx)
            yield Hexagon(self.position, a, b, p, q, r, s), float(self.weights[idx])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.weights))


def _check_position(chain: Chain, n: int) -> None:
    if not 3 <= n <= chain.horizon:
        raise ValidationError(f"hexagon position {n} outside [3, {chain.horizon}]")


def hexagon_count(chain: Chain, n: int) -> int:
    """Number of coordinate tuples at position ``n``."""
    return (chain.size(n - 2) * chain.size(n - 1) ** 2 * chain.size(n) ** 2 * chain.size(n + 1))


def hexagon_measure(chain: Chain, marginals: MarginalSet, n: int, dens=None, guard: int = HEXAGON_GUARD) -> HexagonMeasure:
    """Exact hexagon weights at position ``n``.

    Raises
    ------
    TooManyHexagons
        If the six-coordinate space has more than ``guard`` points.

    Notes
    -----
    When a bridge has zero mass its slice is dropped, so the weights only
    sum to one on two-step elliptic chains.
    """
    _check_position(chain, n)
    count = hexagon_count(chain, n)
    if count > guard:
        raise TooManyHexagons(n, count)
    if dens is None:
        dens = densities(chain, marginals)
    head = marginals[n - 2][:, None] * chain.kernel(n - 2)  # (a, b)
    tail = marginals[n][:, None] * chain.kernel(n)  # (r, s)
    top_bridge = bridge_tensor(chain, marginals, n - 1, dens)  # (b, q, s)
    bottom_bridge = bridge_tensor(chain, marginals, n - 2, dens)  # (a, p, r)
    w = np.einsum("ab,rs,bqs,apr->abpqrs", head, tail, top_bridge, bottom_bridge, optimize=True)
    w.setflags(write=False)
    return HexagonMeasure(n, w)


def balance(functional: Functional, hexagon: Hexagon) -> float:
    """Top path sum minus bottom path sum."""
    n = hexagon.position
    f2, f1, f0 = functional.f(n - 2), functional.f(n - 1), functional.f(n)
    top = f2[hexagon.start, hexagon.top_1] + f1[hexagon.top_1, hexagon.top_2] + f0[hexagon.top_2, hexagon.end]
    bottom = (f2[hexagon.start, hexagon.bottom_1] + f1[hexagon.bottom_1, hexagon.bottom_2]
              + f0[hexagon.bottom_2, hexagon.end])
    return float(top - bottom)


def balance_array(functional: Functional, n: int) -> np.ndarray:
    """Balances of all hexagons at position ``n`` in the layout of :class:`HexagonMeasure`."""
    f2, f1, f0 = functional.f(n - 2), functional.f(n - 1), functional.f(n)
    top = f2[:, :, None, None, None, None] + f1[None, :, None, :, None, None] + f0[None, None, None, :, None, :]
    bottom = f2[:, None, :, None, None, None] + f1[None, None, :, None, :, None] + f0[None, None, None, None, :, :]
    return top - bottom


@dataclass(frozen=True)
class BalanceLaw:
    """Distribution of the balance at one position: atoms and weights."""

    position: int
    values: np.ndarray
    weights: np.ndarray

    def u(self) -> float:
        return float(np.sqrt(max((self.weights * self.values**2).sum(), 0.0)))

    def d(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        phase = np.outer(xi, self.values)
        sq = (self.weights[None, :] * 2.0 * (1.0 - np.cos(phase))).sum(axis=1)
        return np.sqrt(np.clip(sq, 0.0, None))

    def mean(self) -> float:
        return float((self.weights * self.values).sum())


def balance_law(chain: Chain, marginals: MarginalSet, functional: Functional, n: int, dens=None,
                guard: int = HEXAGON_GUARD) -> BalanceLaw:
    """Exact law of the balance of a random hexagon at position ``n``."""
    hm = hexagon_measure(chain, marginals, n, dens, guard)
    gam = balance_array(functional, n)
    gam = np.broadcast_to(gam, hm.weights.shape)
    live = hm.weights > 0
    vals = np.round(gam[live], _BALANCE_DECIMALS)
    atoms, inverse = np.unique(vals, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=hm.weights[live], minlength=atoms.size)
    return BalanceLaw(n, atoms, weights)


@dataclass(frozen=True)
class HexagonStats:
    """Structure constants of a functional.

    Attributes
    ----------
    positions : ndarray
        The positions ``3..N``.
    u : ndarray
        ``u_n`` for each position.
    xis : ndarray
        Frequencies at which ``d`` was evaluated.
    d : ndarray
        ``d[j, k] = d_{positions[k]}(xis[j])``.
    UN : float
        ``sum_n u_n^2``.
    DN : ndarray
        ``DN[j] = sum_n d_n(xis[j])^2``.
    laws : tuple of BalanceLaw
        Balance distributions, so further frequencies can be evaluated.
    """

    positions: np.ndarray
    u: np.ndarray
    xis: np.ndarray
    d: np.ndarray
    UN: float
    DN: np.ndarray
    laws: tuple

    def d_at(self, xi) -> np.ndarray:
        """``d_n(xi)`` for all positions, as an array ``(len(xi), positions)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if not self.laws:
            return np.zeros((xi.size, 0))
        return np.stack([law.d(xi) for law in self.laws], axis=1)

    def D_at(self, xi, upto: int | None = None) -> np.ndarray:
        """``D_N(xi)`` summed over positions up to ``upto``."""
        dd = self.d_at(xi)
        if upto is not None:
            dd = dd[:, self.positions <= upto]
        return (dd**2).sum(axis=1)

    def U_upto(self, upto: int) -> float:
        return float((self.u[self.positions <= upto] ** 2).sum())

    def U_curve(self) -> np.ndarray:
        """Cumulative ``U_n`` for ``n = 3..N``."""
        return np.cumsum(self.u**2)

    def rows(self):
        """CSV rows ``(n, u_n, xi, d_n)``."""
        for k, n in enumerate(self.positions):
            for j, xi in enumerate(self.xis):
                yield int(n), float(self.u[k]), float(xi), float(self.d[j, k])


def default_xi_grid(functional: Functional, size: int = 64) -> np.ndarray:
    """``size`` equispaced frequencies on ``(0, 2 pi / delta_min]``.

    ``delta_min`` is the smallest nonzero gap between values of a single
    summand matrix.
    """
    gaps = []
    for v in functional.values:
        u = np.unique(np.round(v, 12))
        if u.size > 1:
            gaps.append(np.diff(u).min())
    delta_min = min(gaps) if gaps else 1.0
    top = 2 * np.pi / delta_min
    return top * np.arange(1, size + 1) / size


def structure_constants(chain: Chain, marginals: MarginalSet | None, functional: Functional,
                        xis: Sequence[float] | None = None, guard: int = HEXAGON_GUARD) -> HexagonStats:
    """Exact ``u_n``, ``d_n(xi)`` and their sums over ``3 <= n <= N``.

    Parameters
    ----------
    chain, marginals, functional
    xis : sequence of float, optional
        Frequencies; defaults to :func:`default_xi_grid`.
    guard : int
        Maximum number of hexagons per position.

    Raises
    ------
    TooManyHexagons
    """
    if marginals is None:
        marginals = validate_chain(chain)
    functional.check_against(chain)
    xis = default_xi_grid(functional) if xis is None else np.asarray(xis, dtype=float)
    N = chain.horizon
    dens = densities(chain, marginals)
    laws = []
    cache = {}
    for n in range(3, N + 1):
        key = _position_key(chain, marginals, functional, n)
        if key is not None and key in cache:
            law = cache[key]
            laws.append(BalanceLaw(n, law.values, law.weights))
            continue
        law = balance_law(chain, marginals, functional, n, dens, guard)
        if key is not None:
            cache[key] = law
        laws.append(law)
    positions = np.arange(3, N + 1)
    u = np.array([law.u() for law in laws])
    d = np.stack([law.d(xis) for law in laws], axis=1) if laws else np.zeros((xis.size, 0))
    return HexagonStats(positions, u, xis, d, float((u**2).sum()), (d**2).sum(axis=1), tuple(laws))


def _position_key(chain, marginals, functional, n):
    """Hashable fingerprint of everything a position depends on."""
    parts = []
    for m in (n - 2, n - 1, n):
        parts.append(chain.kernel(m).tobytes())
        parts.append(functional.f(m).tobytes())
    parts.append(np.round(marginals[n - 2], 15).tobytes())
    parts.append(np.round(marginals[n - 1], 15).tobytes())
    parts.append(np.round(marginals[n], 15).tobytes())
    parts.append(np.round(marginals[n + 1], 15).tobytes())
    return tuple(parts)
