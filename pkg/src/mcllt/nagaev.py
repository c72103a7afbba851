"""Frequency-perturbed transfer operators and characteristic functions.

The operator ``L_{n, xi}`` acts on functions of ``X_{n+1}``::

    (L_{n, xi} v)(x) = E[exp(i xi f_n(X_n, X_{n+1})) v(X_{n+1}) | X_n = x]

so its matrix is ``pi_n(x, y) exp(i xi f_n(x, y))`` (equivalently
``p_n(x, y) exp(i xi f_n(x, y)) mu_{n+1}(y)``).  Applying the product
``L_{1, xi} ... L_{N, xi}`` to the constant function gives
``E_x exp(i xi S_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_core import Chain, Functional, MarginalSet, ellipticity_constant, validate_chain
from .errors import NullConditioningEvent, OffLattice, ValidationError
from .exact_dist import exact_mod_distribution, exact_sn_distribution
from .hexagons import HexagonStats, structure_constants

#: nodes of the first trapezoid rule in Fourier inversion
INVERSION_NODES = 2**12
#: flag fitted characteristic-function constants above this
FITTED_CONSTANT_LIMIT = 10.0


@dataclass(frozen=True)
class PerturbedOperator:
    """Matrix of ``L_{n, xi}``."""

    n: int
    xi: float
    matrix: np.ndarray

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def norm(self) -> float:
        """``L^inf -> L^inf`` operator norm: largest absolute row sum."""
        return float(np.abs(self.matrix).sum(axis=1).max())


def perturbed_operator(chain: Chain, functional: Functional, n: int, xi: float) -> PerturbedOperator:
    """``L_{n, xi}`` as a complex matrix."""
    m = chain.kernel(n) * np.exp(1j * xi * functional.f(n))
    return PerturbedOperator(n, float(xi), m)


def _backward(chain: Chain, functional: Functional, xis: np.ndarray, terminal: np.ndarray) -> np.ndarray:
    """``(L_1 ... L_N terminal)(x)`` for every frequency, shape ``(len(xis), |S_1|)``."""
    v = np.broadcast_to(terminal.astype(complex), (xis.size, terminal.size)).copy()
    for n in range(chain.horizon, 0, -1):
        P = chain.kernel(n)
        phase = np.exp(1j * xis[:, None, None] * functional.f(n)[None, :, :])
        v = np.einsum("kxy,ky->kx", P[None, :, :] * phase, v)
    return v


def char_fn(chain: Chain, marginals: MarginalSet | None, functional: Functional, xi, x: int | None = None):
    """``E exp(i xi S_N)`` by the backward operator product.

    Parameters
    ----------
    xi : float or array_like
        One or several frequencies.
    x : int, optional
        Start state; when omitted the initial law is averaged over.
        Pass ``x='all'`` for the per-state vector.

    Returns
    -------
    complex or ndarray
    """
    functional.check_against(chain)
    xis = np.atleast_1d(np.asarray(xi, dtype=float))
    v = _backward(chain, functional, xis, np.ones(chain.size(chain.horizon + 1)))
    if isinstance(x, str) and x == "all":
        out = v
    elif x is None:
        out = v @ chain.initial
    else:
        out = v[:, x]
    return out[0] if np.ndim(xi) == 0 else out


def conditional_char_fn(chain: Chain, marginals: MarginalSet | None, functional: Functional, xi, x: int, event):
    """``E_x[exp(i xi S_N) | X_{N+1} in event]``.

    Raises
    ------
    NullConditioningEvent
        If ``P_x(X_{N+1} in event) = 0``.
    """
    functional.check_against(chain)
    ind = np.zeros(chain.size(chain.horizon + 1))
    ind[np.asarray(event, dtype=int)] = 1.0
    xis = np.atleast_1d(np.asarray(xi, dtype=float))
    num = _backward(chain, functional, xis, ind)[:, x]
    prob = ind.copy()
    for n in range(chain.horizon, 0, -1):
        prob = chain.kernel(n) @ prob
    if not prob[x] > 0:
        raise NullConditioningEvent(f"P(X_(N+1) in {list(event)} | X_1 = {x}) = 0")
    out = num / prob[x]
    return out[0] if np.ndim(xi) == 0 else out


# ---------------------------------------------------------------------------
# operator decay
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DecayReport:
    """Five-fold product norms against ``exp(-eps_tilde d_n(xi)^2)``.

    ``norms[j, k]`` and ``bounds[j, k]`` refer to frequency ``xis[j]`` and
    position ``positions[k]``.
    """

    xis: np.ndarray
    positions: np.ndarray
    norms: np.ndarray
    bounds: np.ndarray
    eps_tilde: float
    char_abs: np.ndarray
    char_bound: np.ndarray
    fitted_constant: float

    @property
    def violations(self) -> int:
        return int((self.norms > self.bounds * (1 + 1e-12) + 1e-15).sum())

    @property
    def max_ratio(self) -> float:
        if self.norms.size == 0:
            return 0.0
        return float((self.norms / self.bounds).max())

    @property
    def constant_flagged(self) -> bool:
        return self.fitted_constant > FITTED_CONSTANT_LIMIT

    def rows(self):
        """CSV rows ``(xi, |Phi_N|, bound)``."""
        for j, xi in enumerate(self.xis):
            yield float(xi), float(self.char_abs[j]), float(self.char_bound[j])


def operator_decay_check(chain: Chain, marginals: MarginalSet | None, functional: Functional, xis,
                         stats: HexagonStats | None = None, epsilon0: float | None = None) -> DecayReport:
    """Norms of ``L_{n-4} ... L_n`` against the structure constants.

    ``eps_tilde = epsilon0^2 / 4``.  The characteristic function bound
    ``|Phi_N| <= C exp(-eps_tilde D_N(xi) / 5)`` is fitted with the smallest
    ``C`` over the frequency grid.
    """
    if marginals is None:
        marginals = validate_chain(chain)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    if stats is None:
        stats = structure_constants(chain, marginals, functional, xis)
    if epsilon0 is None:
        epsilon0 = ellipticity_constant(chain, marginals, max_lag=2).epsilon0
    eps_t = epsilon0**2 / 4.0
    N = chain.horizon
    positions = np.arange(5, N + 1)
    dmat = stats.d_at(xis)  # positions 3..N
    norms = np.empty((xis.size, positions.size))
    bounds = np.empty_like(norms)
    for j, xi in enumerate(xis):
        ops = [perturbed_operator(chain, functional, n, xi).matrix for n in range(1, N + 1)]
        for k, n in enumerate(positions):
            prod = ops[n - 5]
            for m in range(n - 4, n + 1):
                prod = prod @ ops[m - 1]
            norms[j, k] = np.abs(prod).sum(axis=1).max()
            bounds[j, k] = np.exp(-eps_t * dmat[j, n - 3] ** 2)
    phi = np.abs(char_fn(chain, marginals, functional, xis, x="all")).max(axis=1)
    DN = (dmat**2).sum(axis=1)
    shape = np.exp(-eps_t * DN / 5.0)
    C = float(max(1.0, (phi / shape).max()))
    return DecayReport(xis, positions, norms, bounds, eps_t, phi, C * shape, C)


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------
def fourier_inversion_point_prob(chain: Chain, marginals: MarginalSet | None, functional: Functional, z: float,
                                 x: int | None = None, nodes: int = INVERSION_NODES, tol: float = 1e-8,
                                 max_nodes: int = 2**18) -> float:
    """``P_x(S_N = z)`` from ``(t / 2 pi) int_{-pi/t}^{pi/t} Phi(xi) exp(-i xi z) d xi``.

    The integrand is periodic, so the trapezoid rule on ``nodes`` equispaced
    points is used and the node count doubled until successive estimates
    differ by less than ``tol``.

    Raises
    ------
    OffLattice
        If ``z`` is not in the coset ``gamma_N + t Z`` of ``S_N``.
    """
    if functional.lattice is None:
        raise ValidationError("Fourier inversion needs a lattice functional")
    t = functional.lattice
    gamma = float(functional.prefix(chain.horizon).offsets().sum())
    k = (z - gamma) / t
    if abs(k - round(k)) > 1e-9:
        raise OffLattice(f"{z} is not in {gamma} + {t} Z")

    def estimate(m):
        xis = -np.pi / t + (2 * np.pi / t) * np.arange(m) / m
        phi = char_fn(chain, marginals, functional, xis, x)
        return float(np.real((phi * np.exp(-1j * xis * z)).mean()))

    prev = estimate(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = estimate(nodes)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


# ---------------------------------------------------------------------------
# uniform distribution modulo t
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ModTReport:
    """``P_x(S_N in (a, b) + t Z | X_{N+1} in event)`` against ``|a - b| / t``."""

    probability: float
    target: float
    relative_error: float
    tolerance: float
    discretization: float

    @property
    def uniform(self) -> bool:
        return self.relative_error <= self.tolerance


def uniform_mod_t_test(chain: Chain, marginals: MarginalSet | None, functional: Functional, t: float, interval,
                       event=None, x: int | None = None, tolerance: float = 0.05, bins: int = 2**16) -> ModTReport:
    """Exact conditional probability of an arc of the circle ``R / t Z``.

    Lattice functionals are handled exactly; other functionals are rounded
    to ``t / bins`` and the worst displacement ``N t / (2 bins)`` is
    reported as ``discretization``.

    Raises
    ------
    NullConditioningEvent
    """
    a, b = interval
    if not 0 <= a < b <= t:
        raise ValidationError("interval must satisfy 0 <= a < b <= t")
    target = (b - a) / t
    lattice_exact = functional.lattice is not None and (
        abs(t / functional.lattice - round(t / functional.lattice)) < 1e-9)
    if lattice_exact:
        dist = exact_sn_distribution(chain, functional, from_state=x)
        terminal = event if event is not None else np.arange(chain.size(chain.horizon + 1))
        vals, probs = dist.law(terminal=terminal)
        tot = probs.sum()
        if not tot > 0:
            raise NullConditioningEvent("terminal event has zero probability")
        r = np.mod(vals, t)
        r = np.where(np.abs(r - t) < 1e-9, 0.0, r)
        inside = (r > a + 1e-9) & (r < b - 1e-9)
        if b - a >= t:
            inside = np.ones_like(inside)
        prob = float(probs[inside].sum() / tot)
        drift = 0.0
    else:
        table = exact_mod_distribution(chain, functional, t, bins, from_state=x)
        terminal = event if event is not None else np.arange(chain.size(chain.horizon + 1))
        tot = table.terminal_mass(terminal)
        if not tot > 0:
            raise NullConditioningEvent("terminal event has zero probability")
        prob = 1.0 if b - a >= t else table.arc_mass(a, b, terminal) / tot
        drift = chain.horizon * t / (2 * bins)
    return ModTReport(prob, target, abs(prob - target) / target, tolerance, drift)
