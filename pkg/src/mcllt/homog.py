"""Time-homogeneous chains: asymptotic variance, reducibility and eigenfunctions.

Everything here takes one transition matrix ``kernel``, its stationary law
``mu`` and a summand matrix ``f[x, y]``.  Single-position structure
constants are evaluated on a three-step stationary chain, which is all a
homogeneous chain needs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .chain_core import Chain, Functional, ellipticity_constant, validate_chain
from .errors import DegenerateVariance, InconsistentPhases, NotStationary, ValidationError
from .hexagons import balance_law, default_xi_grid
from .reduction import _group_from_differences, gradient_decomposition

#: stop summing correlations once a term is below this
GREEN_KUBO_TOL = 1e-14
#: zero test for single-position structure constants
ZERO_TOL = 1e-8
#: projective distance at which the Birkhoff iteration stops
BIRKHOFF_TOL = 1e-12


def _check(kernel, mu, f):
    kernel = np.asarray(kernel, dtype=float)
    f = np.asarray(f, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ValidationError("kernel must be square")
    if f.shape != kernel.shape:
        raise ValidationError(f"f has shape {f.shape}, expected {kernel.shape}")
    if mu.shape != (kernel.shape[0],):
        raise ValidationError("mu has the wrong length")
    if np.abs(mu @ kernel - mu).max() > 1e-10:
        raise NotStationary(f"|mu P - mu| = {np.abs(mu @ kernel - mu).max():.3g}")
    return kernel, mu, f


def _short_chain(kernel, mu, f, N: int = 3):
    chain = Chain.homogeneous(kernel, N, mu)
    return chain, Functional(tuple([f] * N))


def green_kubo_sigma2(kernel, mu, f, tol: float = GREEN_KUBO_TOL, max_terms: int = 1_000_000) -> float:
    """``sigma^2 = E f_0^2 + 2 sum_{k >= 1} E f_0 f_k`` for the stationary chain.

    ``f`` is centered under the stationary law before summing.

    Raises
    ------
    NotStationary
        If ``mu P != mu``.
    """
    kernel, mu, f = _check(kernel, mu, f)
    joint = mu[:, None] * kernel
    f = f - (joint * f).sum()
    sigma2 = float((joint * f**2).sum())
    forward = (kernel * f).sum(axis=1)  # E[f_k | X_k = x]
    weight = (joint * f).sum(axis=0)  # sum_x mu(x) P(x, y) f(x, y)
    v = forward
    small = 0
    for _ in range(max_terms):
        term = float(weight @ v)
        sigma2 += 2.0 * term
        small = small + 1 if abs(term) < tol else 0
        if small >= 3:
            break
        v = kernel @ v
    return max(sigma2, 0.0)


@dataclass(frozen=True)
class Coboundary:
    """``f(x, y) = a(y) - a(x) + kappa`` on the support."""

    potential: np.ndarray
    kappa: float


def single_position_u(kernel, mu, f) -> float:
    """Structure constant ``u`` of the homogeneous chain."""
    chain, fun = _short_chain(kernel, mu, f)
    return balance_law(chain, validate_chain(chain), fun, 3).u()


def coboundary_detect(kernel, mu, f) -> Coboundary | None:
    """Recover ``(a, kappa)`` when ``f`` is a gradient plus a constant.

    Returns ``None`` if the structure constant is positive.  The potential is
    the gradient-lemma expectation, shifted to have zero stationary mean.
    """
    kernel, mu, f = _check(kernel, mu, f)
    if single_position_u(kernel, mu, f) > ZERO_TOL:
        return None
    chain, fun = _short_chain(kernel, mu, f, 4)
    dec = gradient_decomposition(chain, None, fun)
    a = dec.a(3)
    a = a - mu @ a
    kappa = float((mu[:, None] * kernel * f).sum())
    recon = a[None, :] - a[:, None] + kappa
    live = kernel > 0
    if np.abs(recon - f)[live].max() > ZERO_TOL:
        return None
    return Coboundary(a, kappa)


@dataclass(frozen=True)
class Periodicity:
    """``f(x, y) + a(x) - a(y) + kappa in t Z`` on the support."""

    step: float
    potential: np.ndarray
    kappa: float
    frequency: float
    eigenvalue: complex


def periodicity_detect(kernel, mu, f, grid=None) -> Periodicity | None:
    """Smallest ``xi > 0`` with ``d(xi) = 0`` and the matching coset identity.

    The balances of a hexagon generate a closed group; when it is ``s Z`` the
    first zero of ``d`` sits at ``2 pi / s`` (confirmed numerically together
    with a scan over ``grid``).  The phase function is propagated along a
    breadth-first spanning tree of the support graph from the eigen equation
    ``exp(i xi f(x, y)) v(y) = lambda v(x)``; every non-tree edge is then
    checked.

    Raises
    ------
    DegenerateVariance
        If ``sigma^2 = 0``.
    InconsistentPhases
        If a cycle of the support graph carries a nonzero phase defect.
    """
    kernel, mu, f = _check(kernel, mu, f)
    if green_kubo_sigma2(kernel, mu, f) <= 1e-12:
        raise DegenerateVariance("periodicity needs sigma^2 > 0")
    chain, fun = _short_chain(kernel, mu, f)
    law = balance_law(chain, validate_chain(chain), fun, 3)
    group, _ = _group_from_differences(list(law.values[law.weights > 0]), [0.0])
    grid = default_xi_grid(fun) if grid is None else np.asarray(grid, dtype=float)
    zeros = grid[law.d(grid) < ZERO_TOL]
    if group.kind == "lattice":
        xi = 2 * np.pi / group.step
        if law.d(xi)[0] >= ZERO_TOL:
            return None
        if zeros.size:
            xi = min(xi, float(zeros.min()))
    elif zeros.size:
        xi = float(zeros.min())
    else:
        return None
    L = kernel * np.exp(1j * xi * f)
    vals = np.linalg.eigvals(L)
    lam = vals[np.argmax(np.abs(vals))]
    if abs(abs(lam) - 1.0) > 1e-8:
        return None
    arg_lam = float(np.angle(lam))
    theta = xi * f
    size = kernel.shape[0]
    phase = np.full(size, np.nan)
    phase[0] = 0.0
    live = kernel > 0
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in range(size):
            if live[x, y] and np.isnan(phase[y]):
                phase[y] = phase[x] + arg_lam - theta[x, y]
                queue.append(y)
            if live[y, x] and np.isnan(phase[y]):
                phase[y] = phase[x] - arg_lam + theta[y, x]
                queue.append(y)
    if np.isnan(phase).any():
        raise ValidationError("support graph is not connected")
    defect = np.angle(np.exp(1j * (theta + phase[None, :] - phase[:, None] - arg_lam)))
    worst = float(np.abs(defect[live]).max())
    if worst > 1e-8:
        raise InconsistentPhases(f"phase defect {worst:.3g} on a support cycle")
    step = 2 * np.pi / xi
    a = -phase / xi
    a = a - a.min()
    kappa = -arg_lam / xi
    kappa = kappa - step * np.floor(kappa / step + 1e-12)
    coset = f + a[:, None] - a[None, :] + kappa
    resid = coset / step - np.round(coset / step)
    if np.abs(resid[live]).max() * step > 1e-8:
        raise InconsistentPhases("coset identity fails after phase reconstruction")
    return Periodicity(float(step), a, float(kappa), float(xi), complex(lam))


# ---------------------------------------------------------------------------
# Birkhoff iteration
# ---------------------------------------------------------------------------
def hilbert_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Hilbert projective distance between two positive vectors."""
    r = u / v
    return float(np.log(r.max() / r.min()))


@dataclass(frozen=True)
class BirkhoffResult:
    """Fixed point ``L h = exp(p) h`` with ``mu . h = 1``.

    ``distances`` are the successive projective distances and
    ``contraction`` the largest two-step ratio ``d_{k+2} / d_k`` observed;
    ``bound = tanh(Delta / 4)``.
    """

    h: np.ndarray
    p: float
    iterations: int
    distances: np.ndarray
    contraction: float
    bound: float

    @property
    def contraction_ok(self) -> bool:
        return self.contraction <= self.bound + 1e-12


def birkhoff_eigenfunction(kernel, mu, f, xi: float, tol: float = BIRKHOFF_TOL, max_iter: int = 10_000) -> BirkhoffResult:
    """Positive eigenfunction of ``L h = sum_y P(x, y) exp(xi f(x, y)) h(y)``.

    Iterates ``h <- L h`` with renormalization until the projective distance
    between iterates is below ``tol``; ``p = log(mu . L h / mu . h)``.
    """
    kernel, mu, f = _check(kernel, mu, f)
    chain, _ = _short_chain(kernel, mu, f)
    eps0 = ellipticity_constant(chain, validate_chain(chain), max_lag=2).epsilon0
    K = float(np.abs(f).max())
    Delta = 8 * K + 6 * np.log(1.0 / eps0)
    bound = float(np.tanh(Delta / 4))
    L = kernel * np.exp(xi * f)
    h = np.ones(kernel.shape[0])
    dists = []
    it = 0
    for it in range(1, max_iter + 1):
        new = L @ h
        new = new / (mu @ new)
        dist = hilbert_distance(new, h)
        h = new
        dists.append(dist)
        if dist < tol:
            break
    dists = np.array(dists)
    ratios = [dists[k + 2] / dists[k] for k in range(dists.size - 2) if dists[k] > 1e-10]
    contraction = float(max(ratios)) if ratios else 0.0
    p = float(np.log((mu @ (L @ h)) / (mu @ h)))
    return BirkhoffResult(h, p, it, dists, contraction, bound)


def perron_eigenpair(kernel, mu, f, xi: float):
    """Dense Perron eigenpair of ``P * exp(xi f)`` normalized by ``mu . h = 1``."""
    L = np.asarray(kernel, dtype=float) * np.exp(xi * np.asarray(f, dtype=float))
    vals, vecs = np.linalg.eig(L)
    k = int(np.argmax(vals.real))
    h = np.real(vecs[:, k])
    h = h / (np.asarray(mu) @ h)
    return h, float(np.log(vals[k].real))


# ---------------------------------------------------------------------------
# max-plus cycle means
# ---------------------------------------------------------------------------
def max_mean_cycle(kernel, f) -> float:
    """Largest mean of ``f`` along a cycle of the support graph (Karp).

    With a virtual source joined to every vertex, ``D_k(v)`` is the largest
    weight of a ``k``-edge walk ending at ``v`` and the answer is
    ``max_v min_k (D_n(v) - D_k(v)) / (n - k)``.
    """
    kernel = np.asarray(kernel, dtype=float)
    f = np.asarray(f, dtype=float)
    n = kernel.shape[0]
    W = np.where(kernel > 0, f, -np.inf)
    D = np.full((n + 1, n), -np.inf)
    D[0] = 0.0
    for k in range(1, n + 1):
        D[k] = (D[k - 1][:, None] + W).max(axis=0)
    best = -np.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        worst = np.inf
        for k in range(n):
            if np.isfinite(D[k, v]):
                worst = min(worst, (D[n, v] - D[k, v]) / (n - k))
        best = max(best, worst)
    return float(best)


def min_mean_cycle(kernel, f) -> float:
    """Smallest mean of ``f`` along a cycle of the support graph."""
    return -max_mean_cycle(kernel, -np.asarray(f, dtype=float))


@dataclass(frozen=True)
class HomogeneousReport:
    """Summary for the ``homog`` command."""

    sigma2: float
    coboundary: Coboundary | None
    periodicity: Periodicity | None
    s_minus: float
    s_plus: float

    def to_dict(self) -> dict:
        out = {"sigma2": self.sigma2, "s_minus": self.s_minus, "s_plus": self.s_plus}
        out["coboundary"] = None if self.coboundary is None else {
            "potential": self.coboundary.potential.tolist(), "kappa": self.coboundary.kappa}
        out["periodicity"] = None if self.periodicity is None else {
            "step": self.periodicity.step, "potential": self.periodicity.potential.tolist(),
            "kappa": self.periodicity.kappa}
        return out


def homogeneous_report(kernel, mu, f) -> HomogeneousReport:
    """Variance, reducibility verdicts and cycle-mean thresholds.

    The cycle means refer to ``f`` centered under ``mu`` and divided by
    ``sigma^2`` when ``sigma^2 > 0``, which is the normalization of the
    large-deviation window ``(c_-, c_+)``.
    """
    kernel, mu, f = _check(kernel, mu, f)
    sigma2 = green_kubo_sigma2(kernel, mu, f)
    cob = coboundary_detect(kernel, mu, f)
    per = None
    if sigma2 > 1e-12:
        try:
            per = periodicity_detect(kernel, mu, f)
        except InconsistentPhases:
            per = None
    fc = f - (mu[:, None] * kernel * f).sum()
    scale = sigma2 if sigma2 > 1e-12 else 1.0
    return HomogeneousReport(sigma2, cob, per, min_mean_cycle(kernel, fc) / scale, max_mean_cycle(kernel, fc) / scale)
