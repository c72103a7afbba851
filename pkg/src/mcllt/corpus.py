"""Canonical chains used by the tests, the acceptance suite and ``report``.

Every builder takes the horizon ``N`` and returns a :class:`CorpusEntry`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_core import Chain, Functional, stationary_law
from .mcre import Family, NoiseProcess, quench

#: the two-state homogeneous kernel
TWO_STATE_KERNEL = np.array([[0.9, 0.1], [0.2, 0.8]])
#: kernels of the period-two chain at odd and even times
CHAIN_D_ODD = np.array([[0.7, 0.3], [0.4, 0.6]])
CHAIN_D_EVEN = np.array([[0.2, 0.8], [0.5, 0.5]])
#: state values of the non-lattice lazy walk
PERTURBED_VALUES = np.array([-1.0, np.sqrt(3) / 10, 1.0 + np.sqrt(2) / 10])
#: law of the bulk part of the decaying-contamination chain (values 0, 1/2, 1)
CORE_VALUES = np.array([0.0, 0.5, 1.0])
CORE_WEIGHTS = np.array([1 / 6, 2 / 3, 1 / 6])
#: value of the contaminating atom
CONTAMINATION_VALUE = 2.0


@dataclass(frozen=True)
class CorpusEntry:
    """A chain, a functional and facts about them.

    Attributes
    ----------
    name : str
    chain : Chain
    functional : Functional
    independent : bool
        The states are independent.
    homogeneous : bool
        One kernel at every step with a stationary start.
    center_tight : bool
        ``Var S_N`` stays bounded.
    graininess : float
        ``t`` for an essential range ``t Z``, ``0`` for all reals and
        ``inf`` for ``{0}``.
    """

    name: str
    chain: Chain
    functional: Functional
    independent: bool = False
    homogeneous: bool = False
    center_tight: bool = False
    graininess: float = 1.0

    @property
    def lattice(self) -> bool:
        return self.functional.lattice is not None


def srw(N: int) -> CorpusEntry:
    """Independent uniform signs, ``f(x, y) = x``."""
    chain = Chain.independent([np.array([0.5, 0.5])] * (N + 1), labels=[(-1, 1)] * (N + 1))
    f = Functional.of_state(chain, [-1.0, 1.0], lattice=2.0)
    return CorpusEntry("srw", chain, f, independent=True, graininess=2.0)


def lazy(N: int) -> CorpusEntry:
    """Independent uniform steps in ``{-1, 0, 1}``, ``f(x, y) = x``."""
    chain = Chain.independent([np.full(3, 1 / 3)] * (N + 1), labels=[(-1, 0, 1)] * (N + 1))
    f = Functional.of_state(chain, [-1.0, 0.0, 1.0], lattice=1.0)
    return CorpusEntry("lazy", chain, f, independent=True, graininess=1.0)


def varying_iid(N: int) -> CorpusEntry:
    """Independent Bernoulli states whose bias cycles through ``0.3, 0.5, 0.7``."""
    laws = [np.array([1 - p, p]) for p in (0.3 + 0.2 * (n % 3) for n in range(N + 1))]
    chain = Chain.independent(laws)
    f = Functional.of_state(chain, [0.0, 1.0], lattice=1.0)
    return CorpusEntry("varying_iid", chain, f, independent=True, graininess=1.0)


def chain_d(N: int) -> CorpusEntry:
    """Period-two inhomogeneous chain with ``f = 1[x = 0]``."""
    kernels = tuple(CHAIN_D_ODD if n % 2 else CHAIN_D_EVEN for n in range(1, N + 1))
    chain = Chain(kernels, [0.5, 0.5])
    f = Functional.of_state(chain, [1.0, 0.0], lattice=1.0)
    return CorpusEntry("chain_d", chain, f, graininess=1.0)


def two_state(N: int) -> CorpusEntry:
    """Stationary homogeneous two-state chain with ``f = 1[x = 0]``."""
    chain = Chain.homogeneous(TWO_STATE_KERNEL, N)
    f = Functional.of_state(chain, [1.0, 0.0], lattice=1.0)
    return CorpusEntry("two_state", chain, f, homogeneous=True, graininess=1.0)


def gradient(N: int) -> CorpusEntry:
    """Chain D with the integer gradient ``f = b(y) - b(x)``, ``b = (0, 2)``."""
    base = chain_d(N).chain
    f = Functional.gradient(base, [0.0, 2.0], lattice=1.0)
    return CorpusEntry("gradient", base, f, center_tight=True, graininess=np.inf)


def summable(N: int) -> CorpusEntry:
    """Lazy walk with geometrically shrinking summands ``2^(-n) x``."""
    chain = lazy(N).chain
    values = [np.array([-1.0, 0.0, 1.0]) * 2.0 ** (-n) for n in range(1, N + 2)]
    f = Functional.of_state(chain, values)
    return CorpusEntry("summable", chain, f, independent=True, center_tight=True, graininess=np.inf)


def perturbed_lazy(N: int) -> CorpusEntry:
    """Lazy walk read through irrationally perturbed values (non-lattice)."""
    chain = lazy(N).chain
    f = Functional.of_state(chain, PERTURBED_VALUES)
    return CorpusEntry("perturbed_lazy", chain, f, independent=True, graininess=0.0)


def core_drop(N: int) -> CorpusEntry:
    """Independent chain contaminated by a rare atom.

    At time ``n`` the state is the atom (value 2) with probability ``1/n``
    and otherwise one of the values ``0, 1/2, 1`` with weights
    ``1/6, 2/3, 1/6`` (variance ``1/12``).
    """
    laws = []
    for n in range(1, N + 2):
        p = 1.0 / n
        laws.append(np.concatenate([[p], (1 - p) * CORE_WEIGHTS]))
    chain = Chain.independent(laws)
    f = Functional.of_state(chain, np.concatenate([[CONTAMINATION_VALUE], CORE_VALUES]), lattice=0.5)
    return CorpusEntry("core_drop", chain, f, independent=True, graininess=0.5)


def mcre_family() -> Family:
    """Two-symbol integer family used for the random-environment checks."""
    return Family(
        {"A": [[0.7, 0.3], [0.3, 0.7]], "B": [[0.4, 0.6], [0.6, 0.4]]},
        {"A": [[0.0, 0.0], [1.0, 1.0]], "B": [[0.0, 1.0], [1.0, 2.0]]},
        lattice=1.0,
    )


def mcre_noise() -> NoiseProcess:
    return NoiseProcess("bernoulli", ("A", "B"), weights=[0.5, 0.5])


def mcre_quenched(N: int, seed: int = 0) -> CorpusEntry:
    """One quenched realization of the two-symbol family."""
    q = quench(mcre_noise(), mcre_family(), N, mcre_noise().realization(seed))
    return CorpusEntry("mcre", q.chain, q.functional, graininess=1.0)


BUILDERS = {
    "srw": srw,
    "lazy": lazy,
    "varying_iid": varying_iid,
    "chain_d": chain_d,
    "two_state": two_state,
    "gradient": gradient,
    "summable": summable,
    "perturbed_lazy": perturbed_lazy,
    "core_drop": core_drop,
    "mcre": mcre_quenched,
}


def corpus(N: int, names=None) -> list:
    """Every corpus entry (or the named ones) at horizon ``N``."""
    names = list(BUILDERS) if names is None else names
    return [BUILDERS[name](N) for name in names]


def two_state_stationary() -> np.ndarray:
    return stationary_law(TWO_STATE_KERNEL)
