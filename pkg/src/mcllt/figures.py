"""SVG figures for ``mcllt report --figures DIR``.

matplotlib is imported lazily so the rest of the package does not need it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import corpus as cp
from .errors import ValidationError


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ValidationError("figures need matplotlib; install the 'figures' extra") from None
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "mcllt"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})


def variance_figure(plt, path: Path, N: int = 300) -> None:
    from .exact_dist import variance_curve
    from .hexagons import structure_constants

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ("chain_d", "two_state", "perturbed_lazy"):
        e = cp.BUILDERS[name](N)
        V = variance_curve(e.chain, e.functional).var
        U = structure_constants(e.chain, None, e.functional).U_curve()
        n = np.arange(3, N + 1)
        ax.plot(n, V[2:] / U, label=name)
    ax.set_xlabel("N")
    ax.set_ylabel("V_N / U_N")
    ax.legend(frameon=False)
    _save(fig, path)
    plt.close(fig)


def rate_figure(plt, path: Path, N: int = 200) -> None:
    from .large_dev import RateFunction

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ("lazy", "chain_d"):
        e = cp.BUILDERS[name](N)
        rate = RateFunction(e.chain, None, e.functional)
        lo, hi = rate.safe_window
        etas = np.linspace(lo, hi, 41)[1:-1]
        ax.plot(etas, [rate.legendre(float(x))[0] for x in etas], label=name)
    ax.set_xlabel("z / V_N")
    ax.set_ylabel("I_N")
    ax.legend(frameon=False)
    _save(fig, path)
    plt.close(fig)


def llt_figure(plt, path: Path) -> None:
    from .exact_dist import exact_sn_distribution, llt_lattice_check

    fig, ax = plt.subplots(figsize=(5, 3.5))
    Ns = np.array([20, 40, 80, 160, 320])
    for name in ("srw", "lazy", "chain_d"):
        ratios = []
        for N in Ns:
            e = cp.BUILDERS[name](int(N))
            dist = exact_sn_distribution(e.chain, e.functional)
            vals, probs = dist.law()
            z = float(vals[np.argmax(probs)])
            ratios.append(llt_lattice_check(dist, z).ratio)
        ax.semilogx(Ns, ratios, marker="o", label=name)
    ax.axhline(1.0, color="0.5", lw=0.8)
    ax.set_xlabel("N")
    ax.set_ylabel("exact / Gaussian")
    ax.legend(frameon=False)
    _save(fig, path)
    plt.close(fig)


def mcre_figure(plt, path: Path) -> None:
    from .mcre import quenched_variance_growth

    rep = quenched_variance_growth(cp.mcre_noise(), cp.mcre_family(), [64, 128, 256, 512], trials=16, seed=0)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for row in rep.per_step:
        ax.plot(rep.horizons, row, color="0.3", alpha=0.5, lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("V_N / N")
    _save(fig, path)
    plt.close(fig)


FIGURES = {
    "variance_sandwich.svg": variance_figure,
    "rate_functions.svg": rate_figure,
    "llt_ratios.svg": llt_figure,
    "quenched_variance.svg": mcre_figure,
}


def write_figures(directory) -> list:
    """Render every figure into ``directory`` and return the paths."""
    plt = _pyplot()
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fn in FIGURES.items():
        path = out / name
        fn(plt, path)
        paths.append(path)
    return paths
