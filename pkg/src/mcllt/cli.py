"""Command-line front end.

Exit status: 0 on success, 1 on invalid input, 2 when a size guard refuses
the computation and 3 when a checked invariant fails (the invariant is
named on standard error).  Series are written as CSV and reports as
sorted JSON; every numeric row carries the tolerance it was checked
against.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .errors import InvariantBreach, MCLLTError, SizeGuardError, ValidationError

DEFAULT_SEED = 0


def _grid(text: str) -> np.ndarray:
    """``a:b:n`` (inclusive, ``n`` points) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad grid {text!r}; use a:b:n")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(a, b, n)
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _interval(text: str):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"bad interval {text!r}; use a,b") from None
    return a, b


def _state(chain, label):
    if label is None:
        return None
    return chain.index(1, label)


def _chain(args):
    path = args.chain if getattr(args, "chain", None) else getattr(args, "file", None)
    if path is None:
        raise ValidationError("a chain file is required (--chain FILE)")
    return io.load_chain(path, getattr(args, "N", None))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_validate(args) -> str:
    from .chain_core import ellipticity_constant, validate_chain

    chain, functional = _chain(args)
    marg = validate_chain(chain)
    rep = ellipticity_constant(chain, marg)
    return io.json_text({
        "horizon": chain.horizon,
        "epsilon0": rep.epsilon0,
        "density_sup": rep.density_sup,
        "twostep_inf": rep.twostep_inf,
        "cmix": rep.cmix,
        "theta": rep.theta,
        "lattice": functional.lattice,
        "bound": functional.bound,
        "valid": True,
    })


def cmd_classify(args) -> str:
    from .chain_core import validate_chain
    from .hexagons import structure_constants
    from .reduction import classify_range

    chain, functional = _chain(args)
    marg = validate_chain(chain)
    stats = structure_constants(chain, marg, functional)
    rep = classify_range(stats, functional, chain, marg)
    return io.json_text(rep.to_dict())


def cmd_dist(args) -> str:
    from .exact_dist import exact_sn_distribution, round_to_lattice

    chain, functional = _chain(args)
    if functional.lattice is None:
        functional, _ = round_to_lattice(functional)
    dist = exact_sn_distribution(chain, functional, from_state=_state(chain, args.from_state))
    vals, probs = dist.law()
    tol = float(dist.mass_drift.max())
    rows = [(v, p, tol) for v, p in zip(vals, probs) if p > 0]
    return io.csv_text(["s", "probability", "tol"], rows)


def cmd_cltcheck(args) -> str:
    from .exact_dist import clt_distance, exact_sn_distribution, round_to_lattice

    chain, functional = _chain(args)
    if functional.lattice is None:
        functional, _ = round_to_lattice(functional)
    dist = exact_sn_distribution(chain, functional, from_state=_state(chain, args.from_state), store="all")
    tol = args.tol if args.tol is not None else 0.05
    Ns = [chain.horizon // 4, chain.horizon // 2, chain.horizon]
    rows = [(n, clt_distance(dist, n), tol) for n in Ns if n >= 1]
    return io.csv_text(["N", "kolmogorov", "tol"], rows)


def cmd_lltcheck(args) -> str:
    from .exact_dist import exact_sn_distribution, llt_lattice_check

    chain, functional = _chain(args)
    if functional.lattice is None:
        raise ValidationError("lltcheck needs a lattice functional")
    dist = exact_sn_distribution(chain, functional, from_state=_state(chain, args.from_state))
    z = float(args.z) if args.z is not None else 0.0
    res = llt_lattice_check(dist, z)
    tol = args.tol if args.tol is not None else 0.05
    return io.csv_text(["z", "exact", "prediction", "ratio", "tol"], [(z, res.exact, res.prediction, res.ratio, tol)])


def cmd_charfn(args) -> str:
    from .nagaev import operator_decay_check

    chain, functional = _chain(args)
    xis = _grid(args.xi) if args.xi else np.linspace(0.1, np.pi, 16)
    rep = operator_decay_check(chain, None, functional, xis)
    rows = [(xi, a, b, 0.0) for xi, a, b in rep.rows()]
    return io.csv_text(["xi", "abs_char_fn", "bound", "tol"], rows)


def cmd_ratefn(args) -> str:
    from .errors import OutOfDomain
    from .large_dev import RateFunction

    chain, functional = _chain(args)
    rate = RateFunction(chain, None, functional)
    grid = _grid(args.grid) if args.grid else np.linspace(*rate.safe_window, 11)[1:-1]
    tol = args.tol if args.tol is not None else 1e-10
    rows = []
    for eta in grid:
        try:
            I, xi = rate.legendre(float(eta))
        except OutOfDomain:
            I, xi = float("inf"), float("nan")
        rows.append((eta, I, xi, tol))
    return io.csv_text(["eta", "I", "xi", "tol"], rows)


def cmd_ldllt(args) -> str:
    from .large_dev import RateFunction, ld_llt_evaluate

    chain, functional = _chain(args)
    if args.z is None:
        raise ValidationError("ldllt needs --z")
    rate = RateFunction(chain, None, functional)
    interval = _interval(args.interval) if args.interval else None
    res = ld_llt_evaluate(rate, float(args.z), interval, _state(chain, args.from_state))
    tol = args.tol if args.tol is not None else 0.1
    return io.csv_text(["z", "xi", "rate", "exact", "prediction", "ratio", "tol"],
                       [(float(args.z), res.xi, res.rate, res.exact, res.prediction, res.ratio, tol)])


def cmd_thresholds(args) -> str:
    from .large_dev import ld_threshold_estimate

    chain, functional = _chain(args)
    th = ld_threshold_estimate(chain, None, functional)
    return io.json_text({
        "c_minus": th.c_minus, "c_plus": th.c_plus, "logmgf_edges": th.logmgf_edges,
        "support_edges": th.support_edges, "core_edges": th.core_edges, "V_N": th.VN,
        "block_variance": th.block_variance, "floor": th.floor,
    })


def cmd_homog(args) -> str:
    from .homog import homogeneous_report

    kernel, mu, f = io.load_kernel(args.kernel)
    return io.json_text(homogeneous_report(kernel, mu, f).to_dict())


def cmd_mcre(args) -> str:
    from .exact_dist import exact_sn_distribution, variance_curve
    from .mcre import noise_draws, quench

    fam, noise = io.load_family(args.family, args.noise)
    N = args.N or 100
    seed = DEFAULT_SEED if args.seed is None else args.seed
    tol = args.tol if args.tol is not None else 0.1
    rows = []
    for omega in noise_draws(noise, args.trials, seed):
        q = quench(noise, fam, N, omega)
        curve = variance_curve(q.chain, q.functional)
        V, mean = curve.V(N), curve.E(N)
        exact = pred = float("nan")
        if fam.lattice is not None:
            dist = exact_sn_distribution(q.chain, q.functional)
            gamma = dist.offsets[-1]
            t = fam.lattice
            z = gamma + t * np.round((mean - gamma) / t)
            exact = dist.point_mass(z)
            pred = t * np.exp(-((z - mean) ** 2) / (2 * V)) / np.sqrt(2 * np.pi * V)
        rows.append((omega.seed, "".join(str(s) for s in q.symbols[:16]), V, V / N, exact, pred, exact / pred, tol))
    return io.csv_text(["seed", "symbols_head", "V_N", "V_N_over_N", "exact", "prediction", "ratio", "tol"], rows)


def cmd_report(args) -> str:
    from .acceptance import run_all

    only = None
    if args.only:
        only = {int(v) for v in args.only.split(",")}

    def progress(res):
        print(res.line(), file=sys.stderr, flush=True)

    results = run_all(only, progress if args.verbose else None)
    if args.figures:
        from .figures import write_figures

        write_figures(args.figures)
    payload = {"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}
    if not args.timings:
        for c in payload["checks"]:
            c.pop("seconds")
    failed = [r.number for r in results if not r.passed]
    return io.json_text(payload), failed


COMMANDS = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "dist": cmd_dist,
    "cltcheck": cmd_cltcheck,
    "lltcheck": cmd_lltcheck,
    "charfn": cmd_charfn,
    "ratefn": cmd_ratefn,
    "ldllt": cmd_ldllt,
    "thresholds": cmd_thresholds,
    "homog": cmd_homog,
    "mcre": cmd_mcre,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcllt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, chain=True):
        if chain:
            p.add_argument("file", nargs="?", help="chain spec (JSON)")
            p.add_argument("--chain", help="chain spec (JSON)")
            p.add_argument("--N", type=int, help="horizon override")
            p.add_argument("--from", dest="from_state", help="start state label")
        p.add_argument("--out", help="output path (default: standard output)")
        p.add_argument("--tol", type=float, help="tolerance reported with each row")
        p.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
        return p

    common(sub.add_parser("validate", help="check a chain and report ellipticity"))
    common(sub.add_parser("classify", help="algebraic and essential range"))
    common(sub.add_parser("dist", help="exact law of S_N"))
    common(sub.add_parser("cltcheck", help="Kolmogorov distance to the Gaussian"))
    p = common(sub.add_parser("lltcheck", help="lattice local limit ratio"))
    p.add_argument("--z", help="target lattice point")
    p = common(sub.add_parser("charfn", help="characteristic function against its bound"))
    p.add_argument("--xi", help="frequencies, a:b:n or a list")
    p = common(sub.add_parser("ratefn", help="rate function on a grid"))
    p.add_argument("--grid", help="eta grid a:b:n")
    p = common(sub.add_parser("ldllt", help="large-deviation local limit ratio"))
    p.add_argument("--z", help="target value")
    p.add_argument("--interval", help="window a,b around z")
    common(sub.add_parser("thresholds", help="large-deviation threshold estimates"))
    p = common(sub.add_parser("homog", help="homogeneous chain summary"), chain=False)
    p.add_argument("--kernel", required=True, help="kernel file (JSON)")
    p = common(sub.add_parser("mcre", help="quenched random-environment rows"), chain=False)
    p.add_argument("--noise", choices=["bernoulli", "markov", "rotation"], default="bernoulli")
    p.add_argument("--family", required=True, help="family file (JSON)")
    p.add_argument("--N", type=int, help="horizon")
    p.add_argument("--trials", type=int, default=8, help="number of noise draws")
    p = common(sub.add_parser("report", help="run the acceptance checks on the corpus"), chain=False)
    p.add_argument("--figures", help="directory for SVG figures (needs matplotlib)")
    p.add_argument("--only", help="comma-separated check numbers")
    p.add_argument("--timings", action="store_true", help="include run times (not byte-stable)")
    p.add_argument("--verbose", action="store_true", help="print a line per check on standard error")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
        failed = []
        if isinstance(text, tuple):
            text, failed = text
        io.write_text(text, args.out)
    except InvariantBreach as exc:
        print(f"invariant breach [{exc.invariant}]: {exc.detail}", file=sys.stderr)
        return 3
    except SizeGuardError as exc:
        print(f"size guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except MCLLTError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if failed:
        print(f"invariant breach [acceptance]: checks {failed} failed", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
