"""JSON chain specifications and deterministic text output.

A chain file looks like::

    {
      "N": 100,
      "states": [0, 1],
      "kernels": [[[0.7, 0.3], [0.4, 0.6]], [[0.2, 0.8], [0.5, 0.5]]],
      "initial": [0.5, 0.5],
      "functional": {"of_state": [1, 0], "which": "x"},
      "lattice": 1
    }

``kernels`` (or a single ``kernel``) repeat cyclically up to ``N``;
``states`` is either one label list used at every time or one list per
time.  The functional is either ``{"values": [matrix, ...]}`` (cyclic) or
``{"of_state": vector, "which": "x" | "y"}``.  Alternatively
``{"corpus": name, "N": n}`` loads a bundled corpus chain.

A family file for random environments maps symbols to kernels and
summands::

    {"symbols": {"A": {"kernel": ..., "f": ...}, ...}, "lattice": 1,
     "weights": {"A": 0.5, ...}, "matrix": ..., "alpha": ..., "arcs": [...]}

A kernel file for ``homog`` holds ``kernel`` and either ``f`` (a matrix)
or ``of_state``.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .chain_core import Chain, Functional, stationary_law
from .errors import ValidationError


def _load(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {source}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source} is not valid JSON: {exc}") from None


def _cyclic(items, N):
    return [items[n % len(items)] for n in range(N)]


def load_chain(source, N: int | None = None):
    """Chain and functional from a JSON spec (path or dict).

    Parameters
    ----------
    N : int, optional
        Overrides the horizon stored in the file.

    Returns
    -------
    (Chain, Functional)

    Raises
    ------
    ValidationError
        On malformed input; chain errors such as ``NonStochasticRow`` are
        raised by the chain constructor.
    """
    spec = _load(source)
    if "corpus" in spec:
        from .corpus import BUILDERS

        name = spec["corpus"]
        if name not in BUILDERS:
            raise ValidationError(f"unknown corpus chain {name!r}")
        entry = BUILDERS[name](int(N or spec.get("N", 100)))
        return entry.chain, entry.functional
    if "kernels" in spec:
        kernels = [np.asarray(k, dtype=float) for k in spec["kernels"]]
    elif "kernel" in spec:
        kernels = [np.asarray(spec["kernel"], dtype=float)]
    else:
        raise ValidationError("chain spec needs 'kernels' or 'kernel'")
    if not kernels:
        raise ValidationError("chain spec has no kernels")
    N = int(N or spec.get("N", len(kernels)))
    kernels = _cyclic(kernels, N)
    states = spec.get("states")
    if states is not None:
        if states and isinstance(states[0], list):
            states = _cyclic(states, N + 1) if len(states) != N + 1 else states
        else:
            states = [states] * (N + 1)
    initial = spec.get("initial")
    if initial is None:
        k0 = kernels[0]
        if len({k.tobytes() for k in kernels}) == 1 and k0.shape[0] == k0.shape[1]:
            initial = stationary_law(k0)
        else:
            initial = np.full(k0.shape[0], 1.0 / k0.shape[0])
    chain = Chain(tuple(kernels), initial, states)
    fspec = spec.get("functional")
    if fspec is None:
        raise ValidationError("chain spec needs a 'functional'")
    lattice = spec.get("lattice", fspec.get("lattice"))
    if "values" in fspec:
        mats = _cyclic([np.asarray(v, dtype=float) for v in fspec["values"]], N)
        functional = Functional(tuple(mats), lattice)
    elif "of_state" in fspec:
        functional = Functional.of_state(chain, np.asarray(fspec["of_state"], dtype=float), lattice,
                                         fspec.get("which", "x"))
    else:
        raise ValidationError("functional needs 'values' or 'of_state'")
    functional.check_against(chain)
    return chain, functional


def load_kernel(source):
    """``(kernel, mu, f)`` for the homogeneous tools."""
    spec = _load(source)
    if "kernel" not in spec:
        raise ValidationError("kernel file needs 'kernel'")
    kernel = np.asarray(spec["kernel"], dtype=float)
    if np.any(kernel < 0) or np.abs(kernel.sum(axis=1) - 1).max() > 1e-9:
        from .errors import NonStochasticRow

        row = int(np.argmax(np.abs(kernel.sum(axis=1) - 1)))
        raise NonStochasticRow(1, row, float(abs(kernel[row].sum() - 1)))
    mu = np.asarray(spec["mu"], dtype=float) if "mu" in spec else stationary_law(kernel)
    if "f" in spec:
        f = np.asarray(spec["f"], dtype=float)
    elif "of_state" in spec:
        v = np.asarray(spec["of_state"], dtype=float)
        f = np.repeat(v[:, None], kernel.shape[1], axis=1)
    else:
        raise ValidationError("kernel file needs 'f' or 'of_state'")
    return kernel, mu, f


def load_family(source, noise_kind: str):
    """``(Family, NoiseProcess)`` from a family file."""
    from .mcre import Family, NoiseProcess

    spec = _load(source)
    syms = spec.get("symbols")
    if not syms:
        raise ValidationError("family file needs 'symbols'")
    names = sorted(syms)
    fam = Family({s: syms[s]["kernel"] for s in names}, {s: syms[s]["f"] for s in names}, spec.get("lattice"))
    if noise_kind == "bernoulli":
        w = spec.get("weights", {s: 1.0 / len(names) for s in names})
        noise = NoiseProcess("bernoulli", names, weights=[w[s] for s in names])
    elif noise_kind == "markov":
        if "matrix" not in spec:
            raise ValidationError("Markov noise needs 'matrix'")
        noise = NoiseProcess("markov", names, matrix=spec["matrix"])
    elif noise_kind == "rotation":
        alpha = spec.get("alpha", 2 * np.pi * (np.sqrt(2) - 1))
        arcs = spec.get("arcs", list(np.arange(1, len(names)) / len(names)))
        noise = NoiseProcess("rotation", names, alpha=alpha, arcs=arcs, irrational=bool(spec.get("irrational", True)))
    else:
        raise ValidationError(f"unknown noise kind {noise_kind!r}")
    return fam, noise


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------
def fmt(value) -> str:
    """Shortest round-trip text for numbers, stable across runs."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(text: str, out=None) -> None:
    """Write to ``out`` (a path) or standard output."""
    if out is None or str(out) == "-":
        import sys

        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
