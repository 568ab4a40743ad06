"""JSON file formats shared by the library and the command line.

Exact scalars are strings ``"p/q"`` (``"p"`` when ``q == 1``); complex
entries are ``[re, im]`` pairs.  Float data uses JSON numbers in the same
positions.  :func:`dumps` is the single canonical serializer, so equal
objects always produce byte-identical text.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np

from .algebra import GameAlgebraRep
from .game import Correlation
from .linalg import (
    GaussianRational,
    MatrixGQ,
    OperatorSubspace,
    format_rational,
    subspace_span,
    to_exact,
)
from .metric import FiniteMetricSpace, SimpleGraph, WeightedGraph, validate_metric
from .qgraph import FiniteQuantumSet
from .wstar import QuantumMetricFiltration, VNAlgebra

__all__ = [
    "FormatError",
    "dumps",
    "load_json",
    "scalar_to_json",
    "scalar_from_json",
    "matrix_to_json",
    "matrix_from_json",
    "metric_to_json",
    "metric_from_json",
    "graph_to_json",
    "graph_from_json",
    "simple_graph_from_json",
    "correlation_to_json",
    "correlation_from_json",
    "rep_to_json",
    "rep_from_json",
    "filtration_to_json",
    "filtration_from_json",
    "quantum_set_to_json",
    "quantum_set_from_json",
]


class FormatError(ValueError):
    """Malformed input document."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e


def _need(obj, key, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"missing field {key!r}")
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise FormatError(f"field {key!r} should be {kind.__name__}")
    return v


# scalars and matrices

def scalar_to_json(z) -> List[str]:
    if isinstance(z, GaussianRational):
        return [format_rational(z.re), format_rational(z.im)]
    return [format_rational(z), "0"]


def scalar_from_json(x):
    try:
        return to_exact(tuple(x) if isinstance(x, list) else x)
    except (TypeError, ValueError) as e:
        raise FormatError(f"bad exact scalar {x!r}: {e}") from e


def _is_float_entry(x) -> bool:
    if isinstance(x, list):
        return any(isinstance(v, float) for v in x)
    return isinstance(x, float)


def matrix_to_json(M) -> dict:
    if isinstance(M, MatrixGQ):
        return {"rows": M.rows, "cols": M.cols, "entries": [scalar_to_json(z) for z in M.entries]}
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in A.reshape(-1)],
    }


def matrix_from_json(obj, mode: str | None = None):
    """``MatrixGQ`` for exact data, complex ``ndarray`` for float data.

    ``mode`` forces the result type; without it, any float entry selects
    float mode.
    """
    rows = _need(obj, "rows", int)
    cols = _need(obj, "cols", int)
    entries = _need(obj, "entries", list)
    if len(entries) != rows * cols:
        raise FormatError(f"matrix declares {rows}x{cols} but has {len(entries)} entries")
    if mode is None:
        mode = "float" if any(_is_float_entry(e) for e in entries) else "exact"
    if mode == "float":
        vals = []
        for e in entries:
            if isinstance(e, list):
                if len(e) != 2:
                    raise FormatError(f"bad entry {e!r}")
                vals.append(complex(_to_float(e[0]), _to_float(e[1])))
            else:
                vals.append(complex(_to_float(e), 0.0))
        return np.array(vals, dtype=complex).reshape(rows, cols)
    return MatrixGQ.from_sparse(rows, cols, {
        k: v for k, v in enumerate(scalar_from_json(e) for e in entries) if v != 0
    })


def _to_float(x) -> float:
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except ValueError as e:
            raise FormatError(f"bad number {x!r}") from e
    if isinstance(x, (int, float)):
        return float(x)
    raise FormatError(f"bad number {x!r}")


# metrics and graphs

def metric_to_json(X: FiniteMetricSpace) -> dict:
    return {"points": list(X.labels), "distances": [[format_rational(v) for v in row] for row in X.D]}


def metric_from_json(obj) -> FiniteMetricSpace:
    """Parse and validate; metric violations propagate as ``MetricViolation``."""
    points = _need(obj, "points", list)
    rows = _need(obj, "distances", list)
    if len(rows) != len(points) or any(not isinstance(r, list) or len(r) != len(points) for r in rows):
        raise FormatError("distance matrix must be square with one row per point")
    D = [[_exact_real(v) for v in row] for row in rows]
    return validate_metric([str(p) for p in points], D)


def _exact_real(v) -> Fraction:
    z = scalar_from_json(v)
    if not isinstance(z, Fraction):
        raise FormatError(f"expected a real rational, got {v!r}")
    return z


def graph_to_json(G) -> dict:
    if isinstance(G, SimpleGraph):
        return {"points": list(G.labels), "edges": [[G.labels[i], G.labels[j]] for i, j in G.edges]}
    return {"points": list(G.labels),
            "edges": [[G.labels[i], G.labels[j], format_rational(w)] for i, j, w in G.edges]}


def _edges(obj):
    points = [str(p) for p in _need(obj, "points", list)]
    index = {p: k for k, p in enumerate(points)}
    if len(index) != len(points):
        raise FormatError("point labels must be distinct")
    out = []
    for e in _need(obj, "edges", list):
        if not isinstance(e, list) or len(e) not in (2, 3):
            raise FormatError(f"bad edge {e!r}")
        try:
            i, j = index[str(e[0])], index[str(e[1])]
        except KeyError as k:
            raise FormatError(f"edge mentions unknown point {k}") from None
        out.append((i, j, e[2] if len(e) == 3 else None))
    return points, out


def graph_from_json(obj) -> WeightedGraph:
    points, edges = _edges(obj)
    try:
        return WeightedGraph(tuple(points), tuple((i, j, _exact_real(w if w is not None else "1"))
                                                  for i, j, w in edges))
    except ValueError as e:
        raise FormatError(str(e)) from e


def simple_graph_from_json(obj) -> SimpleGraph:
    points, edges = _edges(obj)
    for i, j, w in edges:
        if w is not None and _exact_real(w) != 1:
            raise FormatError(f"edge ({points[i]},{points[j]}) has weight {w}; expected an unweighted graph")
    try:
        return SimpleGraph(tuple(points), tuple((i, j) for i, j, _ in edges))
    except ValueError as e:
        raise FormatError(str(e)) from e


# correlations and representations

def correlation_to_json(p: Correlation) -> dict:
    flat = p.p.reshape(-1)
    if p.mode == "exact":
        vals = [format_rational(v) for v in flat]
    else:
        vals = [float(v) for v in flat]
    return {"mode": p.mode, "N": p.N, "p": vals}


def correlation_from_json(obj) -> Correlation:
    mode = _need(obj, "mode", str)
    N = _need(obj, "N", int)
    vals = _need(obj, "p", list)
    if len(vals) != N ** 4:
        raise FormatError(f"correlation with N={N} needs {N ** 4} entries, got {len(vals)}")
    if mode == "exact":
        arr = np.array([_exact_real(v) for v in vals], dtype=object)
    elif mode == "float":
        arr = np.array([_to_float(v) for v in vals], dtype=float)
    else:
        raise FormatError(f"unknown correlation mode {mode!r}")
    return Correlation(mode, N, arr.reshape((N,) * 4))


def rep_to_json(rep: GameAlgebraRep) -> dict:
    blocks = [[matrix_to_json(rep.block(x, y)) for y in range(rep.ny)] for x in range(rep.nx)]
    return {"nx": rep.nx, "ny": rep.ny, "d": rep.d, "mode": rep.mode, "blocks": blocks}


def rep_from_json(obj) -> GameAlgebraRep:
    mode = obj.get("mode", "exact") if isinstance(obj, dict) else None
    if mode not in ("exact", "float"):
        raise FormatError(f"unknown rep mode {mode!r}")
    nx, ny, d = _need(obj, "nx", int), _need(obj, "ny", int), _need(obj, "d", int)
    rows = _need(obj, "blocks", list)
    if len(rows) != nx or any(not isinstance(r, list) or len(r) != ny for r in rows):
        raise FormatError(f"blocks must be an {nx}x{ny} array")
    mats = [[matrix_from_json(b, mode) for b in row] for row in rows]
    for row in mats:
        for m in row:
            if tuple(m.shape) != (d, d):
                raise FormatError(f"block of shape {tuple(m.shape)}, expected {(d, d)}")
    try:
        return GameAlgebraRep.exact(mats) if mode == "exact" else GameAlgebraRep.float(mats)
    except ValueError as e:
        raise FormatError(str(e)) from e


# filtrations and quantum sets

def _algebra_to_json(M: VNAlgebra) -> dict:
    out = {"kind": M.kind, "generators": [matrix_to_json(g) for g in M.generators]}
    if M.labels is not None:
        out["labels"] = list(M.labels)
    return out


def _algebra_from_json(n: int, obj) -> VNAlgebra:
    kind = _need(obj, "kind", str)
    labels = obj.get("labels")
    if kind == "abelian_diagonal":
        return VNAlgebra.diagonal(n, labels)
    if kind == "full_matrix":
        return VNAlgebra.full(n)
    gens = [_exact_matrix(g) for g in _need(obj, "generators", list)]
    return VNAlgebra(n, tuple(gens), kind, tuple(labels) if labels is not None else None)


def _exact_matrix(obj) -> MatrixGQ:
    m = matrix_from_json(obj)
    if not isinstance(m, MatrixGQ):
        raise FormatError("expected an exact matrix")
    return m


def subspace_to_json(S: OperatorSubspace) -> list:
    return [matrix_to_json(b) for b in S.basis]


def subspace_from_json(n: int, obj: Sequence) -> OperatorSubspace:
    mats = [_exact_matrix(m) for m in obj]
    for m in mats:
        if m.shape != (n, n):
            raise FormatError(f"subspace element of shape {m.shape} in M_{n}")
    return subspace_span(mats, n)


def filtration_to_json(F: QuantumMetricFiltration) -> dict:
    return {
        "n": F.n,
        "algebra": _algebra_to_json(F.algebra),
        "breakpoints": [format_rational(t) for t in F.breakpoints],
        "subspaces": [subspace_to_json(S) for S in F.subspaces],
    }


def filtration_from_json(obj) -> QuantumMetricFiltration:
    n = _need(obj, "n", int)
    M = _algebra_from_json(n, _need(obj, "algebra", dict))
    bps = [_exact_real(t) for t in _need(obj, "breakpoints", list)]
    subs = [subspace_from_json(n, s) for s in _need(obj, "subspaces", list)]
    try:
        return QuantumMetricFiltration(M, tuple(bps), tuple(subs))
    except ValueError as e:
        raise FormatError(str(e)) from e


def quantum_set_to_json(Q: FiniteQuantumSet) -> dict:
    return Q.to_dict()


def quantum_set_from_json(obj) -> FiniteQuantumSet:
    blocks = _need(obj, "blocks", list)
    weights = [_exact_real(w) for w in _need(obj, "weights", list)]
    try:
        return FiniteQuantumSet(tuple(int(b) for b in blocks), tuple(weights))
    except (TypeError, ValueError) as e:
        raise FormatError(str(e)) from e
