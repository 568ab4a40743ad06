"""Finite-dimensional W*-quantum metrics as step filtrations.

A filtration stores breakpoints ``0 = t_0 < t_1 < ... < t_k`` and nested
operator subspaces ``S_0 ⊆ ... ⊆ S_k``; ``V_t = S_i`` on ``[t_i, t_{i+1})``
and ``V_t = S_k`` for ``t >= t_k``.  Right continuity is therefore built
in.  Because ``V_t`` is a step function, checking ``V_s V_t ⊆ V_{s+t}`` at
breakpoint pairs is enough: for real ``s, t`` with ``s`` in
``[t_i, t_{i+1})`` and ``t`` in ``[t_j, t_{j+1})`` we have
``V_s V_t = S_i S_j ⊆ V_{t_i + t_j} ⊆ V_{s+t}``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algebra import GameAlgebraRep, SizeMismatch, is_magic_unitary, verify_intertwiner
from .linalg import (
    MatrixGQ,
    OperatorSubspace,
    commutant,
    format_rational,
    is_adjoint_closed,
    subspace_contains,
    subspace_leq,
    subspace_product,
    unit_span,
)
from .metric import Disconnected, FiniteMetricSpace, SimpleGraph, validate_metric
from .report import VerificationReport

__all__ = [
    "VNAlgebra",
    "QuantumMetricFiltration",
    "NotAbelian",
    "NoFiniteDistance",
    "DimensionMismatch",
    "filtration_from_metric",
    "recover_metric",
    "filtration_from_graph",
    "iterate_powers",
    "verify_filtration_axioms",
    "conjugation_invariance_check",
]

ABELIAN_DIAGONAL = "abelian_diagonal"
FULL_MATRIX = "full_matrix"
GENERAL = "general"

DimensionMismatch = SizeMismatch


class NotAbelian(ValueError):
    pass


class NoFiniteDistance(ValueError):
    def __init__(self, x: int, y: int):
        self.pair = (x, y)
        super().__init__(f"no breakpoint subspace touches entry ({x},{y})")


@dataclass(frozen=True, eq=False)
class VNAlgebra:
    """A *-algebra ``M ⊆ M_n`` given by generators.

    ``kind`` is a display tag only; checks always recompute the commutant
    from the generators.
    """

    n: int
    generators: Tuple[MatrixGQ, ...]
    kind: str = GENERAL
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        for g in self.generators:
            if g.shape != (self.n, self.n):
                raise ValueError(f"generator of shape {g.shape} in M_{self.n}")
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("need one label per basis vector")

    @classmethod
    def diagonal(cls, n: int, labels: Sequence[str] | None = None) -> "VNAlgebra":
        """``l^inf`` of ``n`` points acting diagonally on ``l^2``."""
        gens = tuple(MatrixGQ.unit(n, i, i) for i in range(n))
        labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        return cls(n, gens, ABELIAN_DIAGONAL, labels)

    @classmethod
    def full(cls, n: int) -> "VNAlgebra":
        gens = tuple(MatrixGQ.unit(n, i, j) for i in range(n) for j in range(n))
        return cls(n, gens, FULL_MATRIX)

    @classmethod
    def general(cls, n: int, generators: Sequence[MatrixGQ]) -> "VNAlgebra":
        return cls(n, tuple(generators), GENERAL)

    def commutant(self) -> OperatorSubspace:
        return commutant(self.generators, self.n)

    def __eq__(self, other):
        if not isinstance(other, VNAlgebra):
            return NotImplemented
        return (self.n, self.generators, self.kind, self.labels) == (
            other.n, other.generators, other.kind, other.labels)

    def __hash__(self):
        return hash((self.n, self.generators, self.kind))


@dataclass(frozen=True, eq=False)
class QuantumMetricFiltration:
    algebra: VNAlgebra
    breakpoints: Tuple[Fraction, ...]
    subspaces: Tuple[OperatorSubspace, ...]

    def __post_init__(self):
        bps = tuple(Fraction(t) for t in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "subspaces", tuple(self.subspaces))
        if not bps or bps[0] != 0:
            raise ValueError("first breakpoint must be 0")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.subspaces) != len(bps):
            raise ValueError("need one subspace per breakpoint")
        for S in self.subspaces:
            if S.n != self.algebra.n:
                raise ValueError(f"subspace in M_{S.n}, algebra in M_{self.algebra.n}")

    @property
    def n(self) -> int:
        return self.algebra.n

    def __len__(self):
        return len(self.breakpoints)

    def __eq__(self, other):
        if not isinstance(other, QuantumMetricFiltration):
            return NotImplemented
        return (self.algebra, self.breakpoints, self.subspaces) == (
            other.algebra, other.breakpoints, other.subspaces)

    def index_at(self, t) -> int:
        t = Fraction(t)
        if t < 0:
            raise ValueError("t must be >= 0")
        return bisect_right(self.breakpoints, t) - 1

    def at(self, t) -> OperatorSubspace:
        """``V_t``; values past the last breakpoint give the last subspace."""
        return self.subspaces[self.index_at(t)]

    def dims(self) -> List[int]:
        return [S.dim for S in self.subspaces]

    def replace(self, i: int, S: OperatorSubspace) -> "QuantumMetricFiltration":
        subs = list(self.subspaces)
        subs[i] = S
        return QuantumMetricFiltration(self.algebra, self.breakpoints, tuple(subs))


def filtration_from_metric(X: FiniteMetricSpace) -> QuantumMetricFiltration:
    """``V_t = span{E_xy : d(x, y) <= t}`` over the diagonal algebra."""
    n = X.n
    bps = X.distinct_distances() if n else [Fraction(0)]
    subs = tuple(
        unit_span(n, [(x, y) for x in range(n) for y in range(n) if X.D[x][y] <= t])
        for t in bps
    )
    return QuantumMetricFiltration(VNAlgebra.diagonal(n, X.labels), tuple(bps), subs)


def recover_metric(F: QuantumMetricFiltration) -> FiniteMetricSpace:
    """``d(x, y)`` = first breakpoint whose subspace has a basis element with nonzero ``(x, y)`` entry."""
    if F.algebra.kind != ABELIAN_DIAGONAL:
        raise NotAbelian(f"metric recovery needs the diagonal algebra, got {F.algebra.kind}")
    n = F.n
    D: List[List[Optional[Fraction]]] = [[None] * n for _ in range(n)]
    for t, S in zip(F.breakpoints, F.subspaces):
        support = set()
        for b in S.basis:
            support.update(k for k, e in enumerate(b.entries) if e != 0)
        for k in support:
            x, y = divmod(k, n)
            if D[x][y] is None:
                D[x][y] = t
    for x in range(n):
        for y in range(n):
            if D[x][y] is None:
                raise NoFiniteDistance(x, y)
    labels = F.algebra.labels or tuple(str(i) for i in range(n))
    return validate_metric(labels, D)


def iterate_powers(V0: OperatorSubspace, V1: OperatorSubspace) -> List[OperatorSubspace]:
    """``[V0, V1, V1^2, ...]`` truncated where the sequence stops growing."""
    subs = [V0]
    if V1 == V0:
        return subs
    subs.append(V1)
    cur = V1
    for _ in range(V1.n * V1.n):
        nxt = subspace_product(cur, V1)
        if nxt == cur:
            break
        subs.append(nxt)
        cur = nxt
    return subs


def filtration_from_graph(G: SimpleGraph, algebra: str = "full") -> QuantumMetricFiltration:
    """``V_1 = span{E_ij : i = j or i ~ j}``, ``V_k = V_1^k``.

    ``algebra="full"`` uses ``M_n`` (so ``V_0`` is the scalars);
    ``algebra="abelian"`` uses the diagonal algebra (so ``V_0`` is the
    diagonal), which is the variant whose recovered metric is the
    shortest-path metric.
    """
    n = G.n
    dist = G.bfs_distances()
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i][j] is None]
    if missing:
        raise Disconnected(missing)
    if algebra == "full":
        M = VNAlgebra.full(n)
    elif algebra == "abelian":
        M = VNAlgebra.diagonal(n, G.labels)
    else:
        raise ValueError(f"algebra must be 'full' or 'abelian', got {algebra!r}")
    pairs = [(i, i) for i in range(n)] + [(i, j) for i, j in G.edges] + [(j, i) for i, j in G.edges]
    subs = iterate_powers(M.commutant(), unit_span(n, pairs))
    return QuantumMetricFiltration(M, tuple(range(len(subs))), tuple(subs))


def _contains_identity(S: OperatorSubspace) -> bool:
    return subspace_contains(S, MatrixGQ.identity(S.n))


def verify_filtration_axioms(F: QuantumMetricFiltration) -> VerificationReport:
    """Nesting, ``V_s V_t ⊆ V_{s+t}``, ``V_0 = M'``, and operator-system checks."""
    report = VerificationReport()
    subs, bps = F.subspaces, F.breakpoints
    bad_nest = next((i for i in range(len(subs) - 1) if not subspace_leq(subs[i], subs[i + 1])), None)
    report.add("nesting", bad_nest is None, witness=None if bad_nest is None else (bad_nest, bad_nest + 1))

    witness = None
    for i in range(len(subs)):
        for j in range(len(subs)):
            target = F.at(bps[i] + bps[j])
            if target.is_full():
                continue
            if not all(subspace_contains(target, A @ B) for A in subs[i].basis for B in subs[j].basis):
                witness = (i, j)
                break
        if witness:
            break
    report.add("axiom1_products", witness is None, witness=witness)
    report.structural("axiom2_right_continuity", "step representation on half-open intervals")
    comm = F.algebra.commutant()
    report.add("axiom3_commutant", subs[0] == comm,
               note=f"dim V_0 = {subs[0].dim}, dim M' = {comm.dim}")
    bad_sys = next((i for i, S in enumerate(subs) if not (_contains_identity(S) and is_adjoint_closed(S))), None)
    report.add("operator_systems", bad_sys is None, witness=bad_sys)
    return report


def _slices(Y, n: int, d: int):
    """The ``d^2`` matrices ``Y_kl[i, j] = Y[i*d + k, j*d + l]``; ``Y ∈ W ⊗ M_d`` iff all lie in ``W``."""
    if isinstance(Y, MatrixGQ):
        e = Y.entries
        nd = n * d
        for k in range(d):
            for l in range(d):
                yield (k, l), MatrixGQ._raw(n, n, tuple(e[(i * d + k) * nd + j * d + l]
                                                        for i in range(n) for j in range(n)))
    else:
        A = Y.reshape(n, d, n, d)
        for k in range(d):
            for l in range(d):
                yield (k, l), A[:, k, :, l]


def _float_residual(W: OperatorSubspace, Y: np.ndarray) -> float:
    y = Y.reshape(-1)
    if W.dim == 0:
        return float(np.max(np.abs(y))) if y.size else 0.0
    B = np.array([b.to_numpy().reshape(-1) for b in W.basis]).T
    Q, _ = np.linalg.qr(B)
    r = y - Q @ (Q.conj().T @ y)
    return float(np.max(np.abs(r)))


def conjugation_invariance_check(
    rep: GameAlgebraRep,
    F_V: QuantumMetricFiltration,
    F_W: QuantumMetricFiltration,
    tol: float = 1e-9,
) -> VerificationReport:
    """Check ``P (A ⊗ 1_d) P* ∈ W_t ⊗ M_d`` for every basis element ``A`` of every ``V_t``.

    ``P`` maps ``l^2(X) ⊗ C^d`` to ``l^2(Y) ⊗ C^d`` and has blocks
    ``P[y][x] = E[x][y]``, so a permutation rep of ``g`` sends ``E_xx'`` to
    ``E_g(x)g(x')``.  Magic-unitarity and the distance intertwiner are
    reported alongside; the conjugation checks run regardless.
    """
    n = F_V.n
    if F_W.n != n or rep.nx != n or rep.ny != n:
        raise DimensionMismatch(
            f"filtrations in M_{F_V.n} and M_{F_W.n}, rep is {rep.nx}x{rep.ny}")
    report = VerificationReport()
    mu = is_magic_unitary(rep, tol)
    report.add("magic_unitary", mu.ok, mu.max_residual, note=mu.summary())
    if not mu.ok:
        report.reason = "rep is not a magic unitary"
        return report
    exact = rep.mode == "exact"
    d = rep.d
    if exact:
        P = GameAlgebraRep.exact([[rep.blocks[x][y] for x in range(n)] for y in range(n)]).assemble()
        Ps = P.adjoint()
        Id = MatrixGQ.identity(d)
    else:
        P = GameAlgebraRep.float(np.swapaxes(rep.blocks, 0, 1)).assemble()
        Ps = P.conj().T
        Id = np.eye(d)
    for i, (t, S) in enumerate(zip(F_V.breakpoints, F_V.subspaces)):
        W = F_W.at(t)
        witness, worst = None, 0.0
        for k, A in enumerate(S.basis):
            if exact:
                Y = P @ A.kron(Id) @ Ps
            else:
                Y = P @ np.kron(A.to_numpy(), Id) @ Ps
            for kl, Ykl in _slices(Y, n, d):
                if exact:
                    ok = subspace_contains(W, Ykl)
                    res = 0.0 if ok else Ykl.max_abs()
                else:
                    res = _float_residual(W, Ykl)
                    ok = res <= tol
                worst = max(worst, res)
                if not ok and witness is None:
                    witness = {"t": format_rational(t), "basis_index": k,
                               "pivot": list(S.pivots[k]), "slice": list(kl)}
        report.add(f"invariance_t={format_rational(t)}", witness is None, worst, witness)
    if F_V.algebra.kind == ABELIAN_DIAGONAL and F_W.algebra.kind == ABELIAN_DIAGONAL:
        X = recover_metric(F_V)
        Y = recover_metric(F_W)
        ok, res = verify_intertwiner(rep, X, Y, tol)
        report.add("intertwiner", ok, res, note="distance matrices recovered from the filtrations")
    return report
