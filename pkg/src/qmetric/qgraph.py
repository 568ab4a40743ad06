"""Finite quantum sets, quantum adjacency matrices and their operator systems.

A quantum set is ``B = ⊕_b M_{n_b}`` with the trace ``ψ(x) = Σ_b w_b Tr(x_b)``.
Everything is computed in the basis of matrix units ``E^b_ij`` (block by
block, row-major inside a block).  That basis is orthogonal for the GNS
inner product ``<x, y> = ψ(x* y)`` with Gram matrix ``G = diag(w_b)``, so
adjoints stay rational: for ``T: H1 -> H2`` the GNS adjoint is
``G1^{-1} T^* G2``.  Adjacency maps ``A`` are given in these coordinates.

Operator subspaces of ``B(L^2)`` (the bimodule picture) are returned in the
orthonormal basis ``E^b_ij / sqrt(w_b)``; the change of basis must be
rational, which holds whenever the weight ratios are rational squares
(e.g. every δ-form whose blocks all have the same size).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

from .linalg import (
    MatrixGQ,
    OperatorSubspace,
    Scalar,
    is_adjoint_closed,
    subspace_contains,
    subspace_span,
    subspace_sum,
    to_exact,
)
from .metric import NotSymmetric
from .report import VerificationReport
from .wstar import QuantumMetricFiltration, VNAlgebra, iterate_powers

__all__ = [
    "FiniteQuantumSet",
    "NotDeltaForm",
    "NotIdempotent",
    "NotReflexive",
    "build_quantum_set",
    "is_delta_form",
    "verify_quantum_adjacency",
    "classical_graph_embed",
    "quantum_set_algebra",
    "bimodule_from_adjacency",
    "bimodule_projection",
    "verify_quantum_graph_os",
    "filtration_from_quantum_graph",
]


class NotDeltaForm(ValueError):
    def __init__(self, mmstar: MatrixGQ):
        self.matrix = mmstar
        super().__init__("m m* is not a scalar multiple of the identity")


class NotIdempotent(ValueError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"P∘P != P (max residual {residual:.3g})")


class NotReflexive(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteQuantumSet:
    block_sizes: Tuple[int, ...]
    weights: Tuple[Fraction, ...]
    # derived
    basis: Tuple[Tuple[int, int, int], ...] = field(init=False)
    gram: Tuple[Fraction, ...] = field(init=False)
    unit: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        weights = tuple(Fraction(to_exact(w)) for w in self.weights)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("block sizes must be >= 1")
        if len(weights) != len(sizes):
            raise ValueError("need one weight per block")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        basis = tuple((b, i, j) for b, s in enumerate(sizes) for i in range(s) for j in range(s))
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "gram", tuple(weights[b] for b, _, _ in basis))
        object.__setattr__(self, "unit", tuple(k for k, (b, i, j) in enumerate(basis) if i == j))
        index = {e: k for k, e in enumerate(basis)}
        mul: Dict[Tuple[int, int], int] = {}
        for r, (b, i, j) in enumerate(basis):
            for l in range(sizes[b]):
                mul[(r, index[(b, j, l)])] = index[(b, i, l)]
        object.__setattr__(self, "_mul", mul)
        g = self.gram
        mstar: List[List[Tuple[Tuple[int, int], Fraction]]] = [[] for _ in basis]
        for (p, q), k in mul.items():
            mstar[k].append(((p, q), g[k] / (g[p] * g[q])))
        object.__setattr__(self, "_mstar", tuple(tuple(sorted(t)) for t in mstar))
        self._check_laws()

    @property
    def dim(self) -> int:
        return len(self.basis)

    def psi_one(self) -> Fraction:
        """``ψ(1)``; not normalised to 1 in general."""
        return sum((w * s for w, s in zip(self.weights, self.block_sizes)), Fraction(0))

    def mul(self, r: int, s: int) -> Optional[int]:
        """Product of basis elements ``r`` and ``s`` (a basis index, or None for zero)."""
        return self._mul.get((r, s))

    def is_commutative(self) -> bool:
        return all(s == 1 for s in self.block_sizes)

    def _check_laws(self):
        dim = self.dim
        for r in range(dim):
            for s in range(dim):
                rs = self.mul(r, s)
                for t in range(dim):
                    st = self.mul(s, t)
                    left = None if rs is None else self.mul(rs, t)
                    right = None if st is None else self.mul(r, st)
                    if left != right:
                        raise AssertionError(f"associativity fails at {(r, s, t)}")
        for r in range(dim):
            if [self.mul(u, r) for u in self.unit if self.mul(u, r) is not None] != [r]:
                raise AssertionError(f"left unit law fails at {r}")
            if [self.mul(r, u) for u in self.unit if self.mul(r, u) is not None] != [r]:
                raise AssertionError(f"right unit law fails at {r}")

    # dense structure maps, mainly for audit and independent checks

    def m_matrix(self) -> MatrixGQ:
        dim = self.dim
        data = {k * dim * dim + r * dim + s: Fraction(1) for (r, s), k in self._mul.items()}
        return MatrixGQ.from_sparse(dim, dim * dim, data)

    def m_adjoint_matrix(self) -> MatrixGQ:
        dim = self.dim
        data = {}
        for k, terms in enumerate(self._mstar):
            for (p, q), c in terms:
                data[(p * dim + q) * dim + k] = c
        return MatrixGQ.from_sparse(dim * dim, dim, data)

    def eta_vector(self) -> MatrixGQ:
        return MatrixGQ.from_sparse(self.dim, 1, {k: Fraction(1) for k in self.unit})

    def eta_adjoint(self) -> MatrixGQ:
        """``η*`` as a row vector: ``η*(x) = ψ(x)``."""
        return MatrixGQ.from_sparse(1, self.dim, {k: self.gram[k] for k in self.unit})

    def gns_adjoint(self, T: MatrixGQ) -> MatrixGQ:
        """GNS adjoint of an operator on ``L^2`` given in matrix-unit coordinates."""
        dim = self.dim
        g = self.gram
        Ts = T.adjoint()
        e = Ts.entries
        return MatrixGQ._raw(dim, dim, tuple(e[i * dim + j] * g[j] / g[i] for i in range(dim) for j in range(dim)))

    def sandwich(self, A: MatrixGQ, T: MatrixGQ) -> MatrixGQ:
        """``m (A ⊗ T) m*`` computed from the structure constants."""
        dim = self.dim
        a_cols = _columns(A)
        t_cols = _columns(T)
        out: Dict[int, Scalar] = {}
        for k, terms in enumerate(self._mstar):
            for (p, q), c in terms:
                for r, arp in a_cols[p]:
                    for s, tsq in t_cols[q]:
                        u = self._mul.get((r, s))
                        if u is None:
                            continue
                        idx = u * dim + k
                        out[idx] = out.get(idx, 0) + c * arp * tsq
        return MatrixGQ.from_sparse(dim, dim, {k: v for k, v in out.items() if v != 0})

    def to_dict(self) -> dict:
        from .linalg import format_rational

        return {"blocks": list(self.block_sizes), "weights": [format_rational(w) for w in self.weights]}


def _columns(M: MatrixGQ) -> List[List[Tuple[int, Scalar]]]:
    c = M.cols
    cols: List[List[Tuple[int, Scalar]]] = [[] for _ in range(c)]
    for idx, v in enumerate(M.entries):
        if v != 0:
            i, j = divmod(idx, c)
            cols[j].append((i, v))
    return cols


def build_quantum_set(block_sizes: Sequence[int], psi_weights: Sequence) -> FiniteQuantumSet:
    return FiniteQuantumSet(tuple(block_sizes), tuple(psi_weights))


def is_delta_form(Q: FiniteQuantumSet) -> Fraction:
    """``δ²`` if ``m m* = δ² id``; raises :class:`NotDeltaForm` otherwise."""
    dim = Q.dim
    I = MatrixGQ.identity(dim)
    mm = Q.sandwich(I, I)
    c = mm[0, 0]
    if mm != I.scale(c) or c == 0:
        raise NotDeltaForm(mm)
    return Fraction(c)


def _square_matrix(A, dim: int) -> MatrixGQ:
    if not isinstance(A, MatrixGQ):
        A = MatrixGQ.from_rows(A)
    if A.shape != (dim, dim):
        raise ValueError(f"adjacency must be {dim}x{dim}, got {A.shape}")
    return A


def verify_quantum_adjacency(Q: FiniteQuantumSet, A) -> VerificationReport:
    """The three quantum-adjacency axioms, checked exactly."""
    delta2 = is_delta_form(Q)
    dim = Q.dim
    A = _square_matrix(A, dim)
    I = MatrixGQ.identity(dim)
    report = VerificationReport()

    r1 = Q.sandwich(A, A) - A.scale(delta2)
    report.add("schur_idempotent", r1.is_zero(), r1.max_abs(), note="m(A⊗A)m* = δ²A")

    # (id ⊗ η*m)(id ⊗ A ⊗ id)(m*η ⊗ id), column k:
    #   out[p, k] = Σ_{q,r} C[p,q] A[r,q] H[r,k]
    # with C[p,q] = (m*η)_(p,q) and H[r,k] = (η*m)_(r,k).
    C: Dict[int, Scalar] = {}
    for u in Q.unit:
        for (p, q), c in Q._mstar[u]:
            C[p * dim + q] = C.get(p * dim + q, 0) + c
    Cm = MatrixGQ.from_sparse(dim, dim, C)
    H = MatrixGQ.from_sparse(dim, dim, {
        r * dim + k: Q.gram[u]
        for (r, k), u in Q._mul.items() if u in set(Q.unit)
    })
    r2 = Cm @ A.transpose() @ H - A
    report.add("real", r2.is_zero(), r2.max_abs(), note="(id⊗η*m)(id⊗A⊗id)(m*η⊗id) = A")

    r3 = Q.sandwich(A, I) - I.scale(delta2)
    report.add("reflexive", r3.is_zero(), r3.max_abs(), note="m(A⊗id)m* = δ² id")
    return report


def classical_graph_embed(adj: Sequence[Sequence[int]]) -> Tuple[FiniteQuantumSet, MatrixGQ]:
    """``C^n`` with uniform weights ``1/n`` (so ``δ² = n``) and ``A`` = the adjacency matrix.

    The bimodule map ``T -> δ^{-2} m(A⊗T)m*`` of this pair is Schur
    multiplication by ``adj``.
    """
    n = len(adj)
    if any(len(row) != n for row in adj):
        raise ValueError("adjacency matrix must be square")
    if any(v not in (0, 1) for row in adj for v in row):
        raise ValueError("adjacency entries must be 0 or 1")
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i][j] != adj[j][i]:
                raise NotSymmetric(i, j, detail="adjacency matrix is not symmetric")
    for i in range(n):
        if adj[i][i] != 1:
            raise NotReflexive(f"adj[{i}][{i}] = {adj[i][i]}")
    Q = build_quantum_set([1] * n, [Fraction(1, n)] * n)
    return Q, MatrixGQ.from_rows(adj)


def quantum_set_algebra(Q: FiniteQuantumSet) -> VNAlgebra:
    """``B`` acting on ``L^2(B)`` by left multiplication, in the orthonormal basis."""
    dim = Q.dim
    gens = []
    for a in range(dim):
        data = {}
        for k in range(dim):
            u = Q.mul(a, k)
            if u is not None:
                data[u * dim + k] = Fraction(1)
        gens.append(MatrixGQ.from_sparse(dim, dim, data))
    if Q.is_commutative():
        return VNAlgebra.diagonal(dim)
    return VNAlgebra.general(dim, gens)


def _sqrt_ratio(a: Fraction, b: Fraction) -> Fraction:
    r = a / b
    pn, pd = isqrt(r.numerator), isqrt(r.denominator)
    if pn * pn != r.numerator or pd * pd != r.denominator:
        raise ValueError(f"weight ratio {r} is not a rational square; orthonormal coordinates are irrational")
    return Fraction(pn, pd)


def bimodule_projection(Q: FiniteQuantumSet, A) -> List[MatrixGQ]:
    """Images ``P(E_ij)`` for all matrix units of ``B(L^2)`` in orthonormal coordinates.

    ``P(T) = δ^{-2} m(A⊗T)m*``; entry ``(i, j)`` of an operator scales by
    ``sqrt(G_i / G_j)`` when passing to orthonormal coordinates.
    """
    delta2 = is_delta_form(Q)
    dim = Q.dim
    A = _square_matrix(A, dim)
    g = Q.gram
    ratio = [[_sqrt_ratio(g[i], g[j]) for j in range(dim)] for i in range(dim)]
    inv_d2 = 1 / delta2
    images = []
    for i in range(dim):
        for j in range(dim):
            # orthonormal E_ij -> matrix-unit coordinates
            T = MatrixGQ.from_sparse(dim, dim, {i * dim + j: 1 / ratio[i][j]})
            img = Q.sandwich(A, T)
            data = {}
            for idx, v in enumerate(img.entries):
                if v != 0:
                    p, q = divmod(idx, dim)
                    data[idx] = v * inv_d2 * ratio[p][q]
            images.append(MatrixGQ.from_sparse(dim, dim, data))
    return images


def bimodule_from_adjacency(Q: FiniteQuantumSet, A) -> OperatorSubspace:
    """Image of the projection ``P``; raises :class:`NotIdempotent` if ``P∘P != P``."""
    dim = Q.dim
    images = bimodule_projection(Q, A)
    # P as a dim^2 x dim^2 matrix acting on row-major vectorisations
    cols = [img.entries for img in images]
    Pm = MatrixGQ._raw(dim * dim, dim * dim,
                       tuple(cols[c][r] for r in range(dim * dim) for c in range(dim * dim)))
    R = Pm @ Pm - Pm
    if not R.is_zero():
        raise NotIdempotent(R.max_abs())
    return subspace_span(images, dim)


def verify_quantum_graph_os(S: OperatorSubspace, M: VNAlgebra) -> VerificationReport:
    """Operator system (contains I, adjoint-closed) and ``M'``-``M'`` bimodule."""
    if S.n != M.n:
        raise ValueError(f"S in M_{S.n}, M in M_{M.n}")
    report = VerificationReport()
    report.add("contains_identity", subspace_contains(S, MatrixGQ.identity(S.n)))
    report.add("adjoint_closed", is_adjoint_closed(S))
    comm = M.commutant()
    witness = None
    for a_idx, a in enumerate(comm.basis):
        for s_idx, s in enumerate(S.basis):
            if not subspace_contains(S, a @ s):
                witness = ("left", a_idx, s_idx)
            elif not subspace_contains(S, s @ a):
                witness = ("right", a_idx, s_idx)
            if witness:
                break
        if witness:
            break
    report.add("bimodule", witness is None, witness=witness, note=f"dim M' = {comm.dim}")
    return report


def filtration_from_quantum_graph(S: OperatorSubspace, M: VNAlgebra) -> QuantumMetricFiltration:
    """``V_0 = M'``, ``V_1 = span(M' ∪ S)``, ``V_k = V_1^k`` until stable."""
    report = verify_quantum_graph_os(S, M)
    if not report.ok:
        raise ValueError(f"not a quantum graph: {report.summary()}")
    V0 = M.commutant()
    subs = iterate_powers(V0, subspace_sum(V0, S))
    return QuantumMetricFiltration(M, tuple(range(len(subs))), tuple(subs))
