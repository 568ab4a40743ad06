"""Finite-dimensional representations of the isometry-game *-algebra.

A representation assigns a ``d x d`` projection ``E[x][y]`` to every pair
``x in X, y in Y``.  Within-side generators vanish in the game algebra and
``e_{x,y} = e_{y,x}``, so the ``nx x ny`` block array is all the data there
is.  Blocks are either exact (:class:`~qmetric.linalg.MatrixGQ`) or float
(a complex ``ndarray`` of shape ``(nx, ny, d, d)``).

Residuals are maximum entry moduli.  Exact-mode checks pass iff the residual
is exactly zero; float-mode checks pass iff the residual is at most ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .linalg import MatrixGQ, as_float_matrix
from .metric import FiniteMetricSpace, Isometry, charpoly
from .report import VerificationReport

__all__ = [
    "SizeMismatch",
    "NotProjection",
    "GameAlgebraRep",
    "SearchResult",
    "is_magic_unitary",
    "verify_rep_relations",
    "verify_intertwiner",
    "rep_from_permutation",
    "rep_from_isometry",
    "pauli_block_rep",
    "random_magic_unitary",
    "spectral_obstruction",
    "search_quantum_rep",
    "relation_penalty",
]

DEFAULT_TOL = 1e-9


class SizeMismatch(ValueError):
    pass


class NotProjection(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GameAlgebraRep:
    nx: int
    ny: int
    d: int
    blocks: object  # tuple of tuples of MatrixGQ, or ndarray (nx, ny, d, d)
    mode: str

    @classmethod
    def exact(cls, blocks: Sequence[Sequence[MatrixGQ]]) -> "GameAlgebraRep":
        blocks = tuple(tuple(b if isinstance(b, MatrixGQ) else MatrixGQ.from_rows(b) for b in row) for row in blocks)
        nx = len(blocks)
        ny = len(blocks[0]) if nx else 0
        d = blocks[0][0].rows if nx and ny else 0
        for row in blocks:
            if len(row) != ny:
                raise ValueError("ragged block array")
            for b in row:
                if b.shape != (d, d):
                    raise ValueError(f"block of shape {b.shape}, expected {(d, d)}")
        return cls(nx, ny, d, blocks, "exact")

    @classmethod
    def float(cls, blocks) -> "GameAlgebraRep":
        arr = np.array(blocks, dtype=complex)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise ValueError(f"expected blocks of shape (nx, ny, d, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("blocks contain non-finite entries")
        arr.setflags(write=False)
        nx, ny, d, _ = arr.shape
        return cls(nx, ny, d, arr, "float")

    def __eq__(self, other):
        if not isinstance(other, GameAlgebraRep):
            return NotImplemented
        if (self.nx, self.ny, self.d, self.mode) != (other.nx, other.ny, other.d, other.mode):
            return False
        if self.mode == "exact":
            return self.blocks == other.blocks
        return bool(np.array_equal(self.blocks, other.blocks))

    def block(self, x: int, y: int):
        return self.blocks[x][y] if self.mode == "exact" else self.blocks[x, y]

    def to_float(self) -> "GameAlgebraRep":
        if self.mode == "float":
            return self
        arr = np.empty((self.nx, self.ny, self.d, self.d), dtype=complex)
        for x in range(self.nx):
            for y in range(self.ny):
                arr[x, y] = self.blocks[x][y].to_numpy()
        return GameAlgebraRep.float(arr)

    def assemble(self):
        """The block matrix ``U = [E[x][y]]`` of size ``nx*d x ny*d``."""
        if self.mode == "float":
            return np.block([[self.blocks[x, y] for y in range(self.ny)] for x in range(self.nx)])
        d = self.d
        rows = []
        for x in range(self.nx):
            for i in range(d):
                row = []
                for y in range(self.ny):
                    b = self.blocks[x][y]
                    row.extend(b.entries[i * d:(i + 1) * d])
                rows.append(row)
        return MatrixGQ._raw(self.nx * d, self.ny * d, tuple(e for r in rows for e in r))

    def permuted(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "GameAlgebraRep":
        """Rep with blocks ``E'[x][y] = E[row_perm[x]][col_perm[y]]``."""
        if self.mode == "float":
            return GameAlgebraRep.float(self.blocks[np.ix_(list(row_perm), list(col_perm))])
        return GameAlgebraRep.exact([[self.blocks[r][c] for c in col_perm] for r in row_perm])


class _ExactOps:
    exact = True

    def __init__(self, d):
        self.I = MatrixGQ.identity(d)
        self.Z = MatrixGQ.zeros(d)

    @staticmethod
    def adj(a):
        return a.adjoint()

    @staticmethod
    def scale(c, a):
        return a.scale(c)

    @staticmethod
    def resid(a) -> float:
        return a.max_abs()

    @staticmethod
    def ok(a, tol) -> bool:
        return a.is_zero()

    @staticmethod
    def is_zero(a) -> bool:
        return a.is_zero()


class _FloatOps:
    exact = False

    def __init__(self, d):
        self.I = np.eye(d, dtype=complex)
        self.Z = np.zeros((d, d), dtype=complex)

    @staticmethod
    def adj(a):
        return a.conj().T

    @staticmethod
    def scale(c, a):
        return float(c) * a

    @staticmethod
    def resid(a) -> float:
        return float(np.max(np.abs(a))) if a.size else 0.0

    @staticmethod
    def ok(a, tol) -> bool:
        return (float(np.max(np.abs(a))) if a.size else 0.0) <= tol

    @staticmethod
    def is_zero(a) -> bool:
        return not np.any(a)


def _ops(rep: GameAlgebraRep):
    return _ExactOps(rep.d) if rep.mode == "exact" else _FloatOps(rep.d)


class _Worst:
    """Worst residual of one relation family, and the witness of its worst failure."""

    def __init__(self, ops, tol):
        self.ops, self.tol = ops, tol
        self.residual = 0.0
        self.witness = None
        self.passed = True
        self._fail_residual = -1.0

    def see(self, mat, witness):
        if self.ops.exact and mat.is_zero():
            return
        r = self.ops.resid(mat)
        self.residual = max(self.residual, r)
        if not self.ops.ok(mat, self.tol):
            self.passed = False
            if r > self._fail_residual:
                self._fail_residual = r
                self.witness = witness

    def report(self, rep: VerificationReport, name: str, note: str = ""):
        rep.add(name, self.passed, self.residual, None if self.passed else self.witness, note)


def _sum(ops, mats):
    s = None
    for m in mats:
        s = m if s is None else s + m
    return ops.Z if s is None else s


def is_magic_unitary(rep: GameAlgebraRep, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Self-adjoint idempotent blocks whose rows and columns sum to the identity."""
    report = VerificationReport()
    if rep.nx != rep.ny:
        report.reason = f"SizeMismatch: {rep.nx} rows vs {rep.ny} columns"
        return report
    ops = _ops(rep)
    n = rep.nx
    sa, idem, rows, cols = (_Worst(ops, tol) for _ in range(4))
    for x in range(n):
        for y in range(n):
            E = rep.block(x, y)
            sa.see(E - ops.adj(E), (x, y))
            idem.see(E @ E - E, (x, y))
    for x in range(n):
        rows.see(_sum(ops, (rep.block(x, y) for y in range(n))) - ops.I, (x,))
    for y in range(n):
        cols.see(_sum(ops, (rep.block(x, y) for x in range(n))) - ops.I, (y,))
    sa.report(report, "self_adjoint")
    idem.report(report, "idempotent")
    rows.report(report, "row_sums")
    cols.report(report, "column_sums")
    return report


def _check_spaces(rep: GameAlgebraRep, X: FiniteMetricSpace, Y: FiniteMetricSpace):
    if X.n != rep.nx or Y.n != rep.ny:
        raise SizeMismatch(f"rep is {rep.nx}x{rep.ny} but |X|={X.n}, |Y|={Y.n}")


def verify_rep_relations(
    rep: GameAlgebraRep, X: FiniteMetricSpace, Y: FiniteMetricSpace, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Check the eight defining relations of the isometry-game algebra.

    Relations 1 (within-side generators vanish) and 3 (``e_xy = e_yx``) hold
    by construction of the data model and are reported as structural.
    """
    _check_spaces(rep, X, Y)
    ops = _ops(rep)
    nx, ny = rep.nx, rep.ny
    # exactly-zero blocks contribute nothing to any sum or product below
    B = [[rep.block(x, y) for y in range(ny)] for x in range(nx)]
    nz = [[not ops.is_zero(B[x][y]) for y in range(ny)] for x in range(nx)]
    report = VerificationReport()
    report.structural("r1_within_side_zero", "within-side generators are not stored")
    proj = _Worst(ops, tol)
    for x in range(nx):
        for y in range(ny):
            if nz[x][y]:
                E = B[x][y]
                proj.see(E - ops.adj(E), (x, y))
                proj.see(E @ E - E, (x, y))
    proj.report(report, "r2_projection")
    report.structural("r3_symmetry", "e_xy and e_yx share one block")
    rows, cols = _Worst(ops, tol), _Worst(ops, tol)
    for x in range(nx):
        rows.see(_sum(ops, (B[x][y] for y in range(ny) if nz[x][y])) - ops.I, (x,))
    for y in range(ny):
        cols.see(_sum(ops, (B[x][y] for x in range(nx) if nz[x][y])) - ops.I, (y,))
    rows.report(report, "r4_row_sums")
    cols.report(report, "r5_column_sums")
    rorth, corth = _Worst(ops, tol), _Worst(ops, tol)
    for x in range(nx):
        for y in range(ny):
            for y2 in range(ny):
                if y2 != y and nz[x][y] and nz[x][y2]:
                    rorth.see(B[x][y] @ B[x][y2], (x, y, y2))
    for y in range(ny):
        for x in range(nx):
            for x2 in range(nx):
                if x2 != x and nz[x][y] and nz[x2][y]:
                    corth.see(B[x][y] @ B[x2][y], (x, x2, y))
    rorth.report(report, "r6_row_orthogonality")
    corth.report(report, "r7_column_orthogonality")
    dist = _Worst(ops, tol)
    for x in range(nx):
        for y in range(ny):
            lhs = _sum(ops, (ops.scale(X.D[x][k], B[k][y]) for k in range(nx) if X.D[x][k] != 0 and nz[k][y]))
            rhs = _sum(ops, (ops.scale(Y.D[k][y], B[x][k]) for k in range(ny) if Y.D[k][y] != 0 and nz[x][k]))
            dist.see(lhs - rhs, (x, y))
    dist.report(report, "r8_distance")
    return report


def _kron_dist(D, d: int, exact: bool):
    if exact:
        return MatrixGQ.from_rows(D).kron(MatrixGQ.identity(d))
    return np.kron(np.array([[float(v) for v in row] for row in D]), np.eye(d))


def verify_intertwiner(
    rep: GameAlgebraRep, X: FiniteMetricSpace, Y: FiniteMetricSpace, tol: float = DEFAULT_TOL
) -> Tuple[bool, float]:
    """Check ``(D_X (x) 1_d) U = U (D_Y (x) 1_d)`` for ``U = [E[x][y]]``."""
    if rep.nx != rep.ny:
        raise SizeMismatch(f"intertwiner needs a square block array, got {rep.nx}x{rep.ny}")
    _check_spaces(rep, X, Y)
    exact = rep.mode == "exact"
    U = rep.assemble()
    DX = _kron_dist(X.D, rep.d, exact)
    DY = _kron_dist(Y.D, rep.d, exact)
    R = DX @ U - U @ DY
    if exact:
        return R.is_zero(), R.max_abs()
    r = float(np.max(np.abs(R))) if R.size else 0.0
    return r <= tol, r


def rep_from_permutation(perm: Sequence[int]) -> GameAlgebraRep:
    """Exact one-dimensional rep with ``E[x][y] = [perm[x] == y]``."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm!r} is not a permutation")
    one, zero = MatrixGQ.identity(1), MatrixGQ.zeros(1)
    return GameAlgebraRep.exact([[one if perm[x] == y else zero for y in range(n)] for x in range(n)])


def rep_from_isometry(g: Isometry) -> GameAlgebraRep:
    return rep_from_permutation(g.perm)


def _is_projection(P, tol) -> bool:
    if isinstance(P, MatrixGQ):
        return P == P.adjoint() and P @ P == P
    return float(np.max(np.abs(P - P.conj().T))) <= tol and float(np.max(np.abs(P @ P - P))) <= tol


def pauli_block_rep(P, Q, X: FiniteMetricSpace | None = None, Y: FiniteMetricSpace | None = None,
                    tol: float = DEFAULT_TOL) -> GameAlgebraRep:
    """4x4 quantum permutation ``[[P,1-P,0,0],[1-P,P,0,0],[0,0,Q,1-Q],[0,0,1-Q,Q]]``.

    Exact when both projections are given as ``MatrixGQ``.
    """
    for space in (X, Y):
        if space is not None and space.n != 4:
            raise SizeMismatch(f"pauli_block_rep needs 4-point spaces, got {space.n}")
    exact = isinstance(P, MatrixGQ) and isinstance(Q, MatrixGQ)
    if not exact:
        P, Q = as_float_matrix(P), as_float_matrix(Q)
    if P.shape != Q.shape or P.shape[0] != P.shape[1]:
        raise ValueError("P and Q must be square of equal size")
    for name, M in (("P", P), ("Q", Q)):
        if not _is_projection(M, tol):
            raise NotProjection(f"{name} is not a projection")
    d = P.shape[0]
    I = MatrixGQ.identity(d) if exact else np.eye(d, dtype=complex)
    O = MatrixGQ.zeros(d) if exact else np.zeros((d, d), dtype=complex)
    blocks = [
        [P, I - P, O, O],
        [I - P, P, O, O],
        [O, O, Q, I - Q],
        [O, O, I - Q, Q],
    ]
    return GameAlgebraRep.exact(blocks) if exact else GameAlgebraRep.float(blocks)


def random_magic_unitary(n: int, d: int, rng: np.random.Generator, parts: int | None = None) -> GameAlgebraRep:
    """Float magic unitary ``E[x][y] = sum_k [perm_k(x) = y] P_k``.

    ``P_1, ..., P_parts`` are spectral projections of a Haar-random unitary
    basis (ranks as even as possible) and the ``perm_k`` are uniform random
    permutations, so rows and columns sum to the identity by construction.
    """
    parts = min(d, parts or d)
    Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, _ = np.linalg.qr(Z)
    cuts = np.linspace(0, d, parts + 1).round().astype(int)
    blocks = np.zeros((n, n, d, d), dtype=complex)
    for k in range(parts):
        V = Q[:, cuts[k]:cuts[k + 1]]
        P = V @ V.conj().T
        perm = rng.permutation(n)
        for x in range(n):
            blocks[x, perm[x]] += P
    return GameAlgebraRep.float(blocks)


def spectral_obstruction(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> bool:
    """True when ``D_X`` and ``D_Y`` have different characteristic polynomials.

    An intertwining magic unitary makes ``D_X (x) 1`` and ``D_Y (x) 1``
    similar, so differing polynomials rule out a rep in every dimension.
    """
    if X.n != Y.n:
        raise SizeMismatch(f"|X|={X.n} != |Y|={Y.n}")
    return charpoly(X.D) != charpoly(Y.D)


# --------------------------------------------------------------------------
# Heuristic search


def _dist_arrays(X: FiniteMetricSpace, Y: FiniteMetricSpace):
    DX = np.array([[float(v) for v in row] for row in X.D])
    DY = np.array([[float(v) for v in row] for row in Y.D])
    scale = max(DX.max(initial=0.0), DY.max(initial=0.0)) or 1.0
    return DX / scale, DY / scale


def relation_penalty(E: np.ndarray, DX: np.ndarray, DY: np.ndarray, grad: bool = False):
    """Sum of squared Frobenius residuals of relations 2 and 4-8.

    ``E`` has shape ``(n, n, d, d)`` and is assumed Hermitian blockwise.
    With ``grad=True`` also returns ``G`` such that the directional
    derivative along ``H`` is ``Re sum <G, H>``.
    """
    n, _, d, _ = E.shape
    I = np.eye(d)
    Eh = np.conj(np.swapaxes(E, -1, -2))
    R1 = E @ E - E
    R2 = E.sum(axis=1) - I
    R3 = E.sum(axis=0) - I
    off = ~np.eye(n, dtype=bool)
    # R4[x, y, y'] = E[x,y] E[x,y'],  R5[x, x', y] = E[x,y] E[x',y]
    R4 = E[:, :, None] @ E[:, None, :]
    R4 = R4 * off[None, :, :, None, None]
    R5 = E[:, None, :] @ E[None, :, :]
    R5 = R5 * off[:, :, None, None, None]
    R6 = np.einsum("ak,kbij->abij", DX, E) - np.einsum("akij,kb->abij", E, DY)
    f = sum(float(np.sum(np.abs(R) ** 2)) for R in (R1, R2, R3, R4, R5, R6))
    if not grad:
        return f
    G = 2 * (R1 @ Eh + Eh @ R1 - R1)
    G += 2 * R2[:, None]
    G += 2 * R3[None, :]
    G += 2 * np.einsum("xyzij,xzjk->xyik", R4, Eh)
    G += 2 * np.einsum("xyij,xyzjk->xzik", Eh, R4)
    G += 2 * np.einsum("xwyij,wyjk->xyik", R5, Eh)
    G += 2 * np.einsum("xyij,xwyjk->wyik", Eh, R5)
    G += 2 * np.einsum("xk,xyij->kyij", DX, R6)
    G -= 2 * np.einsum("xyij,ky->xkij", R6, DY)
    return f, G


def _herm(Z):
    return 0.5 * (Z + np.conj(np.swapaxes(Z, -1, -2)))


def _round_to_projections(E: np.ndarray) -> np.ndarray:
    out = np.empty_like(E)
    n, _, d, _ = E.shape
    for x in range(n):
        for y in range(n):
            w, V = np.linalg.eigh(_herm(E[x, y]))
            keep = V[:, w >= 0.5]
            out[x, y] = keep @ keep.conj().T
    return out


@dataclass
class SearchResult:
    """Outcome of :func:`search_quantum_rep`; ``rep is None`` means NotFound (inconclusive)."""

    rep: Optional[GameAlgebraRep]
    penalty: float
    restart: int
    restarts_run: int

    @property
    def found(self) -> bool:
        return self.rep is not None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "penalty": self.penalty,
            "restart": self.restart,
            "restarts_run": self.restarts_run,
        }


def search_quantum_rep(
    X: FiniteMetricSpace,
    Y: FiniteMetricSpace,
    d: int,
    seed: int = 0,
    max_iters: int = 500,
    restarts: int = 4,
    init: GameAlgebraRep | None = None,
    tol: float = 1e-8,
) -> SearchResult:
    """Penalty-minimisation search for a ``d``-dimensional rep.

    Each restart ``i`` draws its start from ``numpy.random.default_rng(seed + i)``
    (restart 0 uses ``init`` when given), minimises :func:`relation_penalty`
    over Hermitian blocks with L-BFGS, snaps every block to the nearest
    projection (spectral truncation at 1/2) and re-polishes.  A rep is
    returned only if it passes :func:`verify_rep_relations` at ``tol``.
    The winner is the first passing restart; otherwise the lowest penalty
    is reported with ``rep=None``.
    """
    if X.n != Y.n:
        return SearchResult(None, float("inf"), -1, 0)
    if d < 1:
        raise ValueError("d must be >= 1")
    n = X.n
    DX, DY = _dist_arrays(X, Y)
    shape = (n, n, d, d)
    size = n * n * d * d

    def unpack(v):
        return _herm((v[:size] + 1j * v[size:]).reshape(shape))

    def fun(v):
        f, G = relation_penalty(unpack(v), DX, DY, grad=True)
        G = _herm(G).ravel()
        return f, np.concatenate([G.real, G.imag])

    def pack(E):
        flat = np.asarray(E, dtype=complex).ravel()
        return np.concatenate([flat.real, flat.imag])

    def polish(v):
        res = minimize(fun, v, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iters, "ftol": 1e-30, "gtol": 1e-14, "maxcor": 20})
        return res.x, float(res.fun)

    best_pen, best_restart = float("inf"), -1
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        if r == 0 and init is not None:
            E0 = init.to_float().blocks + 0.0
        else:
            A = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            E0 = np.eye(d) / n + 0.3 * _herm(A)
        v, pen = polish(pack(E0))
        for _ in range(3):
            E = unpack(v)
            for cand in (_round_to_projections(E), E):
                rep = GameAlgebraRep.float(cand)
                if verify_rep_relations(rep, X, Y, tol).ok:
                    return SearchResult(rep, relation_penalty(cand, DX, DY), r, r + 1)
            if pen > 1e-6:
                break
            v, pen = polish(pack(_round_to_projections(E)))
        if pen < best_pen:
            best_pen, best_restart = pen, r
    return SearchResult(None, best_pen, best_restart, restarts)
