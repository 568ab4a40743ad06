"""Exact linear algebra over Q and Q(i), and canonical operator subspaces.

Scalars are normalised so that real values are always plain
:class:`fractions.Fraction` objects and only genuinely complex values are
:class:`GaussianRational`.  This keeps equality literal (a canonical object
has exactly one representation) and keeps the common real case fast.

Subspaces of ``n x n`` matrices are stored as the reduced row echelon form
of their row-major vectorisations, so two subspaces are equal iff their
``basis`` tuples are equal.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

Rational = Fraction

__all__ = [
    "Rational",
    "GaussianRational",
    "Scalar",
    "gq",
    "to_exact",
    "conj",
    "parse_rational",
    "format_rational",
    "MatrixGQ",
    "as_float_matrix",
    "rref",
    "null_space",
    "OperatorSubspace",
    "subspace_span",
    "subspace_contains",
    "subspace_leq",
    "subspace_product",
    "subspace_sum",
    "is_adjoint_closed",
    "commutant",
    "unit_span",
]


class GaussianRational:
    """A number ``re + i*im`` with rational parts and ``im != 0``.

    Use :func:`gq` to build values; it returns a ``Fraction`` when the
    imaginary part vanishes.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return False
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re or self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other):
        if isinstance(other, GaussianRational):
            return gq(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussianRational):
            return gq(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            return gq(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, (int, Fraction)):
            return gq(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussianRational):
            den = other.re * other.re + other.im * other.im
            num = self * other.conjugate()
            return num / den
        if isinstance(other, (int, Fraction)):
            return gq(self.re / other, self.im / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            den = self.re * self.re + self.im * self.im
            return gq(other * self.re / den, -other * self.im / den)
        return NotImplemented

    def conjugate(self):
        return GaussianRational(self.re, -self.im)


Scalar = Union[Fraction, GaussianRational]


def gq(re, im=0) -> Scalar:
    """Canonical exact scalar ``re + i*im``."""
    if im == 0:
        return Fraction(re)
    return GaussianRational(re, im)


def to_exact(x) -> Scalar:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, _RationalABC):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return gq(to_exact(x[0]), to_exact(x[1]))
    if isinstance(x, complex):
        raise TypeError("complex floats are not exact; pass (re, im) rationals")
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or a 'p/q' string")
    raise TypeError(f"cannot convert {x!r} to an exact scalar")


def conj(z: Scalar) -> Scalar:
    if isinstance(z, GaussianRational):
        return GaussianRational(z.re, -z.im)
    return z


def _modulus(z: Scalar) -> float:
    if isinstance(z, GaussianRational):
        return math.hypot(float(z.re), float(z.im))
    return abs(float(z))


def parse_rational(s: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` (integers, arbitrary precision)."""
    s = s.strip()
    if "/" in s:
        p, q = s.split("/", 1)
        q_int = int(q)
        if q_int <= 0:
            raise ValueError(f"denominator must be positive in {s!r}")
        return Fraction(int(p), q_int)
    return Fraction(int(s))


def format_rational(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class MatrixGQ:
    """Immutable dense matrix over the Gaussian rationals (row-major)."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        entries = tuple(to_exact(e) for e in entries)
        if len(entries) != rows * cols:
            raise ValueError(
                f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {len(entries)}"
            )
        self.rows = rows
        self.cols = cols
        self.entries = entries

    @classmethod
    def _raw(cls, rows, cols, entries) -> "MatrixGQ":
        m = object.__new__(cls)
        m.rows = rows
        m.cols = cols
        m.entries = entries
        return m

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "MatrixGQ":
        rows = [list(r) for r in rows]
        if not rows:
            return cls._raw(0, 0, ())
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), ncols, [e for r in rows for e in r])

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "MatrixGQ":
        cols = rows if cols is None else cols
        return cls._raw(rows, cols, (Fraction(0),) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "MatrixGQ":
        z, o = Fraction(0), Fraction(1)
        return cls._raw(n, n, tuple(o if i == j else z for i in range(n) for j in range(n)))

    @classmethod
    def unit(cls, n: int, i: int, j: int) -> "MatrixGQ":
        """Matrix unit ``E_ij`` in ``M_n`` (0-based)."""
        e = [Fraction(0)] * (n * n)
        e[i * n + j] = Fraction(1)
        return cls._raw(n, n, tuple(e))

    @classmethod
    def from_sparse(cls, rows: int, cols: int, data: Dict[int, Scalar]) -> "MatrixGQ":
        e = [Fraction(0)] * (rows * cols)
        for k, v in data.items():
            e[k] = v
        return cls._raw(rows, cols, tuple(e))

    @classmethod
    def diag(cls, values: Sequence) -> "MatrixGQ":
        n = len(values)
        e = [Fraction(0)] * (n * n)
        for i, v in enumerate(values):
            e[i * n + i] = to_exact(v)
        return cls._raw(n, n, tuple(e))

    def __repr__(self):
        return f"MatrixGQ({self.rows}x{self.cols}, {self.to_rows()!r})"

    def __eq__(self, other):
        if not isinstance(other, MatrixGQ):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def to_rows(self) -> List[List[Scalar]]:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    def to_numpy(self) -> np.ndarray:
        a = np.array([complex(e) for e in self.entries], dtype=complex)
        return a.reshape(self.rows, self.cols)

    def vec(self) -> Dict[int, Scalar]:
        """Sparse row-major vectorisation ``{index: value}`` of nonzero entries."""
        return {k: e for k, e in enumerate(self.entries) if e != 0}

    def is_zero(self) -> bool:
        return not any(self.entries)

    def is_real(self) -> bool:
        return not any(isinstance(e, GaussianRational) for e in self.entries)

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "MatrixGQ") -> "MatrixGQ":
        self._check_same_shape(other)
        return MatrixGQ._raw(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "MatrixGQ") -> "MatrixGQ":
        self._check_same_shape(other)
        return MatrixGQ._raw(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "MatrixGQ":
        return MatrixGQ._raw(self.rows, self.cols, tuple(-a for a in self.entries))

    def scale(self, c) -> "MatrixGQ":
        c = to_exact(c)
        return MatrixGQ._raw(self.rows, self.cols, tuple(c * a for a in self.entries))

    def __matmul__(self, other: "MatrixGQ") -> "MatrixGQ":
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        n, m, p = self.rows, self.cols, other.cols
        a, b = self.entries, other.entries
        b_rows = []
        for k in range(m):
            off = k * p
            b_rows.append([(j, b[off + j]) for j in range(p) if b[off + j] != 0])
        zero = Fraction(0)
        out = [zero] * (n * p)
        for i in range(n):
            acc: Dict[int, Scalar] = {}
            off = i * m
            for k in range(m):
                aik = a[off + k]
                if aik == 0:
                    continue
                for j, bkj in b_rows[k]:
                    if j in acc:
                        acc[j] = acc[j] + aik * bkj
                    else:
                        acc[j] = aik * bkj
            base = i * p
            for j, v in acc.items():
                out[base + j] = v
        return MatrixGQ._raw(n, p, tuple(out))

    def adjoint(self) -> "MatrixGQ":
        r, c = self.rows, self.cols
        e = self.entries
        return MatrixGQ._raw(c, r, tuple(conj(e[i * c + j]) for j in range(c) for i in range(r)))

    def transpose(self) -> "MatrixGQ":
        r, c = self.rows, self.cols
        e = self.entries
        return MatrixGQ._raw(c, r, tuple(e[i * c + j] for j in range(c) for i in range(r)))

    def kron(self, other: "MatrixGQ") -> "MatrixGQ":
        r1, c1, r2, c2 = self.rows, self.cols, other.rows, other.cols
        zero = Fraction(0)
        out = [zero] * (r1 * r2 * c1 * c2)
        width = c1 * c2
        b = other.entries
        b_nz = [(k, v) for k, v in enumerate(b) if v != 0]
        for idx, a in enumerate(self.entries):
            if a == 0:
                continue
            i, j = divmod(idx, c1)
            for k, v in b_nz:
                p, q = divmod(k, c2)
                out[(i * r2 + p) * width + j * c2 + q] = a * v
        return MatrixGQ._raw(r1 * r2, c1 * c2, tuple(out))

    def trace(self) -> Scalar:
        if self.rows != self.cols:
            raise ValueError("trace of a non-square matrix")
        s = Fraction(0)
        for i in range(self.rows):
            s = s + self.entries[i * self.cols + i]
        return s

    def max_abs(self) -> float:
        """Largest entry modulus, as a float (used for residual reporting)."""
        return max((_modulus(e) for e in self.entries), default=0.0)


def as_float_matrix(a, shape: Tuple[int, int] | None = None) -> np.ndarray:
    """Validate and convert to a complex ``ndarray``; rejects NaN/Inf."""
    if isinstance(a, MatrixGQ):
        arr = a.to_numpy()
    else:
        arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


# --------------------------------------------------------------------------
# Dense row reduction


def rref(m: MatrixGQ) -> Tuple[MatrixGQ, int, List[int]]:
    """Reduced row echelon form, rank and pivot columns."""
    rows = m.to_rows()
    nr, nc = m.rows, m.cols
    pivots: List[int] = []
    r = 0
    for c in range(nc):
        if r >= nr:
            break
        piv = next((i for i in range(r, nr) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [inv * x for x in rows[r]]
        for i in range(nr):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return MatrixGQ._raw(nr, nc, tuple(x for row in rows for x in row)), len(pivots), pivots


def null_space(m: MatrixGQ) -> List[Tuple[Scalar, ...]]:
    """Kernel basis: one vector per free column, with a 1 in that column."""
    reduced, rank, pivots = rref(m)
    nc = m.cols
    free = [c for c in range(nc) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * nc
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -reduced[r, f]
        basis.append(tuple(v))
    return basis


# --------------------------------------------------------------------------
# Sparse incremental echelon form (the workhorse behind subspaces)


class _Echelon:
    """Incrementally maintained RREF of sparse row vectors.

    ``rows`` maps pivot column -> row dict with that pivot normalised to 1
    and zeros in every other pivot column.
    """

    __slots__ = ("rows",)

    def __init__(self):
        self.rows: Dict[int, Dict[int, Scalar]] = {}

    def copy(self) -> "_Echelon":
        e = _Echelon()
        e.rows = {p: dict(r) for p, r in self.rows.items()}
        return e

    def reduce(self, v: Dict[int, Scalar]) -> Dict[int, Scalar]:
        v = dict(v)
        for p in [k for k in v if k in self.rows]:
            c = v.get(p)
            if c is None or c == 0:
                continue
            for k, x in self.rows[p].items():
                y = v.get(k, 0) - c * x
                if y == 0:
                    v.pop(k, None)
                else:
                    v[k] = y
        return v

    def add(self, v: Dict[int, Scalar]) -> bool:
        """Insert ``v``; returns True iff the span grew."""
        r = self.reduce(v)
        if not r:
            return False
        p = min(r)
        inv = 1 / r[p]
        if inv != 1:
            r = {k: inv * x for k, x in r.items()}
        for q, row in self.rows.items():
            c = row.get(p)
            if c is None:
                continue
            for k, x in r.items():
                y = row.get(k, 0) - c * x
                if y == 0:
                    row.pop(k, None)
                else:
                    row[k] = y
        self.rows[p] = r
        return True

    def contains(self, v: Dict[int, Scalar]) -> bool:
        return not self.reduce(v)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def sorted_rows(self) -> List[Tuple[int, Dict[int, Scalar]]]:
        return sorted(self.rows.items())

    def kernel(self, ncols: int) -> List[Dict[int, Scalar]]:
        """Kernel basis of the row space's coefficient matrix."""
        out = []
        for f in range(ncols):
            if f in self.rows:
                continue
            v: Dict[int, Scalar] = {f: Fraction(1)}
            for p, row in self.rows.items():
                c = row.get(f)
                if c is not None:
                    v[p] = -c
            out.append(v)
        return out


# --------------------------------------------------------------------------
# Operator subspaces


class OperatorSubspace:
    """A subspace of ``M_n`` in canonical (RREF) basis form.

    Equality is structural: equal subspaces have identical ``basis``.
    """

    __slots__ = ("n", "basis", "_ech")

    def __init__(self, n: int, ech: _Echelon):
        self.n = n
        self._ech = ech
        self.basis: Tuple[MatrixGQ, ...] = tuple(
            MatrixGQ.from_sparse(n, n, row) for _, row in ech.sorted_rows()
        )

    @property
    def ambient_dim(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self):
        return len(self.basis)

    def __eq__(self, other):
        if not isinstance(other, OperatorSubspace):
            return NotImplemented
        return self.n == other.n and self.basis == other.basis

    def __hash__(self):
        return hash((self.n, self.basis))

    def __repr__(self):
        return f"OperatorSubspace(n={self.n}, dim={self.dim})"

    def __contains__(self, a: MatrixGQ) -> bool:
        return subspace_contains(self, a)

    @property
    def pivots(self) -> List[Tuple[int, int]]:
        return [divmod(p, self.n) for p, _ in self._ech.sorted_rows()]

    def is_full(self) -> bool:
        return self.dim == self.n * self.n

    def adjoint(self) -> "OperatorSubspace":
        return subspace_span([b.adjoint() for b in self.basis], self.n)

    @classmethod
    def zero(cls, n: int) -> "OperatorSubspace":
        return cls(n, _Echelon())

    @classmethod
    def full(cls, n: int) -> "OperatorSubspace":
        return unit_span(n, [(i, j) for i in range(n) for j in range(n)])

    @classmethod
    def scalars(cls, n: int) -> "OperatorSubspace":
        return subspace_span([MatrixGQ.identity(n)], n)


def _check_square(a: MatrixGQ, n: int):
    if a.rows != n or a.cols != n:
        raise ValueError(f"dimension mismatch: expected {n}x{n}, got {a.rows}x{a.cols}")


def subspace_span(mats: Iterable[MatrixGQ], n: int) -> OperatorSubspace:
    """Canonical span of a list of ``n x n`` matrices."""
    ech = _Echelon()
    full = n * n
    for a in mats:
        _check_square(a, n)
        if ech.rank == full:
            continue
        ech.add(a.vec())
    return OperatorSubspace(n, ech)


def unit_span(n: int, pairs: Iterable[Tuple[int, int]]) -> OperatorSubspace:
    """Span of matrix units ``E_ij`` for the given (0-based) index pairs."""
    ech = _Echelon()
    one = Fraction(1)
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"matrix unit ({i},{j}) out of range for n={n}")
        k = i * n + j
        if k not in ech.rows:
            ech.rows[k] = {k: one}
    return OperatorSubspace(n, ech)


def subspace_contains(S: OperatorSubspace, a: MatrixGQ) -> bool:
    _check_square(a, S.n)
    return S._ech.contains(a.vec())


def subspace_leq(S: OperatorSubspace, T: OperatorSubspace) -> bool:
    if S.n != T.n:
        raise ValueError(f"dimension mismatch: {S.n} vs {T.n}")
    if S.dim > T.dim:
        return False
    return all(T._ech.contains(row) for _, row in S._ech.sorted_rows())


def subspace_sum(S: OperatorSubspace, T: OperatorSubspace) -> OperatorSubspace:
    if S.n != T.n:
        raise ValueError(f"dimension mismatch: {S.n} vs {T.n}")
    ech = S._ech.copy()
    for _, row in T._ech.sorted_rows():
        ech.add(row)
    return OperatorSubspace(S.n, ech)


def subspace_product(S: OperatorSubspace, T: OperatorSubspace) -> OperatorSubspace:
    """Canonical span of ``{A B : A in basis(S), B in basis(T)}``."""
    if S.n != T.n:
        raise ValueError(f"dimension mismatch: {S.n} vs {T.n}")
    n = S.n
    full = n * n
    ech = _Echelon()
    for A in S.basis:
        for B in T.basis:
            if ech.rank == full:
                return OperatorSubspace(n, ech)
            ech.add((A @ B).vec())
    return OperatorSubspace(n, ech)


def is_adjoint_closed(S: OperatorSubspace) -> bool:
    return all(S._ech.contains(b.adjoint().vec()) for b in S.basis)


def commutant(gens: Sequence[MatrixGQ], n: int) -> OperatorSubspace:
    """``{X : XG = GX and XG* = G*X for every generator G}``.

    This is the commutant of the *-algebra generated by ``gens``.
    """
    eqs = _Echelon()
    full = n * n
    seen = set()
    for g in gens:
        _check_square(g, n)
        for h in (g, g.adjoint()):
            if h in seen:
                continue
            seen.add(h)
            # (XH - HX)_{ij} = sum_k X_ik H_kj - H_ik X_kj
            e = h.entries
            for i in range(n):
                for j in range(n):
                    row: Dict[int, Scalar] = {}
                    for k in range(n):
                        hkj = e[k * n + j]
                        if hkj != 0:
                            idx = i * n + k
                            row[idx] = row.get(idx, 0) + hkj
                        hik = e[i * n + k]
                        if hik != 0:
                            idx = k * n + j
                            row[idx] = row.get(idx, 0) - hik
                    row = {k: v for k, v in row.items() if v != 0}
                    if row:
                        eqs.add(row)
                    if eqs.rank == full:
                        return OperatorSubspace.zero(n)
    ech = _Echelon()
    for v in eqs.kernel(full):
        ech.add(v)
    return OperatorSubspace(n, ech)
