"""Finite metric spaces, weighted graphs and classical isometries."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .linalg import to_exact

__all__ = [
    "MetricViolation",
    "NotSymmetric",
    "NonzeroDiagonal",
    "ZeroOffDiagonal",
    "TriangleViolation",
    "Disconnected",
    "FiniteMetricSpace",
    "WeightedGraph",
    "SimpleGraph",
    "Isometry",
    "MetricInvariants",
    "validate_metric",
    "min_complete_graph",
    "enumerate_isometries",
    "is_isometry",
    "metric_invariants",
    "charpoly",
]


class MetricViolation(ValueError):
    """A distance matrix that is not a metric.  ``indices`` locate the failure."""

    kind = "MetricViolation"

    def __init__(self, *indices: int, detail: str = ""):
        self.indices = tuple(indices)
        self.detail = detail
        msg = f"{self.kind}({','.join(map(str, indices))})"
        super().__init__(f"{msg}: {detail}" if detail else msg)

    def to_dict(self) -> dict:
        return {"violation": self.kind, "indices": list(self.indices), "detail": self.detail}


class NotSymmetric(MetricViolation):
    kind = "NotSymmetric"


class NonzeroDiagonal(MetricViolation):
    kind = "NonzeroDiagonal"


class ZeroOffDiagonal(MetricViolation):
    kind = "ZeroOffDiagonal"


class TriangleViolation(MetricViolation):
    """Raised as ``TriangleViolation(i, k, j)`` when ``D[i][k] > D[i][j] + D[j][k]``."""

    kind = "TriangleViolation"


class Disconnected(ValueError):
    def __init__(self, pairs: Sequence[Tuple[int, int]]):
        self.pairs = [tuple(p) for p in pairs]
        shown = ", ".join(f"({i},{j})" for i, j in self.pairs[:10])
        more = "" if len(self.pairs) <= 10 else f" (+{len(self.pairs) - 10} more)"
        super().__init__(f"graph is disconnected; unreachable pairs: {shown}{more}")

    def to_dict(self) -> dict:
        return {"violation": "Disconnected", "pairs": [list(p) for p in self.pairs]}


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Labelled points with an exact rational distance matrix.

    Build instances with :func:`validate_metric`; the constructor does not
    check the metric axioms.
    """

    labels: Tuple[str, ...]
    D: Tuple[Tuple[Fraction, ...], ...]

    def __len__(self):
        return len(self.labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> Fraction:
        return self.D[i][j]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def distinct_distances(self) -> List[Fraction]:
        return sorted({x for row in self.D for x in row})

    def relabel(self, perm: Sequence[int], labels: Optional[Sequence[str]] = None) -> "FiniteMetricSpace":
        """Space isometric to this one in which point ``perm[i]`` plays the role of point ``i``."""
        n = self.n
        inv = [0] * n
        for i, p in enumerate(perm):
            inv[p] = i
        D = tuple(tuple(self.D[inv[a]][inv[b]] for b in range(n)) for a in range(n))
        labels = tuple(labels) if labels is not None else tuple(self.labels[inv[a]] for a in range(n))
        return FiniteMetricSpace(labels, D)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph without loops or parallel edges."""

    labels: Tuple[str, ...]
    edges: Tuple[Tuple[int, int, Fraction], ...]

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("labels must be distinct")
        seen = set()
        norm = []
        for i, j, w in self.edges:
            w = Fraction(to_exact(w))
            if i == j:
                raise ValueError(f"loop at vertex {i}")
            i, j = min(i, j), max(i, j)
            if not (0 <= i and j < n):
                raise ValueError(f"edge ({i},{j}) out of range")
            if (i, j) in seen:
                raise ValueError(f"parallel edge ({i},{j})")
            if w <= 0:
                raise ValueError(f"edge ({i},{j}) has non-positive weight {w}")
            seen.add((i, j))
            norm.append((i, j, w))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def complete(cls, X: FiniteMetricSpace) -> "WeightedGraph":
        n = X.n
        return cls(X.labels, tuple((i, j, X.D[i][j]) for i in range(n) for j in range(i + 1, n)))


@dataclass(frozen=True)
class SimpleGraph:
    """Unweighted simple undirected graph."""

    labels: Tuple[str, ...]
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.labels)
        norm = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"loop at vertex {i}")
            if not (0 <= min(i, j) and max(i, j) < n):
                raise ValueError(f"edge ({i},{j}) out of range")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def on(cls, n: int, edges) -> "SimpleGraph":
        return cls(tuple(str(i) for i in range(n)), tuple(edges))

    @property
    def n(self) -> int:
        return len(self.labels)

    def neighbours(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def reflexive_adjacency(self) -> List[List[int]]:
        n = self.n
        A = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        for i, j in self.edges:
            A[i][j] = A[j][i] = 1
        return A

    def bfs_distances(self) -> List[List[Optional[int]]]:
        nb = self.neighbours()
        out = []
        for s in range(self.n):
            dist: List[Optional[int]] = [None] * self.n
            dist[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for v in nb[u]:
                    if dist[v] is None:
                        dist[v] = dist[u] + 1
                        q.append(v)
            out.append(dist)
        return out

    def weighted(self) -> WeightedGraph:
        return WeightedGraph(self.labels, tuple((i, j, Fraction(1)) for i, j in self.edges))


@dataclass(frozen=True)
class Isometry:
    """``perm[i]`` is the index in Y of the image of point ``i`` of X."""

    perm: Tuple[int, ...]

    def __len__(self):
        return len(self.perm)

    def inverse(self) -> "Isometry":
        inv = [0] * len(self.perm)
        for i, p in enumerate(self.perm):
            inv[p] = i
        return Isometry(tuple(inv))

    def compose(self, other: "Isometry") -> "Isometry":
        """``self after other``."""
        return Isometry(tuple(self.perm[p] for p in other.perm))


def validate_metric(labels: Sequence[str], D: Sequence[Sequence]) -> FiniteMetricSpace:
    """Check the metric axioms exactly and return the space.

    Raises the first violation found, in the order: diagonal, symmetry,
    positivity, triangle inequality.
    """
    labels = tuple(str(l) for l in labels)
    n = len(labels)
    if len(set(labels)) != n:
        raise ValueError("labels must be distinct")
    if len(D) != n or any(len(row) != n for row in D):
        raise ValueError(f"distance matrix must be {n}x{n}")
    M = tuple(tuple(Fraction(to_exact(x)) for x in row) for row in D)
    for i in range(n):
        if M[i][i] != 0:
            raise NonzeroDiagonal(i, detail=f"D[{i}][{i}] = {M[i][i]}")
    for i in range(n):
        for j in range(i + 1, n):
            if M[i][j] != M[j][i]:
                raise NotSymmetric(i, j, detail=f"D[{i}][{j}] = {M[i][j]} != D[{j}][{i}] = {M[j][i]}")
    for i in range(n):
        for j in range(i + 1, n):
            if M[i][j] <= 0:
                raise ZeroOffDiagonal(i, j, detail=f"D[{i}][{j}] = {M[i][j]}")
    for i in range(n):
        for k in range(n):
            for j in range(n):
                if M[i][k] > M[i][j] + M[j][k]:
                    raise TriangleViolation(
                        i, k, j, detail=f"{M[i][k]} > {M[i][j]} + {M[j][k]}"
                    )
    return FiniteMetricSpace(labels, M)


def min_complete_graph(G: WeightedGraph) -> FiniteMetricSpace:
    """Shortest-path metric of a connected weighted graph (Floyd-Warshall, exact)."""
    n = len(G.labels)
    dist: List[List[Optional[Fraction]]] = [[None] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = Fraction(0)
    for i, j, w in G.edges:
        if dist[i][j] is None or w < dist[i][j]:
            dist[i][j] = dist[j][i] = w
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik is None:
                continue
            di = dist[i]
            for j in range(n):
                dkj = dk[j]
                if dkj is None:
                    continue
                s = dik + dkj
                if di[j] is None or s < di[j]:
                    di[j] = s
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i][j] is None]
    if missing:
        raise Disconnected(missing)
    return validate_metric(G.labels, dist)


def is_isometry(X: FiniteMetricSpace, Y: FiniteMetricSpace, perm: Sequence[int]) -> bool:
    n = X.n
    if Y.n != n or sorted(perm) != list(range(n)):
        return False
    return all(X.D[i][j] == Y.D[perm[i]][perm[j]] for i in range(n) for j in range(i + 1, n))


def enumerate_isometries(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> List[Isometry]:
    """All distance-preserving bijections X -> Y, in lexicographic order of ``perm``.

    Extends the partial map point by point, trying images in index order and
    pruning as soon as a distance to an already-placed point disagrees.
    """
    n = X.n
    if Y.n != n:
        return []
    # rows compared as multisets first: a cheap necessary condition per point
    row_key_x = [sorted(r) for r in X.D]
    row_key_y = [sorted(r) for r in Y.D]
    candidates = [[y for y in range(n) if row_key_x[x] == row_key_y[y]] for x in range(n)]
    out: List[Isometry] = []
    image = [0] * n
    used = [False] * n

    def extend(x: int):
        if x == n:
            out.append(Isometry(tuple(image)))
            return
        Dx = X.D[x]
        for y in candidates[x]:
            if used[y]:
                continue
            Dy = Y.D[y]
            if all(Dx[p] == Dy[image[p]] for p in range(x)):
                image[x] = y
                used[y] = True
                extend(x + 1)
                used[y] = False

    extend(0)
    return out


def charpoly(D: Sequence[Sequence[Fraction]]) -> List[Fraction]:
    """Characteristic polynomial ``det(tI - D)`` by Faddeev-LeVerrier.

    Returns coefficients from the leading 1 down to the constant term.
    """
    n = len(D)
    A = [[Fraction(x) for x in row] for row in D]
    coeffs = [Fraction(1)]
    M = [[Fraction(0)] * n for _ in range(n)]  # M_0 = 0
    c = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        AM = [[sum((A[i][l] * M[l][j] for l in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]
        for i in range(n):
            AM[i][i] += c
        M = AM
        AMk = [[sum((A[i][l] * M[l][j] for l in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]
        c = -sum((AMk[i][i] for i in range(n)), Fraction(0)) / k
        coeffs.append(c)
    return coeffs


@dataclass(frozen=True)
class MetricInvariants:
    distances: Tuple[Fraction, ...]
    charpoly: Tuple[Fraction, ...]


def metric_invariants(X: FiniteMetricSpace) -> MetricInvariants:
    """Sorted multiset of pairwise distances and the exact characteristic polynomial of D."""
    n = X.n
    dists = tuple(sorted(X.D[i][j] for i in range(n) for j in range(i + 1, n)))
    return MetricInvariants(dists, tuple(charpoly(X.D)))

