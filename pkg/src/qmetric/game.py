"""The metric isometry game: rules, strategies, correlations and simulation.

Inputs and outputs both range over ``X ⊔ Y`` indexed ``0..N-1``: indices
``0..|X|-1`` are the points of X in order, the rest are the points of Y.
Correlation tensors are indexed ``p[v, w, a, b]`` = probability that Alice
answers ``a`` and Bob answers ``b`` on questions ``(v, w)``.

Randomness in :func:`simulate_rounds` comes from a counter-based SplitMix64
stream, so transcripts are reproducible bit for bit:

    z = (seed + (k + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    draw_k = z ^ (z >> 31)

Round ``r`` consumes draws ``3r`` (Alice's question), ``3r + 1`` (Bob's
question) and ``3r + 2`` (the answer pair).  A question is ``(draw * N) >> 64``;
the answer pair is found by inverse-CDF over ``(a, b)`` in row-major order
with ``u = (draw >> 11) / 2**53``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .algebra import GameAlgebraRep, is_magic_unitary
from .metric import FiniteMetricSpace, enumerate_isometries

__all__ = [
    "Side",
    "GamePoint",
    "Game",
    "SynchronousGame",
    "TableGame",
    "DeterministicStrategy",
    "Correlation",
    "NotAStrategy",
    "RoundTranscript",
    "isom_rule",
    "is_synchronous",
    "is_bisynchronous",
    "is_perfect_deterministic",
    "find_perfect_deterministic",
    "strategy_from_isometry",
    "correlation_from_deterministic",
    "correlation_from_projections",
    "is_perfect_correlation",
    "simulate_rounds",
    "splitmix64",
]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class Side(str, Enum):
    X = "X"
    Y = "Y"


class GamePoint(NamedTuple):
    side: Side
    index: int


class Game:
    """A synchronous-format game on ``N`` questions/answers with rule ``rule(v, w, a, b)``."""

    N: int

    def rule(self, v: int, w: int, a: int, b: int) -> int:
        raise NotImplementedError

    def rule_table(self) -> np.ndarray:
        """Exhaustive ``N^4`` table of the rule (uint8), for audit."""
        N = self.N
        t = np.zeros((N, N, N, N), dtype=np.uint8)
        for v in range(N):
            for w in range(N):
                for a in range(N):
                    for b in range(N):
                        t[v, w, a, b] = self.rule(v, w, a, b)
        return t

    def label(self, i: int) -> str:
        return str(i)


class TableGame(Game):
    """Game given by an explicit rule table or predicate (used for toy rules)."""

    def __init__(self, N: int, rule: Callable[[int, int, int, int], int] | np.ndarray):
        self.N = N
        if callable(rule):
            self._rule = rule
        else:
            table = np.asarray(rule)
            if table.shape != (N, N, N, N):
                raise ValueError(f"rule table must have shape {(N, N, N, N)}")
            self._rule = lambda v, w, a, b: int(table[v, w, a, b])

    def rule(self, v, w, a, b):
        return 1 if self._rule(v, w, a, b) else 0


class SynchronousGame(Game):
    """The isometry game ``Isom(X, Y)``; the rule is evaluated, not tabulated."""

    def __init__(self, X: FiniteMetricSpace, Y: FiniteMetricSpace):
        self.X = X
        self.Y = Y
        self.nx = X.n
        self.N = X.n + Y.n

    def point(self, i: int) -> GamePoint:
        if not 0 <= i < self.N:
            raise IndexError(i)
        return GamePoint(Side.X, i) if i < self.nx else GamePoint(Side.Y, i - self.nx)

    def label(self, i: int) -> str:
        p = self.point(i)
        space = self.X if p.side is Side.X else self.Y
        return f"{p.side.value}:{space.labels[p.index]}"

    def index(self, side: Side | str, i: int) -> int:
        return i if Side(side) is Side.X else self.nx + i

    def _dist(self, i: int, j: int) -> Fraction:
        nx = self.nx
        if i < nx:
            return self.X.D[i][j]
        return self.Y.D[i - nx][j - nx]

    def rule(self, v: int, w: int, a: int, b: int) -> int:
        nx = self.nx
        vx, wx, ax, bx = v < nx, w < nx, a < nx, b < nx
        if vx == ax or wx == bx:
            return 0
        if vx == wx:
            return 1 if self._dist(v, w) == self._dist(a, b) else 0
        return 1 if (v == b) == (w == a) else 0


def isom_rule(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> SynchronousGame:
    return SynchronousGame(X, Y)


def is_synchronous(game: Game) -> bool:
    """Equal questions never win with different answers: ``rule(v, v, a, b) = 0`` for ``a != b``.

    Equal answers to equal questions are not required to win; in the
    isometry game ``rule(x, x, x', x')`` is 0 because ``x'`` is on the
    question's own side.
    """
    N = game.N
    return not any(
        game.rule(v, v, a, b)
        for v in range(N) for a in range(N) for b in range(N) if a != b
    )


def is_bisynchronous(game: Game) -> bool:
    """Synchronous, and equal answers never win on different questions."""
    N = game.N
    return is_synchronous(game) and not any(
        game.rule(v, w, a, a)
        for v in range(N) for w in range(N) if v != w for a in range(N)
    )


@dataclass(frozen=True)
class DeterministicStrategy:
    """Shared answer function ``f`` (synchronous games force Alice and Bob to agree)."""

    f: Tuple[int, ...]

    def __len__(self):
        return len(self.f)


def is_perfect_deterministic(s: DeterministicStrategy, game: Game) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Whether ``rule(v, w, f(v), f(w)) = 1`` everywhere; else the first failing ``(v, w)``."""
    if len(s.f) != game.N:
        raise ValueError(f"strategy has {len(s.f)} entries, game has {game.N} questions")
    f = s.f
    for v in range(game.N):
        for w in range(game.N):
            if not game.rule(v, w, f[v], f[w]):
                return False, (v, w)
    return True, None


def strategy_from_isometry(game: SynchronousGame, perm: Sequence[int]) -> DeterministicStrategy:
    """``f = g ⊔ g^{-1}``: X-points go to their image, Y-points to their preimage."""
    nx = game.nx
    f = [0] * game.N
    for x, y in enumerate(perm):
        f[x] = nx + y
        f[nx + y] = x
    return DeterministicStrategy(tuple(f))


def find_perfect_deterministic(game: SynchronousGame) -> Optional[DeterministicStrategy]:
    """First perfect strategy ``g ⊔ g^{-1}`` over isometries ``g`` in lexicographic order."""
    for g in enumerate_isometries(game.X, game.Y):
        s = strategy_from_isometry(game, g.perm)
        if is_perfect_deterministic(s, game)[0]:
            return s
    return None


class NotAStrategy(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Correlation:
    """Conditional distribution ``p[v, w, a, b]``.

    ``mode == "exact"`` stores Fractions in an object array, ``"float"``
    stores doubles.
    """

    mode: str
    N: int
    p: np.ndarray

    def __post_init__(self):
        if self.p.shape != (self.N,) * 4:
            raise ValueError(f"tensor shape {self.p.shape} does not match N={self.N}")
        self.p.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, Correlation):
            return NotImplemented
        return self.N == other.N and bool(np.all(self.p == other.p))

    def is_normalised(self, tol: float = 1e-9) -> bool:
        if np.any(self.p < 0):
            return False
        sums = self.p.sum(axis=(2, 3))
        if self.mode == "exact":
            return bool(np.all(sums == 1))
        return bool(np.all(np.abs(sums.astype(float) - 1.0) <= tol))

    def as_float(self) -> np.ndarray:
        return self.p.astype(float)


def correlation_from_deterministic(s: DeterministicStrategy) -> Correlation:
    N = len(s.f)
    p = np.full((N, N, N, N), Fraction(0), dtype=object)
    for v in range(N):
        for w in range(N):
            p[v, w, s.f[v], s.f[w]] = Fraction(1)
    return Correlation("exact", N, p)


def _game_projections(rep: GameAlgebraRep) -> np.ndarray:
    """``F[v, a]`` for all questions/answers in ``X ⊔ Y``; within-side blocks vanish."""
    rep = rep.to_float()
    nx, ny, d = rep.nx, rep.ny, rep.d
    N = nx + ny
    F = np.zeros((N, N, d, d), dtype=complex)
    F[:nx, nx:] = rep.blocks
    F[nx:, :nx] = np.swapaxes(rep.blocks, 0, 1)
    return F


def correlation_from_projections(rep: GameAlgebraRep, tol: float = 1e-9) -> Correlation:
    """``p(a, b | v, w) = Re Tr(E_{v,a} E_{w,b}) / d``, clamped to ``[0, 1]``.

    This is the maximally-entangled strategy in which Bob measures the
    entrywise transpose of Alice's projections.
    """
    report = is_magic_unitary(rep, tol)
    if not report.ok:
        raise NotAStrategy(f"not a magic unitary within tol={tol}: {report.summary()}")
    F = _game_projections(rep)
    N = F.shape[0]
    p = np.einsum("vaij,wbji->vwab", F, F).real / rep.d
    p = np.clip(p, 0.0, 1.0)
    return Correlation("float", N, p)


def is_perfect_correlation(
    p: Correlation, game: Game, tol: float | None = None
) -> Tuple[bool, Optional[Tuple[int, int, int, int]], object]:
    """Whether every losing tuple has probability at most ``tol``.

    ``tol`` defaults to 0 in exact mode and ``1e-9`` in float mode.  Returns
    ``(perfect, worst losing tuple or None, its probability)``.
    """
    if p.N != game.N:
        raise ValueError(f"correlation has N={p.N}, game has N={game.N}")
    if tol is None:
        tol = 0 if p.mode == "exact" else 1e-9
    N = game.N
    worst, worst_val = None, 0
    for v in range(N):
        for w in range(N):
            for a in range(N):
                for b in range(N):
                    q = p.p[v, w, a, b]
                    if q > worst_val and not game.rule(v, w, a, b):
                        worst, worst_val = (v, w, a, b), q
    return worst_val <= tol, worst, worst_val


def splitmix64(seed: int, k: int) -> int:
    """The ``k``-th draw of the counter-based SplitMix64 stream for ``seed``."""
    z = (seed + (k + 1) * GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass
class RoundTranscript:
    seed: int
    input_dist: str
    rounds: List[Tuple[int, int, int, int, bool]] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(1 for r in self.rounds if r[4])

    @property
    def count(self) -> int:
        return len(self.rounds)

    @property
    def win_rate(self) -> float:
        return self.wins / self.count if self.rounds else 1.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "input_dist": self.input_dist,
            "rounds": self.count,
            "wins": self.wins,
            "win_rate": self.win_rate,
        }

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"v": v, "w": w, "a": a, "b": b, "won": won}, sort_keys=True)
            for v, w, a, b, won in self.rounds
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def _sample_outcome(row: np.ndarray, draw: int, exact: bool) -> Tuple[int, int]:
    N = row.shape[0]
    flat = row.reshape(-1)
    u = Fraction(draw >> 11, 1 << 53) if exact else (draw >> 11) * (1.0 / (1 << 53))
    acc = 0
    last_positive = 0
    for k, q in enumerate(flat):
        if q > 0:
            last_positive = k
            acc = acc + q
            if u < acc:
                return divmod(k, N)
    return divmod(last_positive, N)


def simulate_rounds(
    p: Correlation, game: Game, rounds: int, seed: int = 0, input_dist: str = "uniform"
) -> RoundTranscript:
    """Play ``rounds`` rounds with answers sampled from ``p``.

    ``input_dist`` is ``"uniform"`` (questions drawn from the stream) or
    ``"exhaustive-cycle"`` (round ``r`` asks ``divmod(r mod N^2, N)``).
    """
    if input_dist not in ("uniform", "exhaustive-cycle"):
        raise ValueError(f"unknown input distribution {input_dist!r}")
    if p.N != game.N:
        raise ValueError(f"correlation has N={p.N}, game has N={game.N}")
    seed &= MASK64
    N = game.N
    exact = p.mode == "exact"
    t = RoundTranscript(seed, input_dist)
    for r in range(rounds):
        if input_dist == "uniform":
            v = (splitmix64(seed, 3 * r) * N) >> 64
            w = (splitmix64(seed, 3 * r + 1) * N) >> 64
        else:
            v, w = divmod(r % (N * N), N)
        a, b = _sample_outcome(p.p[v, w], splitmix64(seed, 3 * r + 2), exact)
        t.rounds.append((v, w, a, b, bool(game.rule(v, w, a, b))))
    return t
