import itertools
import json
import random
from fractions import Fraction as F

import numpy as np
import pytest

from _helpers import equidistant, line3, point, random_metric, random_relabel, space, triangle
from qmetric import (
    Correlation,
    DeterministicStrategy,
    GamePoint,
    NotAStrategy,
    Side,
    TableGame,
    correlation_from_deterministic,
    correlation_from_projections,
    enumerate_isometries,
    find_perfect_deterministic,
    is_bisynchronous,
    is_perfect_correlation,
    is_perfect_deterministic,
    is_synchronous,
    isom_rule,
    pauli_block_rep,
    rep_from_isometry,
    simulate_rounds,
    splitmix64,
    strategy_from_isometry,
)
from qmetric.algebra import GameAlgebraRep


def rule_oracle(X, Y, v, w, a, b):
    """Direct transcription of the four winning conditions on tagged points."""
    nx = X.n

    def tag(i):
        return ("X", i) if i < nx else ("Y", i - nx)

    def dist(p, q):
        S = X if p[0] == "X" else Y
        return S.D[p[1]][q[1]]

    v, w, a, b = map(tag, (v, w, a, b))
    if v[0] == a[0] or w[0] == b[0]:
        return 0
    if v[0] == w[0]:
        return int(dist(v, w) == dist(a, b))
    return int((v == b) == (w == a))


def test_rule_matches_oracle_exhaustively():
    rng = random.Random(2)
    for _ in range(10):
        n = rng.randint(1, 3)
        X, Y = random_metric(rng, n), random_metric(rng, rng.randint(1, 3))
        G = isom_rule(X, Y)
        for t in itertools.product(range(G.N), repeat=4):
            assert G.rule(*t) == rule_oracle(X, Y, *t)


def test_rule_examples():
    X, Y = line3(), line3()
    G = isom_rule(X, Y)
    x1, x2, y1, y2 = 0, 1, 3, 4
    # v and a on the same side
    assert all(G.rule(x1, w, x2, b) == 0 for w in range(6) for b in range(6))
    # v = w in X, a != b: d_X(v, w) = 0 but d_Y(a, b) > 0
    assert G.rule(x1, x1, y1, y2) == 0
    # sides alternate with v = b and w = a
    assert G.rule(x1, y1, y1, x1) == 1


def test_game_points_and_labels():
    G = isom_rule(line3(), triangle())
    assert G.point(0) == GamePoint(Side.X, 0)
    assert G.point(4) == GamePoint(Side.Y, 1)
    assert G.label(4) == "Y:v"
    assert G.index("Y", 2) == 5
    with pytest.raises(IndexError):
        G.point(6)


def test_synchronicity_examples():
    assert is_synchronous(isom_rule(line3(), line3()))
    assert is_synchronous(isom_rule(point(), point()))
    # equal questions answered differently can win
    bad = TableGame(2, lambda v, w, a, b: v == w and a != b)
    assert not is_synchronous(bad)
    # a rule that never wins is vacuously synchronous
    assert is_bisynchronous(TableGame(2, lambda v, w, a, b: 0))
    # synchronous but not bisynchronous: every answer pair with a == b wins
    sync_only = TableGame(2, lambda v, w, a, b: a == b)
    assert is_synchronous(sync_only) and not is_bisynchronous(sync_only)
    assert is_bisynchronous(isom_rule(line3(), triangle()))


def test_bisynchronous_all_small_pairs():
    rng = random.Random(4)
    for _ in range(15):
        X, Y = random_metric(rng, rng.randint(1, 4)), random_metric(rng, rng.randint(1, 4))
        assert is_bisynchronous(isom_rule(X, Y))


def test_table_game_shape_check():
    with pytest.raises(ValueError):
        TableGame(2, np.zeros((2, 2, 2)))
    t = np.zeros((1, 1, 1, 1))
    t[0, 0, 0, 0] = 1
    assert TableGame(1, t).rule(0, 0, 0, 0) == 1


def test_rule_table_matches_rule():
    G = isom_rule(line3(), line3())
    T = G.rule_table()
    assert T.shape == (6,) * 4
    assert all(T[t] == G.rule(*t) for t in itertools.product(range(6), repeat=4))


# deterministic strategies

def test_identity_strategy_is_perfect():
    G = isom_rule(line3(), line3())
    s = strategy_from_isometry(G, (0, 1, 2))
    assert s.f == (3, 4, 5, 0, 1, 2)
    assert is_perfect_deterministic(s, G) == (True, None)


def test_within_side_strategy_fails_condition_one():
    G = isom_rule(line3(), line3())
    s = DeterministicStrategy((1, 4, 5, 0, 1, 2))
    ok, witness = is_perfect_deterministic(s, G)
    assert not ok and witness[0] == 0


def test_non_inverse_back_map_fails_condition_four():
    X = space([[0, 1], [1, 0]])
    G = isom_rule(X, X)
    s = DeterministicStrategy((2, 3, 1, 0))  # X -> Y identity, Y -> X swap
    ok, (v, w) = is_perfect_deterministic(s, G)
    assert not ok
    f = s.f
    assert (v < 2) != (w < 2)
    assert (v == f[w]) != (w == f[v])


def test_find_perfect_examples():
    G = isom_rule(line3(), line3())
    assert find_perfect_deterministic(G).f == (3, 4, 5, 0, 1, 2)
    assert find_perfect_deterministic(isom_rule(line3(), triangle())) is None
    assert find_perfect_deterministic(isom_rule(point(), point())).f == (1, 0)


def brute_perfect_strategies(G):
    N = G.N
    out = []
    for f in itertools.product(range(N), repeat=N):
        if all(G.rule(v, w, f[v], f[w]) for v in range(N) for w in range(N)):
            out.append(f)
    return out


def test_perfect_strategies_are_exactly_isometries_small():
    # every perfect deterministic strategy on N <= 6 is g ⊔ g^-1 for an isometry g
    rng = random.Random(7)
    for _ in range(12):
        n = rng.randint(1, 3)
        X = random_metric(rng, n)
        Y = random_relabel(rng, X) if rng.random() < 0.5 else random_metric(rng, n)
        G = isom_rule(X, Y)
        expected = sorted(strategy_from_isometry(G, g.perm).f for g in enumerate_isometries(X, Y))
        assert sorted(brute_perfect_strategies(G)) == expected


# correlations

def test_deterministic_correlation():
    G = isom_rule(line3(), line3())
    s = find_perfect_deterministic(G)
    p = correlation_from_deterministic(s)
    assert p.mode == "exact" and p.is_normalised()
    for v, w in itertools.product(range(6), repeat=2):
        assert p.p[v, w, s.f[v], s.f[w]] == 1
    assert is_perfect_correlation(p, G)[0]
    bad = correlation_from_deterministic(DeterministicStrategy((1, 4, 5, 0, 1, 2)))
    perfect, worst, value = is_perfect_correlation(bad, G)
    assert not perfect and value == 1 and G.rule(*worst) == 0


def test_correlation_validation():
    with pytest.raises(ValueError):
        Correlation("float", 2, np.zeros((2, 2, 2)))
    p = Correlation("float", 1, np.ones((1, 1, 1, 1)))
    with pytest.raises(ValueError):
        p.p[0, 0, 0, 0] = 0.5


def entangled_oracle(rep: GameAlgebraRep) -> np.ndarray:
    """p(a,b|v,w) = <ψ| E_va ⊗ conj(E_wb) |ψ> with ψ maximally entangled."""
    rep = rep.to_float()
    nx, ny, d = rep.nx, rep.ny, rep.d
    N = nx + ny
    E = np.zeros((N, N, d, d), dtype=complex)
    for x in range(nx):
        for y in range(ny):
            E[x, nx + y] = E[nx + y, x] = rep.blocks[x, y]
    psi = np.eye(d).reshape(-1) / np.sqrt(d)
    p = np.zeros((N,) * 4)
    for v, w, a, b in itertools.product(range(N), repeat=4):
        op = np.kron(E[v, a], E[w, b].conj())
        p[v, w, a, b] = (psi.conj() @ op @ psi).real
    return p


def pauli():
    P = np.array([[1, 0], [0, 0]], dtype=complex)
    Q = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    return pauli_block_rep(P, Q)


def test_projection_correlation_matches_entangled_state():
    rep = pauli()
    p = correlation_from_projections(rep)
    np.testing.assert_allclose(p.p, entangled_oracle(rep), atol=1e-12)
    assert p.is_normalised()
    X = equidistant(4)
    ok, worst, val = is_perfect_correlation(p, isom_rule(X, X))
    assert ok and val <= 1e-9


def test_d1_rep_reproduces_deterministic_correlation():
    rng = random.Random(9)
    for _ in range(10):
        X = random_metric(rng, rng.randint(1, 4))
        Y = random_relabel(rng, X)
        G = isom_rule(X, Y)
        for g in enumerate_isometries(X, Y):
            p_rep = correlation_from_projections(rep_from_isometry(g))
            p_det = correlation_from_deterministic(strategy_from_isometry(G, g.perm))
            assert np.array_equal(p_rep.p, p_det.as_float())


def test_synchronous_consistency():
    p = correlation_from_projections(pauli())
    for v in range(8):
        for a in range(8):
            for b in range(8):
                if a != b:
                    assert p.p[v, v, a, b] <= 1e-9


def test_projection_correlation_rejects_non_magic_unitary():
    P = np.array([[1, 0], [0, 0]], dtype=complex)
    I = np.eye(2)
    rep = GameAlgebraRep.float([[P, P], [I - P, I - P]])
    with pytest.raises(NotAStrategy):
        correlation_from_projections(rep)


# simulation

def test_splitmix64_reference_values():
    # reference: SplitMix64 seeded with 0 produces 0xE220A8397B1DCDAF first
    assert splitmix64(0, 0) == 0xE220A8397B1DCDAF
    assert splitmix64(0, 1) == 0x6E789E6AA1B965F4
    assert splitmix64(0, 2) == 0x06C45D188009454F


def test_perfect_correlation_always_wins():
    G = isom_rule(line3(), line3())
    p = correlation_from_deterministic(find_perfect_deterministic(G))
    for seed in (0, 1, 2 ** 64 - 1):
        t = simulate_rounds(p, G, 300, seed=seed)
        assert t.win_rate == 1.0 and t.count == 300
    rep_p = correlation_from_projections(pauli())
    X = equidistant(4)
    t = simulate_rounds(rep_p, isom_rule(X, X), 500, seed=5)
    assert t.wins == 500


def test_within_side_strategy_loses_on_offending_pairs():
    G = isom_rule(line3(), line3())
    s = DeterministicStrategy((1, 4, 5, 0, 1, 2))
    p = correlation_from_deterministic(s)
    t = simulate_rounds(p, G, G.N ** 2, input_dist="exhaustive-cycle")
    for v, w, a, b, won in t.rounds:
        if v == 0 or w == 0:
            assert not won
    assert [(v, w) for v, w, *_ in t.rounds] == list(itertools.product(range(6), repeat=2))


def test_uniform_answers_on_points_always_win():
    G = isom_rule(point(), point())
    p = Correlation("exact", 2, np.full((2, 2, 2, 2), F(1, 4), dtype=object))
    t = simulate_rounds(p, G, 200, seed=3)
    # only tuples with a = f(v) opposite side are sampled as winners; the
    # uniform distribution still loses on some rounds
    assert 0 < t.win_rate < 1
    only = np.zeros((2, 2, 2, 2), dtype=object)
    only[:] = F(0)
    for v, w in itertools.product(range(2), repeat=2):
        only[v, w, 1 - v, 1 - w] = F(1)
    t = simulate_rounds(Correlation("exact", 2, only), G, 200, seed=3)
    assert t.win_rate == 1.0


def test_simulation_is_deterministic_and_seed_sensitive():
    G = isom_rule(line3(), line3())
    p = correlation_from_projections(rep_from_isometry(enumerate_isometries(line3(), line3())[1]))
    a = simulate_rounds(p, G, 100, seed=42)
    b = simulate_rounds(p, G, 100, seed=42)
    c = simulate_rounds(p, G, 100, seed=43)
    assert a.to_jsonl() == b.to_jsonl()
    assert a.rounds != c.rounds
    first = json.loads(a.to_jsonl().splitlines()[0])
    assert set(first) == {"v", "w", "a", "b", "won"}


def test_question_draws_follow_documented_stream():
    G = isom_rule(line3(), line3())
    p = correlation_from_deterministic(find_perfect_deterministic(G))
    t = simulate_rounds(p, G, 20, seed=7)
    for r, (v, w, *_rest) in enumerate(t.rounds):
        assert v == (splitmix64(7, 3 * r) * 6) >> 64
        assert w == (splitmix64(7, 3 * r + 1) * 6) >> 64


def test_simulation_argument_errors():
    G = isom_rule(line3(), line3())
    p = correlation_from_deterministic(find_perfect_deterministic(G))
    with pytest.raises(ValueError):
        simulate_rounds(p, G, 10, input_dist="adversarial")
    with pytest.raises(ValueError):
        simulate_rounds(p, isom_rule(point(), point()), 10)
