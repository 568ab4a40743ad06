import itertools
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from _helpers import equidistant, line3, random_metric, random_relabel, triangle
from qmetric import (
    GameAlgebraRep,
    Isometry,
    MatrixGQ,
    NotProjection,
    SizeMismatch,
    charpoly,
    correlation_from_projections,
    enumerate_isometries,
    is_isometry,
    is_magic_unitary,
    is_perfect_correlation,
    isom_rule,
    pauli_block_rep,
    random_magic_unitary,
    relation_penalty,
    rep_from_isometry,
    rep_from_permutation,
    search_quantum_rep,
    spectral_obstruction,
    verify_intertwiner,
    verify_rep_relations,
)

P2 = np.array([[1, 0], [0, 0]], dtype=complex)
Q2 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
I2 = np.eye(2)


def exact_pauli():
    P = MatrixGQ.from_rows([[1, 0], [0, 0]])
    Q = MatrixGQ.from_rows([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]])
    return pauli_block_rep(P, Q)


# magic unitaries

def test_magic_unitary_examples():
    assert is_magic_unitary(rep_from_permutation([1, 0, 2])).ok
    assert is_magic_unitary(GameAlgebraRep.float([[P2, I2 - P2], [I2 - P2, P2]])).ok
    r = is_magic_unitary(GameAlgebraRep.float([[P2, P2], [I2 - P2, I2 - P2]]))
    assert not r.ok
    assert not r["row_sums"].passed and r["column_sums"].passed
    assert r["row_sums"].witness in [(0,), (1,)]


def test_magic_unitary_size_mismatch_reason():
    rep = GameAlgebraRep.exact([[MatrixGQ.identity(1), MatrixGQ.zeros(1)]])
    r = is_magic_unitary(rep)
    assert not r.ok and "SizeMismatch" in r.reason


def test_float_rep_rejects_non_finite():
    with pytest.raises(ValueError):
        GameAlgebraRep.float([[[[np.nan]]]])


def test_random_magic_unitaries_pass():
    rng = np.random.default_rng(0)
    for n, d in [(2, 1), (3, 2), (4, 3), (5, 4)]:
        rep = random_magic_unitary(n, d, rng)
        assert is_magic_unitary(rep, tol=1e-10).ok


# relations

def test_isometry_rep_passes_exactly():
    X = line3()
    for g in enumerate_isometries(X, X):
        r = verify_rep_relations(rep_from_isometry(g), X, X)
        assert r.ok and r.max_residual == 0
        assert r["r1_within_side_zero"].note.startswith("structural: pass")
        assert r["r3_symmetry"].note.startswith("structural: pass")


def test_non_isometric_bijection_fails_distance_relation():
    r = verify_rep_relations(rep_from_permutation([0, 1, 2]), line3(), triangle())
    assert not r.ok
    assert not r["r8_distance"].passed
    x, y = r["r8_distance"].witness
    assert 0 <= x < 3 and 0 <= y < 3
    for name in ("r2_projection", "r4_row_sums", "r5_column_sums", "r6_row_orthogonality", "r7_column_orthogonality"):
        assert r[name].passed


def test_pauli_rep_relations():
    X = equidistant(4)
    r = verify_rep_relations(pauli_block_rep(P2, Q2, X, X), X, X, tol=1e-12)
    assert r.ok and r.max_residual < 1e-12
    r = verify_rep_relations(exact_pauli(), X, X)
    assert r.ok and r.max_residual == 0


def test_relations_size_mismatch():
    with pytest.raises(SizeMismatch):
        verify_rep_relations(rep_from_permutation([0, 1]), line3(), line3())


def test_relation_witness_is_worst_failure():
    X = line3()
    blocks = [[MatrixGQ.identity(1) if y == x else MatrixGQ.zeros(1) for y in range(3)] for x in range(3)]
    blocks[2][2] = MatrixGQ.from_rows([[3]])
    r = verify_rep_relations(GameAlgebraRep.exact(blocks), X, X)
    assert r["r2_projection"].witness == (2, 2)
    assert r["r2_projection"].residual == 6


# intertwiner

def test_intertwiner_examples():
    X = equidistant(4, F(5, 2))
    rng = np.random.default_rng(1)
    for _ in range(5):
        ok, res = verify_intertwiner(random_magic_unitary(4, 3, rng), X, X, tol=1e-9)
        assert ok and res < 1e-9
    for g in enumerate_isometries(line3(), line3()):
        assert verify_intertwiner(rep_from_isometry(g), line3(), line3()) == (True, 0.0)
    ok, res = verify_intertwiner(rep_from_permutation([1, 0, 2]), line3(), line3())
    assert not ok and res > 0


def test_intertwiner_requires_square():
    rep = GameAlgebraRep.exact([[MatrixGQ.identity(1), MatrixGQ.zeros(1)]])
    with pytest.raises(SizeMismatch):
        verify_intertwiner(rep, line3(), line3())


def intertwiner_oracle(rep, X, Y):
    """Blockwise form: sum_k D_X[x,k] E[k][y] = sum_k E[x][k] D_Y[k,y]."""
    rep = rep.to_float()
    n = rep.nx
    worst = 0.0
    for x in range(n):
        for y in range(n):
            lhs = sum(float(X.D[x][k]) * rep.blocks[k, y] for k in range(n))
            rhs = sum(float(Y.D[k][y]) * rep.blocks[x, k] for k in range(n))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def test_intertwiner_residual_matches_blockwise_oracle():
    rng = np.random.default_rng(2)
    r = random.Random(2)
    for _ in range(10):
        X = random_metric(r, 4)
        Y = random_metric(r, 4)
        rep = random_magic_unitary(4, 2, rng)
        _, res = verify_intertwiner(rep, X, Y, tol=1e-9)
        assert res == pytest.approx(intertwiner_oracle(rep, X, Y), abs=1e-12)


# constructors

def test_rep_from_isometry_patterns():
    rep = rep_from_isometry(Isometry((0, 1, 2)))
    assert [[rep.block(x, y)[0, 0] for y in range(3)] for x in range(3)] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    rep = rep_from_isometry(Isometry((2, 1, 0)))
    assert [[rep.block(x, y)[0, 0] for y in range(3)] for x in range(3)] == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    with pytest.raises(ValueError):
        rep_from_permutation([0, 0, 1])


def test_rep_composition_is_matrix_product():
    rng = random.Random(0)
    for _ in range(10):
        g = list(range(4))
        h = list(range(4))
        rng.shuffle(g)
        rng.shuffle(h)
        gh = Isometry(tuple(g)).compose(Isometry(tuple(h)))
        U = lambda p: rep_from_isometry(Isometry(tuple(p))).assemble()
        # U_{g∘h} = U_h U_g with U[x][y] = [p(x) = y]
        assert U(gh.perm) == U(h) @ U(g)


def test_pauli_block_rep_variants():
    rep = pauli_block_rep(P2, Q2)
    assert rep.mode == "float" and rep.d == 2 and is_magic_unitary(rep).ok
    deg = pauli_block_rep(I2, I2)
    assert is_magic_unitary(deg).ok
    np.testing.assert_allclose(deg.blocks[0, 1], 0)
    with pytest.raises(NotProjection):
        pauli_block_rep(P2, np.array([[1, 1], [0, 0]], dtype=complex))
    assert exact_pauli().mode == "exact"
    with pytest.raises(SizeMismatch):
        pauli_block_rep(P2, Q2, line3(), line3())


def test_pauli_rep_is_genuinely_quantum():
    # the blocks P and Q do not commute, so no 1-dimensional quotient explains it
    rep = pauli_block_rep(P2, Q2)
    A, B = rep.blocks[0, 0], rep.blocks[2, 2]
    assert np.max(np.abs(A @ B - B @ A)) > 0.1


# obstruction

def test_spectral_obstruction_examples():
    assert charpoly(line3().D) == [1, 0, -6, -4]
    assert charpoly(triangle().D) == [1, 0, -3, -2]
    assert spectral_obstruction(line3(), triangle())
    assert not spectral_obstruction(line3(), line3())
    rng = random.Random(3)
    for _ in range(10):
        X = random_metric(rng, 4)
        assert not spectral_obstruction(X, random_relabel(rng, X))
    with pytest.raises(SizeMismatch):
        spectral_obstruction(line3(), equidistant(4))


# properties over random pairs

def _pairs(seed, count, nmax=5):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1, nmax)
        X = random_metric(rng, n)
        Y = random_relabel(rng, X) if rng.random() < 0.4 else random_metric(rng, n)
        out.append((X, Y))
    return out


def test_d1_rep_passes_iff_isometry():
    for X, Y in _pairs(21, 40, nmax=4):
        for perm in itertools.permutations(range(X.n)):
            r = verify_rep_relations(rep_from_permutation(perm), X, Y)
            assert r.ok == is_isometry(X, Y, perm)


def test_relations_imply_intertwiner_charpoly_and_perfection():
    reps = []
    for X, Y in _pairs(22, 30):
        for g in enumerate_isometries(X, Y):
            reps.append((rep_from_isometry(g), X, Y))
    X4 = equidistant(4)
    reps.append((pauli_block_rep(P2, Q2), X4, X4))
    reps.append((exact_pauli(), X4, X4))
    for rep, X, Y in reps:
        assert verify_rep_relations(rep, X, Y).ok
        ok, _ = verify_intertwiner(rep, X, Y)
        assert ok
        if rep.mode == "exact":
            assert charpoly(X.D) == charpoly(Y.D)
        p = correlation_from_projections(rep)
        assert is_perfect_correlation(p, isom_rule(X, Y), tol=1e-9)[0]


# penalty and search

def penalty_oracle(E, DX, DY):
    n, _, d, _ = E.shape
    I = np.eye(d)
    total = 0.0

    def sq(M):
        return float(np.sum(np.abs(M) ** 2))

    for x in range(n):
        for y in range(n):
            total += sq(E[x, y] @ E[x, y] - E[x, y])
    for x in range(n):
        total += sq(sum(E[x, y] for y in range(n)) - I)
    for y in range(n):
        total += sq(sum(E[x, y] for x in range(n)) - I)
    for x in range(n):
        for y in range(n):
            for y2 in range(n):
                if y2 != y:
                    total += sq(E[x, y] @ E[x, y2])
    for y in range(n):
        for x in range(n):
            for x2 in range(n):
                if x2 != x:
                    total += sq(E[x, y] @ E[x2, y])
    for x in range(n):
        for y in range(n):
            total += sq(sum(DX[x, k] * E[k, y] for k in range(n)) - sum(DY[k, y] * E[x, k] for k in range(n)))
    return total


def _random_hermitian_blocks(rng, n, d):
    A = rng.normal(size=(n, n, d, d)) + 1j * rng.normal(size=(n, n, d, d))
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def test_penalty_matches_oracle_and_vanishes_on_reps():
    rng = np.random.default_rng(4)
    DX = rng.random((3, 3))
    DY = rng.random((3, 3))
    E = _random_hermitian_blocks(rng, 3, 2)
    assert relation_penalty(E, DX, DY) == pytest.approx(penalty_oracle(E, DX, DY), rel=1e-12)
    X = equidistant(4)
    D = np.array([[float(v) for v in r] for r in X.D])
    assert relation_penalty(pauli_block_rep(P2, Q2).blocks, D, D) < 1e-28


def test_penalty_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    n, d = 3, 2
    DX, DY = rng.random((n, n)), rng.random((n, n))
    DX, DY = DX + DX.T, DY + DY.T
    E = _random_hermitian_blocks(rng, n, d)
    H = _random_hermitian_blocks(rng, n, d)
    f, G = relation_penalty(E, DX, DY, grad=True)
    h = 1e-6
    fd = (relation_penalty(E + h * H, DX, DY) - relation_penalty(E - h * H, DX, DY)) / (2 * h)
    assert np.real(np.sum(np.conj(G) * H)) == pytest.approx(fd, rel=1e-6)


def test_search_finds_permutation_for_isometric_pair():
    X = line3()
    res = search_quantum_rep(X, X.relabel([2, 0, 1]), 1, seed=0)
    assert res.found
    assert verify_rep_relations(res.rep, X, X.relabel([2, 0, 1]), tol=1e-8).ok
    perm = [int(np.argmax(np.abs(res.rep.blocks[x, :, 0, 0]))) for x in range(3)]
    assert Isometry(tuple(perm)) in enumerate_isometries(X, X.relabel([2, 0, 1]))


def test_search_equidistant_d2():
    X = equidistant(4)
    t0 = time.perf_counter()
    res = search_quantum_rep(X, X, 2, seed=0, init=pauli_block_rep(P2, Q2))
    assert res.found and res.penalty < 1e-16
    assert time.perf_counter() - t0 < 10
    assert is_magic_unitary(res.rep, tol=1e-8).ok


def test_search_not_found_for_obstructed_pair():
    res = search_quantum_rep(line3(), triangle(), 2, seed=0)
    assert not res.found and res.rep is None and res.penalty > 1e-6
    assert res.to_dict()["found"] is False


def test_search_is_deterministic():
    X = equidistant(3)
    a = search_quantum_rep(X, X, 2, seed=7)
    b = search_quantum_rep(X, X, 2, seed=7)
    assert a.found and b.found
    assert np.array_equal(a.rep.blocks, b.rep.blocks) and a.penalty == b.penalty


def test_search_size_mismatch_and_bad_d():
    assert not search_quantum_rep(line3(), equidistant(4), 1).found
    with pytest.raises(ValueError):
        search_quantum_rep(line3(), line3(), 0)


def test_rep_equality_and_permuted():
    a = rep_from_permutation([1, 2, 0])
    b = rep_from_permutation([1, 2, 0])
    assert a == b and a != rep_from_permutation([0, 1, 2])
    p = a.permuted([2, 0, 1], [0, 1, 2])
    assert p.block(0, 0) == a.block(2, 0)
    assert a.to_float().permuted([2, 0, 1], [0, 1, 2]) == p.to_float()
