"""A genuinely quantum isometry of the 4-point equidistant space.

Two non-commuting rank-one projections P, Q on C^2 build a 4x4 magic unitary
whose blocks are not simultaneously diagonal, yet it satisfies every
relation of the isometry-game algebra.
"""

import numpy as np

from qmetric import (
    correlation_from_projections,
    filtration_from_metric,
    conjugation_invariance_check,
    is_magic_unitary,
    is_perfect_correlation,
    isom_rule,
    pauli_block_rep,
    search_quantum_rep,
    simulate_rounds,
    spectral_obstruction,
    validate_metric,
    verify_intertwiner,
    verify_rep_relations,
)

X = validate_metric("abcd", [[0 if i == j else 1 for j in range(4)] for i in range(4)])

P = np.array([[1, 0], [0, 0]], dtype=complex)
Q = np.array([[1, 1], [1, 1]], dtype=complex) / 2
rep = pauli_block_rep(P, Q, X, X)

print("magic unitary:", is_magic_unitary(rep).summary())
print("relations:    ", verify_rep_relations(rep, X, X, tol=1e-12).summary())
print("intertwiner:  ", verify_intertwiner(rep, X, X))
A, B = rep.blocks[0, 0], rep.blocks[2, 2]
print("|[E00, E22]| =", np.abs(A @ B - B @ A).max())

game = isom_rule(X, X)
p = correlation_from_projections(rep)
print("perfect:", is_perfect_correlation(p, game)[0])
t = simulate_rounds(p, game, 10 ** 4, seed=0)
print(f"{t.wins}/{t.count} rounds won")

FX = filtration_from_metric(X)
print("filtration invariance:", conjugation_invariance_check(rep, FX, FX).summary())

# the search rediscovers a rep from a random start
res = search_quantum_rep(X, X, 2, seed=3)
print("search d=2:", res.found, f"penalty {res.penalty:.2e}, restart {res.restart}")

# and gives up where the spectra already rule things out
L = validate_metric("xyz", [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
T = validate_metric("uvw", [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
print("obstructed:", spectral_obstruction(L, T), "search:", search_quantum_rep(L, T, 2).found)
