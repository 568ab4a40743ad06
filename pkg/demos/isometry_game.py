"""Classical side: metric spaces, the isometry game and its deterministic strategies."""

from fractions import Fraction as F

from qmetric import (
    WeightedGraph,
    charpoly,
    correlation_from_deterministic,
    enumerate_isometries,
    find_perfect_deterministic,
    isom_rule,
    is_bisynchronous,
    min_complete_graph,
    simulate_rounds,
    validate_metric,
)

# a path a - b - c with unit edges
X = validate_metric("abc", [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
# same shape, different labels and order
Y = X.relabel([2, 0, 1], labels=["p", "q", "r"])
T = validate_metric("uvw", [[0, 1, 1], [1, 0, 1], [1, 1, 0]])

print("isometries X -> Y:", [g.perm for g in enumerate_isometries(X, Y)])
print("isometries X -> T:", [g.perm for g in enumerate_isometries(X, T)])

# shortest-path metric of a weighted graph; the long edge gets shortcut
G = WeightedGraph(("x", "y", "z"), ((0, 1, F(1)), (1, 2, F(2)), (0, 2, F(10))))
print("shortest paths:", [[str(v) for v in row] for row in min_complete_graph(G).D])

game = isom_rule(X, Y)
print("N =", game.N, "bisynchronous:", is_bisynchronous(game))
s = find_perfect_deterministic(game)
print("winning answers:", s.f)
print("no strategy for X vs T:", find_perfect_deterministic(isom_rule(X, T)))

t = simulate_rounds(correlation_from_deterministic(s), game, 2000, seed=7)
print(f"simulated {t.count} rounds, win rate {t.win_rate}")

# isometric spaces share a characteristic polynomial
print("charpoly X:", [str(c) for c in charpoly(X.D)], " charpoly T:", [str(c) for c in charpoly(T.D)])
