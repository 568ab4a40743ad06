"""Quantum metric filtrations built from metric spaces and from (quantum) graphs."""

from fractions import Fraction as F

from qmetric import (
    SimpleGraph,
    bimodule_from_adjacency,
    build_quantum_set,
    classical_graph_embed,
    filtration_from_graph,
    filtration_from_metric,
    filtration_from_quantum_graph,
    is_delta_form,
    quantum_set_algebra,
    recover_metric,
    validate_metric,
    verify_filtration_axioms,
    verify_quantum_adjacency,
)

X = validate_metric("abcd", [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]])
FX = filtration_from_metric(X)
print("breakpoints", [str(t) for t in FX.breakpoints], "dims", FX.dims())
print(verify_filtration_axioms(FX).summary())
print("recovered == X:", recover_metric(FX) == X)

# the path graph: V_1 = neighbours, V_k = V_1^k
P4 = SimpleGraph.on(4, [(0, 1), (1, 2), (2, 3)])
print("graph route dims", filtration_from_graph(P4).dims())

# same thing through the quantum-graph picture
Q, A = classical_graph_embed(P4.reflexive_adjacency())
print("delta^2 =", is_delta_form(Q), "|", verify_quantum_adjacency(Q, A).summary())
S = bimodule_from_adjacency(Q, A)
FQ = filtration_from_quantum_graph(S, quantum_set_algebra(Q))
print("quantum route dims", FQ.dims(), "match:", FQ == filtration_from_graph(P4, algebra="abelian"))

# a noncommutative quantum set: M_2 with the trace
M2 = build_quantum_set([2], [1])
print("M_2: dim", M2.dim, "psi(1) =", M2.psi_one(), "delta^2 =", is_delta_form(M2))
K = (M2.eta_vector() @ M2.eta_adjoint()).scale(is_delta_form(M2))  # complete quantum graph
print("complete graph:", verify_quantum_adjacency(M2, K).summary())
FK = filtration_from_quantum_graph(bimodule_from_adjacency(M2, K), quantum_set_algebra(M2))
print("dims", FK.dims(), verify_filtration_axioms(FK).summary())

# unequal weights give no delta-form
try:
    is_delta_form(build_quantum_set([1, 1], [F(1, 2), F(1, 3)]))
except ValueError as e:
    print("C^2 with (1/2, 1/3):", type(e).__name__)
