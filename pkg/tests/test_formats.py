import json
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings

from _helpers import gaussian, line3, matrices, random_metric, subspaces
from qmetric import (
    GameAlgebraRep,
    MatrixGQ,
    SimpleGraph,
    TriangleViolation,
    WeightedGraph,
    build_quantum_set,
    correlation_from_deterministic,
    correlation_from_projections,
    filtration_from_graph,
    filtration_from_metric,
    find_perfect_deterministic,
    gq,
    isom_rule,
    pauli_block_rep,
    rep_from_permutation,
)
from qmetric import formats as fm


def round_trip(obj):
    return json.loads(fm.dumps(obj))


@given(gaussian)
def test_scalar_round_trip(z):
    assert fm.scalar_from_json(round_trip(fm.scalar_to_json(z))) == z


def test_scalar_forms():
    assert fm.scalar_to_json(F(3, 2)) == ["3/2", "0"]
    assert fm.scalar_to_json(gq(0, -1)) == ["0", "-1"]
    assert fm.scalar_from_json("7/14") == F(1, 2)
    with pytest.raises(fm.FormatError):
        fm.scalar_from_json("x")


@given(matrices())
def test_exact_matrix_round_trip(M):
    back = fm.matrix_from_json(round_trip(fm.matrix_to_json(M)))
    assert isinstance(back, MatrixGQ) and back == M


def test_float_matrix_round_trip_and_mode_detection():
    A = np.array([[0.5, 1j], [2, -0.25 + 0.5j]])
    back = fm.matrix_from_json(round_trip(fm.matrix_to_json(A)))
    assert isinstance(back, np.ndarray)
    np.testing.assert_array_equal(back, A)
    mixed = {"rows": 1, "cols": 2, "entries": ["1/2", 0.25]}
    np.testing.assert_array_equal(fm.matrix_from_json(mixed), [[0.5, 0.25]])
    assert isinstance(fm.matrix_from_json(mixed | {"entries": ["1/2", "1"]}), MatrixGQ)
    with pytest.raises(fm.FormatError):
        fm.matrix_from_json({"rows": 2, "cols": 2, "entries": ["1"]})
    with pytest.raises(fm.FormatError):
        fm.matrix_from_json({"rows": 1, "cols": 1})


def test_metric_round_trip_and_validation():
    rng = random.Random(0)
    for _ in range(20):
        X = random_metric(rng, rng.randint(1, 5))
        assert fm.metric_from_json(round_trip(fm.metric_to_json(X))) == X
    bad = {"points": ["a", "b", "c"], "distances": [["0", "1", "3"], ["1", "0", "1"], ["3", "1", "0"]]}
    with pytest.raises(TriangleViolation):
        fm.metric_from_json(bad)
    with pytest.raises(fm.FormatError):
        fm.metric_from_json({"points": ["a"], "distances": [["0", "1"]]})
    with pytest.raises(fm.FormatError):
        fm.metric_from_json({"points": ["a", "b"], "distances": [["0", ["1", "1"]], [["1", "1"], "0"]]})


def test_graph_round_trips():
    G = WeightedGraph(("x", "y", "z"), ((0, 1, F(1)), (1, 2, F(5, 2))))
    assert fm.graph_from_json(round_trip(fm.graph_to_json(G))) == G
    S = SimpleGraph(("a", "b", "c"), ((0, 1), (1, 2)))
    assert fm.simple_graph_from_json(round_trip(fm.graph_to_json(S))) == S
    assert fm.graph_from_json({"points": ["a", "b"], "edges": [["a", "b"]]}).edges == ((0, 1, 1),)
    with pytest.raises(fm.FormatError):
        fm.simple_graph_from_json(round_trip(fm.graph_to_json(G)))
    with pytest.raises(fm.FormatError):
        fm.graph_from_json({"points": ["a"], "edges": [["a", "q"]]})
    with pytest.raises(fm.FormatError):
        fm.graph_from_json({"points": ["a", "a"], "edges": []})


def test_correlation_round_trip():
    G = isom_rule(line3(), line3())
    p = correlation_from_deterministic(find_perfect_deterministic(G))
    back = fm.correlation_from_json(round_trip(fm.correlation_to_json(p)))
    assert back.mode == "exact" and (back.p == p.p).all()
    P2 = np.diag([1.0, 0.0])
    Q2 = np.full((2, 2), 0.5)
    q = correlation_from_projections(pauli_block_rep(P2, Q2))
    back = fm.correlation_from_json(round_trip(fm.correlation_to_json(q)))
    np.testing.assert_array_equal(back.p, q.p)
    with pytest.raises(fm.FormatError):
        fm.correlation_from_json({"mode": "exact", "N": 2, "p": ["0"]})


def test_rep_round_trip():
    for rep in (rep_from_permutation([2, 0, 1]),
                pauli_block_rep(np.diag([1.0, 0.0]), np.full((2, 2), 0.5))):
        back = fm.rep_from_json(round_trip(fm.rep_to_json(rep)))
        assert back == rep
    doc = round_trip(fm.rep_to_json(rep_from_permutation([1, 0])))
    doc["d"] = 2
    with pytest.raises(fm.FormatError):
        fm.rep_from_json(doc)
    with pytest.raises(fm.FormatError):
        fm.rep_from_json({"mode": "other"})


def test_filtration_round_trips():
    for Fx in (filtration_from_metric(line3()),
               filtration_from_graph(SimpleGraph.on(3, [(0, 1), (1, 2)])),
               filtration_from_graph(SimpleGraph.on(3, [(0, 1), (1, 2)]), algebra="abelian")):
        assert fm.filtration_from_json(round_trip(fm.filtration_to_json(Fx))) == Fx


@settings(max_examples=30, deadline=None)
@given(subspaces())
def test_subspace_round_trip(S):
    assert fm.subspace_from_json(3, round_trip(fm.subspace_to_json(S))) == S


def test_quantum_set_round_trip():
    Q = build_quantum_set([1, 2], [F(1, 5), F(2, 5)])
    back = fm.quantum_set_from_json(round_trip(fm.quantum_set_to_json(Q)))
    assert back.block_sizes == Q.block_sizes and back.weights == Q.weights
    with pytest.raises(fm.FormatError):
        fm.quantum_set_from_json({"blocks": [1], "weights": ["-1"]})


def test_dumps_is_canonical():
    a = fm.dumps({"b": 1, "a": [1, 2]})
    assert a == '{"a":[1,2],"b":1}'
    X = filtration_from_metric(line3())
    assert fm.dumps(fm.filtration_to_json(X)) == fm.dumps(fm.filtration_to_json(filtration_from_metric(line3())))


def test_load_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(fm.FormatError):
        fm.load_json(p)


def test_float_rep_rejects_nan_entries():
    doc = round_trip(fm.rep_to_json(GameAlgebraRep.float([[np.eye(1)]])))
    doc["blocks"][0][0]["entries"][0] = ["nan", 0.0]
    with pytest.raises(fm.FormatError):
        fm.rep_from_json(doc)
