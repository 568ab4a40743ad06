"""Command-line front end: ``qmetric <group> <command> --in FILE ...``.

Each command prints one canonical JSON document on stdout and a one-line
summary on stderr.  Exit status: 0 when the property holds (or the
construction succeeds), 1 when it fails with a witness, 2 for usage or input
errors.

Positional pairing of ``--in``:

    metric validate      METRIC
    metric isometries    METRIC_X METRIC_Y
    metric mcg           GRAPH
    game rules|solve     METRIC_X METRIC_Y
    game simulate        METRIC_X METRIC_Y [CORRELATION | REP]
    rep verify           REP METRIC_X METRIC_Y
    rep search|obstruct  METRIC_X METRIC_Y
    wstar from-metric    METRIC
    wstar from-graph     GRAPH
    wstar verify|recover FILTRATION
    wstar invariance     REP FILTRATION_V FILTRATION_W
    qgraph *             QUANTUM_SET ADJACENCY_MATRIX   or   CLASSICAL_ADJACENCY

A classical adjacency file is either a bare 0/1 matrix ``[[1,1],[1,1]]``,
``{"adjacency": [[...]]}``, or a graph file (loops are added).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import algebra, formats, game, metric, qgraph, wstar
from .formats import FormatError, dumps
from .linalg import MatrixGQ, format_rational

__all__ = ["CommandResult", "cli_dispatch", "main", "COMMANDS"]


@dataclass
class CommandResult:
    exit_code: int
    report: dict
    summary: str = ""

    @property
    def stdout(self) -> str:
        return dumps(self.report) + "\n"


class UsageError(Exception):
    pass


def _inputs(args, count: int | Tuple[int, ...]) -> List[object]:
    counts = (count,) if isinstance(count, int) else count
    files = args.inputs or []
    if len(files) not in counts:
        want = " or ".join(map(str, counts))
        raise UsageError(f"expected {want} --in file(s), got {len(files)}")
    return [formats.load_json(f) for f in files]


def _ok(flag: bool) -> int:
    return 0 if flag else 1


# metric

def cmd_metric_validate(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    try:
        X = formats.metric_from_json(doc)
    except metric.MetricViolation as e:
        return CommandResult(1, {"valid": False, **e.to_dict()}, str(e))
    return CommandResult(0, {"valid": True, "metric": formats.metric_to_json(X)}, f"valid metric on {X.n} points")


def cmd_metric_isometries(args) -> CommandResult:
    X, Y = (formats.metric_from_json(d) for d in _inputs(args, 2))
    isos = metric.enumerate_isometries(X, Y)
    report = {"count": len(isos), "isometries": [list(g.perm) for g in isos]}
    return CommandResult(_ok(bool(isos)), report, f"{len(isos)} isometries")


def cmd_metric_mcg(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    G = formats.graph_from_json(doc)
    try:
        X = metric.min_complete_graph(G)
    except metric.Disconnected as e:
        return CommandResult(1, e.to_dict(), str(e))
    return CommandResult(0, formats.metric_to_json(X), f"shortest-path metric on {X.n} points")


# game

def _game(args, docs) -> game.SynchronousGame:
    X, Y = (formats.metric_from_json(d) for d in docs[:2])
    return game.isom_rule(X, Y)


def cmd_game_rules(args) -> CommandResult:
    G = _game(args, _inputs(args, 2))
    table = G.rule_table()
    report = {
        "N": G.N,
        "nx": G.nx,
        "synchronous": game.is_synchronous(G),
        "bisynchronous": game.is_bisynchronous(G),
        "winning_tuples": int(table.sum()),
        "table": [int(v) for v in table.reshape(-1)],
    }
    return CommandResult(0, report, f"N={G.N}, {report['winning_tuples']} winning tuples of {G.N ** 4}")


def cmd_game_solve(args) -> CommandResult:
    G = _game(args, _inputs(args, 2))
    s = game.find_perfect_deterministic(G)
    if s is None:
        return CommandResult(1, {"perfect": False, "strategy": None}, "no perfect deterministic strategy")
    iso = [s.f[x] - G.nx for x in range(G.nx)]
    report = {"perfect": True, "strategy": list(s.f), "isometry": iso}
    return CommandResult(0, report, f"perfect strategy from isometry {iso}")


def cmd_game_simulate(args) -> CommandResult:
    docs = _inputs(args, (2, 3))
    G = _game(args, docs)
    if len(docs) == 3:
        doc = docs[2]
        if isinstance(doc, dict) and "blocks" in doc:
            rep = formats.rep_from_json(doc)
            try:
                p = game.correlation_from_projections(rep, tol=args.tol)
            except game.NotAStrategy as e:
                return CommandResult(1, {"error": "NotAStrategy", "message": str(e)}, str(e))
        else:
            p = formats.correlation_from_json(doc)
    else:
        s = game.find_perfect_deterministic(G)
        if s is None:
            return CommandResult(1, {"error": "NoStrategy", "message": "spaces are not isometric"},
                                 "no deterministic strategy to simulate")
        p = game.correlation_from_deterministic(s)
    t = game.simulate_rounds(p, G, args.rounds, seed=args.seed, input_dist=args.input_dist)
    report = t.to_dict()
    return CommandResult(_ok(t.wins == t.count), report, f"won {t.wins}/{t.count} rounds")


# rep

def cmd_rep_verify(args) -> CommandResult:
    docs = _inputs(args, 3)
    rep = formats.rep_from_json(docs[0])
    X, Y = (formats.metric_from_json(d) for d in docs[1:])
    rel = algebra.verify_rep_relations(rep, X, Y, tol=args.tol)
    mu = algebra.is_magic_unitary(rep, tol=args.tol)
    ok_i, res_i = algebra.verify_intertwiner(rep, X, Y, tol=args.tol)
    report = {
        "ok": rel.ok and mu.ok and ok_i,
        "relations": rel.to_dict(),
        "magic_unitary": mu.to_dict(),
        "intertwiner": {"passed": ok_i, "residual": res_i},
    }
    return CommandResult(_ok(report["ok"]), report, f"relations {rel.summary()}; magic unitary {mu.summary()}")


def cmd_rep_search(args) -> CommandResult:
    X, Y = (formats.metric_from_json(d) for d in _inputs(args, 2))
    if args.d is None:
        raise UsageError("rep search needs --d")
    res = algebra.search_quantum_rep(X, Y, args.d, seed=args.seed)
    report = res.to_dict()
    report["rep"] = formats.rep_to_json(res.rep) if res.found else None
    msg = f"found d={args.d} rep (penalty {res.penalty:.3g})" if res.found else "NotFound (inconclusive)"
    return CommandResult(_ok(res.found), report, msg)


def cmd_rep_obstruct(args) -> CommandResult:
    X, Y = (formats.metric_from_json(d) for d in _inputs(args, 2))
    obstructed = algebra.spectral_obstruction(X, Y)
    ix, iy = metric.metric_invariants(X), metric.metric_invariants(Y)
    report = {
        "obstructed": obstructed,
        "charpoly_X": [format_rational(c) for c in ix.charpoly],
        "charpoly_Y": [format_rational(c) for c in iy.charpoly],
    }
    msg = "obstructed: characteristic polynomials differ" if obstructed else "not obstructed"
    return CommandResult(_ok(obstructed), report, msg)


# wstar

def cmd_wstar_from_metric(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    F = wstar.filtration_from_metric(formats.metric_from_json(doc))
    return CommandResult(0, formats.filtration_to_json(F), f"{len(F)} breakpoints, dims {F.dims()}")


def cmd_wstar_from_graph(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    G = formats.simple_graph_from_json(doc)
    try:
        F = wstar.filtration_from_graph(G, algebra=args.algebra)
    except metric.Disconnected as e:
        return CommandResult(1, e.to_dict(), str(e))
    return CommandResult(0, formats.filtration_to_json(F), f"{len(F)} breakpoints, dims {F.dims()}")


def cmd_wstar_verify(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    r = wstar.verify_filtration_axioms(formats.filtration_from_json(doc))
    return CommandResult(_ok(r.ok), r.to_dict(), r.summary())


def cmd_wstar_recover(args) -> CommandResult:
    (doc,) = _inputs(args, 1)
    F = formats.filtration_from_json(doc)
    try:
        X = wstar.recover_metric(F)
    except wstar.NotAbelian as e:
        raise UsageError(f"NotAbelian: {e}") from e
    except wstar.NoFiniteDistance as e:
        return CommandResult(1, {"error": "NoFiniteDistance", "pair": list(e.pair)}, str(e))
    except metric.MetricViolation as e:
        return CommandResult(1, {"error": "MetricViolation", **e.to_dict()}, str(e))
    return CommandResult(0, formats.metric_to_json(X), f"recovered metric on {X.n} points")


def cmd_wstar_invariance(args) -> CommandResult:
    docs = _inputs(args, 3)
    rep = formats.rep_from_json(docs[0])
    FV, FW = (formats.filtration_from_json(d) for d in docs[1:])
    r = wstar.conjugation_invariance_check(rep, FV, FW, tol=args.tol)
    return CommandResult(_ok(r.ok), r.to_dict(), r.summary())


# qgraph

def _classical_adjacency(doc) -> Optional[List[List[int]]]:
    if isinstance(doc, list):
        return doc
    if isinstance(doc, dict) and "adjacency" in doc:
        return doc["adjacency"]
    if isinstance(doc, dict) and "points" in doc and "edges" in doc:
        return formats.simple_graph_from_json(doc).reflexive_adjacency()
    return None


def _quantum_graph(args) -> Tuple[qgraph.FiniteQuantumSet, MatrixGQ]:
    docs = _inputs(args, (1, 2))
    if len(docs) == 1:
        adj = _classical_adjacency(docs[0])
        if adj is None:
            raise FormatError("single input must be a classical adjacency matrix or graph")
        try:
            return qgraph.classical_graph_embed(adj)
        except (qgraph.NotReflexive, qgraph.NotSymmetric) as e:
            raise FormatError(f"{type(e).__name__}: {e}") from e
    Q = formats.quantum_set_from_json(docs[0])
    A = formats.matrix_from_json(docs[1], "exact")
    if A.shape != (Q.dim, Q.dim):
        raise FormatError(f"adjacency is {A.shape[0]}x{A.shape[1]}, GNS space has dimension {Q.dim}")
    return Q, A


def _delta2(Q) -> Fraction | None:
    try:
        return qgraph.is_delta_form(Q)
    except qgraph.NotDeltaForm:
        return None


def cmd_qgraph_verify(args) -> CommandResult:
    Q, A = _quantum_graph(args)
    d2 = _delta2(Q)
    if d2 is None:
        return CommandResult(1, {"ok": False, "reason": "NotDeltaForm", "quantum_set": Q.to_dict()},
                             "trace is not a δ-form")
    r = qgraph.verify_quantum_adjacency(Q, A)
    report = {"delta_squared": format_rational(d2), "quantum_set": Q.to_dict(), **r.to_dict()}
    return CommandResult(_ok(r.ok), report, f"δ²={format_rational(d2)}; {r.summary()}")


def cmd_qgraph_bimodule(args) -> CommandResult:
    Q, A = _quantum_graph(args)
    try:
        S = qgraph.bimodule_from_adjacency(Q, A)
    except qgraph.NotIdempotent as e:
        return CommandResult(1, {"error": "NotIdempotent", "residual": e.residual}, str(e))
    except qgraph.NotDeltaForm as e:
        return CommandResult(1, {"error": "NotDeltaForm"}, str(e))
    report = {"n": S.n, "dim": S.dim, "basis": formats.subspace_to_json(S)}
    return CommandResult(0, report, f"operator system of dimension {S.dim} in M_{S.n}")


def cmd_qgraph_filtration(args) -> CommandResult:
    Q, A = _quantum_graph(args)
    try:
        S = qgraph.bimodule_from_adjacency(Q, A)
        F = qgraph.filtration_from_quantum_graph(S, qgraph.quantum_set_algebra(Q))
    except (qgraph.NotIdempotent, qgraph.NotDeltaForm) as e:
        return CommandResult(1, {"error": type(e).__name__, "message": str(e)}, str(e))
    except ValueError as e:
        return CommandResult(1, {"error": "NotQuantumGraph", "message": str(e)}, str(e))
    return CommandResult(0, formats.filtration_to_json(F), f"{len(F)} breakpoints, dims {F.dims()}")


COMMANDS: Dict[Tuple[str, str], Callable] = {
    ("metric", "validate"): cmd_metric_validate,
    ("metric", "isometries"): cmd_metric_isometries,
    ("metric", "mcg"): cmd_metric_mcg,
    ("game", "rules"): cmd_game_rules,
    ("game", "solve"): cmd_game_solve,
    ("game", "simulate"): cmd_game_simulate,
    ("rep", "verify"): cmd_rep_verify,
    ("rep", "search"): cmd_rep_search,
    ("rep", "obstruct"): cmd_rep_obstruct,
    ("wstar", "from-metric"): cmd_wstar_from_metric,
    ("wstar", "from-graph"): cmd_wstar_from_graph,
    ("wstar", "verify"): cmd_wstar_verify,
    ("wstar", "recover"): cmd_wstar_recover,
    ("wstar", "invariance"): cmd_wstar_invariance,
    ("qgraph", "verify"): cmd_qgraph_verify,
    ("qgraph", "bimodule"): cmd_qgraph_bimodule,
    ("qgraph", "filtration"): cmd_qgraph_filtration,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmetric", description=__doc__.split("\n\n")[0],
                epilog=__doc__.split("\n\n", 1)[1], formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("group", choices=sorted({g for g, _ in COMMANDS}))
    p.add_argument("command")
    p.add_argument("--in", dest="inputs", action="append", metavar="FILE", help="input file (repeatable)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--input-dist", choices=["uniform", "exhaustive-cycle"], default="uniform")
    p.add_argument("--algebra", choices=["full", "abelian"], default="full",
                   help="algebra for 'wstar from-graph'")
    return p


def cli_dispatch(argv: Sequence[str]) -> CommandResult:
    try:
        args = build_parser().parse_args(list(argv))
        fn = COMMANDS.get((args.group, args.command))
        if fn is None:
            raise UsageError(f"unknown command '{args.group} {args.command}'")
        if args.rounds < 0:
            raise UsageError("--rounds must be >= 0")
        return fn(args)
    except UsageError as e:
        return CommandResult(2, {"error": "UsageError", "message": str(e)}, f"usage error: {e}")
    except (FormatError, metric.MetricViolation, algebra.SizeMismatch, OSError) as e:
        name = type(e).__name__
        return CommandResult(2, {"error": name, "message": str(e)}, f"input error: {name}: {e}")
    except (ValueError, TypeError) as e:
        return CommandResult(2, {"error": type(e).__name__, "message": str(e)}, f"input error: {e}")


def main(argv: Sequence[str] | None = None) -> int:
    res = cli_dispatch(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(res.stdout)
    sys.stderr.write(res.summary + "\n")
    return res.exit_code
