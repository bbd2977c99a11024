import numpy as np
import pytest

from qmc import channel as ch
from qmc import checker
from qmc import linalg as la
from qmc import logic as lg
from qmc import qts
from qmc.errors import NoTraceAvailable, UnboundAtom

from helpers import (random_closing_qts, random_closing_state,
                     random_state_formula, random_unit_vector)
from oracle import PathOracle

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def pure(v):
    return np.outer(v, v.conj())


def span(*vs):
    return la.Subspace.span(vs)


def id_loop_system():
    return qts.build_sequential(ch.SuperOperator.identity(1), 1, 0)


def h_loop_system():
    return qts.build_sequential(ch.gate_library("H"), 1, 0)


BINDINGS_1Q = {
    "zero": span(KET0),
    "one": span(KET1),
    "plus": span(PLUS),
    "minus": span(MINUS),
}


class TestBuildGraph:
    def test_identity_loop_single_node(self):
        g = checker.build_graph(id_loop_system(), pure(KET0), bound=10)
        assert len(g.nodes) == 1
        assert g.nodes[0].out == ((0, 1.0),)
        assert g.closure == checker.COMPLETE

    def test_h_loop_period_two(self):
        g = checker.build_graph(h_loop_system(), pure(KET0), bound=16)
        assert g.closure == checker.COMPLETE
        assert len(g.nodes) == 2  # |0> and |+> alternate

    def test_teleportation_graph(self):
        system = qts.teleportation_qts()
        rho0 = qts.teleportation_input(PLUS)
        g = checker.build_graph(system, rho0, bound=10)
        assert g.closure == checker.COMPLETE
        # hand enumeration: 3 chain nodes, 2 after first measurement,
        # 2 after the correction layer, 4 + 4 through the second round
        assert len(g.nodes) == 15
        locations = {n.config.location for n in g.nodes}
        assert locations == {f"l{i}" for i in range(15)}

    def test_truncation_flag(self):
        # T-loop orbits of |+> never close; a small bound must truncate
        system = qts.build_sequential(ch.gate_library("T"), 1, 0)
        g = checker.build_graph(system, pure(PLUS), bound=3)
        assert g.closure == ("truncated", 3)
        assert any(not n.complete for n in g.nodes)

    def test_thread_count_does_not_change_graph(self):
        system = qts.teleportation_qts()
        rho0 = qts.teleportation_input(PLUS)
        graphs = [checker.build_graph(system, rho0, bound=10, threads=t)
                  for t in (1, 2, 4)]
        digests = [[(n.config.location, n.digest, n.out) for n in g.nodes]
                   for g in graphs]
        assert digests[0] == digests[1] == digests[2]

    def test_dedup_merges_fingerprint_twins(self):
        # two states closer than the fingerprint tolerance share a node
        system = id_loop_system()
        g = checker.build_graph(system, pure(KET0), bound=4)
        assert len(g.nodes) == 1


class TestCheckBasics:
    def test_true_holds_everywhere(self):
        v = checker.check(id_loop_system(), pure(KET0), lg.TRUE, {}, bound=8)
        assert v.result == "holds"

    def test_h_loop_next_plus_holds(self):
        v = checker.check(h_loop_system(), pure(KET0),
                          lg.parse_formula("A X [plus]"), BINDINGS_1Q)
        assert v.result == "holds"

    def test_h_loop_next_zero_fails_with_trace(self):
        v = checker.check(h_loop_system(), pure(KET0),
                          lg.parse_formula("A X [zero]"), BINDINGS_1Q)
        assert v.result == "fails"
        assert v.trace is not None
        assert len(v.trace) == 2  # root plus the refuting successor

    def test_teleportation_until_holds(self, rng):
        system = qts.teleportation_qts()
        psi = random_unit_vector(rng, 2)
        vecs = []
        for x in range(2):
            for y in range(2):
                v = np.zeros(8, dtype=complex)
                v[x + 2 * y] = psi[0]
                v[x + 2 * y + 4] = psi[1]
                vecs.append(v)
        bindings = {"psi3": la.Subspace.span(vecs)}
        verdict = checker.check(system, qts.teleportation_input(psi),
                                lg.parse_formula("A (true U [psi3])"),
                                bindings, bound=16)
        assert verdict.result == "holds"

    def test_unbound_atom_raises(self):
        with pytest.raises(UnboundAtom):
            checker.check(id_loop_system(), pure(KET0),
                          lg.parse_formula("[ghost]"), {})

    def test_exit_style_fields(self):
        v = checker.check(id_loop_system(), pure(KET0),
                          lg.parse_formula("[zero]"), BINDINGS_1Q)
        assert v.nodes == 1 and v.edges == 1
        assert v.closure == checker.COMPLETE
        assert set(v.timings) == {"build_s", "label_s"}


class TestThreeValued:
    def test_truncated_unknown(self):
        # after 3 steps of T the orbit has not closed and G [diag] cannot
        # be decided from the prefix
        system = qts.build_sequential(ch.gate_library("T"), 1, 0)
        bindings = {"up": span(np.array([1, 0], dtype=complex))}
        v = checker.check(system, pure(PLUS),
                          lg.parse_formula("A G [ ~up | up ]"), bindings,
                          bound=3)
        assert v.result == "unknown"
        assert v.closure == ("truncated", 3)

    def test_truncated_witness_still_holds(self):
        # an Until witness inside the explored prefix decides the verdict
        system = qts.build_sequential(ch.gate_library("X"), 1, 0)
        v = checker.check(system, pure(KET0),
                          lg.parse_formula("E (true U [one])"), BINDINGS_1Q,
                          bound=1)
        # bound 1 explores |0> -> |1>; |1> is unexpanded but satisfies [one],
        # and in a total system every node continues forever
        assert v.closure == ("truncated", 1)
        assert v.result == "holds"
        assert [s.location for s in v.trace] == ["l0", "l0"]

    def test_truncated_refutation_still_fails(self):
        system = qts.build_sequential(ch.gate_library("T"), 1, 0)
        v = checker.check(system, pure(PLUS),
                          lg.parse_formula("A X [up]"),
                          {"up": span(KET0)}, bound=2)
        assert v.result == "fails"

    def test_monotone_bounds(self, rng):
        """Raising the bound may decide unknowns but never flips a decided
        verdict."""
        for _ in range(10):
            system = random_closing_qts(rng, 1, int(rng.integers(1, 4)))
            rho0 = random_closing_state(rng, 1)
            formula = random_state_formula(rng, list(BINDINGS_1Q), 2)
            decided = None
            for bound in range(1, 17):
                v = checker.check(system, rho0, formula, BINDINGS_1Q,
                                  bound=bound)
                if decided is None and v.result != "unknown":
                    decided = v.result
                elif decided is not None and v.result != "unknown":
                    assert v.result == decided


class TestAgainstPathOracle:
    def test_fifty_random_systems(self, rng):
        systems_checked = 0
        attempts = 0
        while systems_checked < 50 and attempts < 400:
            attempts += 1
            n_qubits = int(rng.integers(1, 3))
            system = random_closing_qts(rng, n_qubits,
                                        int(rng.integers(1, 4)))
            rho0 = random_closing_state(rng, n_qubits)
            graph = checker.build_graph(system, rho0, bound=32)
            if graph.closure != checker.COMPLETE or len(graph.nodes) > 32:
                continue
            systems_checked += 1
            d = 2 ** n_qubits
            bindings = {
                "a": la.Subspace.span([random_unit_vector(rng, d)]),
                "b": la.Subspace.span([random_unit_vector(rng, d)]),
            }
            oracle = PathOracle(graph, bindings)
            formulas = [random_state_formula(rng, ["a", "b"], depth)
                        for depth in (1, 1, 2, 2, 3, 3, 3, 3)]
            for formula in formulas:
                verdict = checker.check(system, rho0, formula, bindings,
                                        bound=32, graph=graph)
                expected = oracle.holds(0, formula)
                assert verdict.result == ("holds" if expected else "fails"), \
                    lg.print_formula(formula)
        assert systems_checked == 50

    def test_labeling_matches_satisfies_atomic(self, rng):
        system = qts.teleportation_qts()
        rho0 = qts.teleportation_input(PLUS)
        graph = checker.build_graph(system, rho0, bound=10)
        prop = lg.OrQ(lg.Atom("x"), lg.NotQ(lg.Atom("y")))
        bindings = {
            "x": la.Subspace.span([random_unit_vector(rng, 8)]),
            "y": la.Subspace.span([random_unit_vector(rng, 8),
                                   random_unit_vector(rng, 8)]),
        }
        members = graph.label_set(prop, bindings)
        sample = rng.choice(len(graph.nodes),
                            size=max(2, len(graph.nodes) // 10 + 1),
                            replace=False)
        for idx in sample:
            state = graph.nodes[int(idx)].config.state
            assert (int(idx) in members) == \
                lg.satisfies_atomic(state, prop, bindings)


class TestDedupSoundness:
    def test_dedup_never_changes_decided_verdicts(self, rng):
        for _ in range(8):
            system = random_closing_qts(rng, 1, int(rng.integers(1, 3)))
            rho0 = random_closing_state(rng, 1)
            formula = random_state_formula(rng, list(BINDINGS_1Q), 2)
            merged = checker.check(system, rho0, formula, BINDINGS_1Q,
                                   bound=24)
            plain_graph = checker.build_graph(system, rho0, bound=7,
                                              dedup=False)
            plain = checker.check(system, rho0, formula, BINDINGS_1Q,
                                  graph=plain_graph)
            if plain.result != "unknown" and merged.result != "unknown":
                assert plain.result == merged.result


class TestTraces:
    def test_exists_next_witness_length_one(self):
        v = checker.check(id_loop_system(), pure(KET0),
                          lg.parse_formula("E X true"), {}, bound=4)
        assert v.result == "holds"
        assert len(v.trace) == 2
        assert v.trace[0].location == "l0"
        assert v.trace[1].probability == pytest.approx(1.0)

    def test_teleportation_counterexample(self, rng):
        system = qts.teleportation_qts()
        psi = random_unit_vector(rng, 2)
        vecs = []
        for x in range(2):
            for y in range(2):
                v = np.zeros(8, dtype=complex)
                v[x + 2 * y] = psi[0]
                v[x + 2 * y + 4] = psi[1]
                vecs.append(v)
        bindings = {"psi3": la.Subspace.span(vecs)}
        verdict = checker.check(system, qts.teleportation_input(psi),
                                lg.parse_formula("A X [psi3]"), bindings,
                                bound=16)
        assert verdict.result == "fails"
        assert verdict.trace is not None
        last = verdict.trace[-1]
        node = next(n for n in checker.build_graph(
            system, qts.teleportation_input(psi), 16).nodes
            if n.digest == last.state_digest)
        assert not lg.satisfies_atomic(node.config.state, lg.Atom("psi3"),
                                       bindings)

    def test_unknown_has_no_trace(self):
        system = qts.build_sequential(ch.gate_library("T"), 1, 0)
        graph = checker.build_graph(system, pure(PLUS), bound=2)
        with pytest.raises(NoTraceAvailable):
            checker.extract_trace(graph, lg.parse_formula("A G [zero]"),
                                  BINDINGS_1Q, "unknown")

    def test_forall_holds_has_no_trace(self):
        graph = checker.build_graph(h_loop_system(), pure(KET0), bound=8)
        formula = lg.parse_formula("A X [plus]")
        with pytest.raises(NoTraceAvailable):
            checker.extract_trace(graph, formula, BINDINGS_1Q, "holds")

    def test_lasso_counterexample(self):
        # A (true U [one]) fails on the identity loop from |0>: the loop
        # never reaches |1>, so the trace closes a cycle
        v = checker.check(id_loop_system(), pure(KET0),
                          lg.parse_formula("A (true U [one])"), BINDINGS_1Q,
                          bound=8)
        assert v.result == "fails"
        assert v.trace is not None
        assert v.trace[0].location == v.trace[-1].location


SINK_MODEL = """
qubits 1
locations live dead
initial live
transitions
  live -> live : measure M[1] = 0
  live -> dead : measure M[1] = 1
"""


class TestSinkLocations:
    """Hand-written models may contain dead-end locations; configurations
    there start no paths, so existential formulas fail and universal ones
    hold vacuously, consistently across checker and oracle."""

    def build(self):
        system = qts.parse_model(SINK_MODEL)
        return system, checker.build_graph(system, pure(PLUS), bound=8)

    def test_graph_completes_with_dead_end(self):
        _, graph = self.build()
        assert graph.closure == checker.COMPLETE
        assert len(graph.nodes) == 3
        dead = [n for n in graph.nodes if n.config.location == "dead"]
        assert dead[0].complete and dead[0].out == ()

    def test_no_path_through_the_sink(self):
        system, graph = self.build()
        v = checker.check(system, pure(PLUS),
                          lg.parse_formula("E X [one]"), BINDINGS_1Q,
                          graph=graph)
        assert v.result == "fails"
        v = checker.check(system, pure(PLUS),
                          lg.parse_formula("A X [zero]"), BINDINGS_1Q,
                          graph=graph)
        assert v.result == "holds"

    def test_oracle_agrees_on_sink_graph(self, rng):
        system, graph = self.build()
        oracle = PathOracle(graph, BINDINGS_1Q)
        for _ in range(40):
            formula = random_state_formula(rng, list(BINDINGS_1Q),
                                           int(rng.integers(1, 4)))
            verdict = checker.check(system, pure(PLUS), formula,
                                    BINDINGS_1Q, graph=graph)
            expected = "holds" if oracle.holds(0, formula) else "fails"
            assert verdict.result == expected, lg.print_formula(formula)


def test_thread_env_variable(monkeypatch):
    monkeypatch.setenv("QMC_THREADS", "3")
    assert checker._thread_count(None) == 3
    assert checker._thread_count(1) == 1
    monkeypatch.delenv("QMC_THREADS")
    assert checker._thread_count(None) >= 1


def test_fingerprint_folds_negative_zero():
    a = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    b = a.copy()
    b[0, 1] = -0.0 + 0.0j
    assert checker.fingerprint(a) == checker.fingerprint(b)


def test_fingerprint_distinguishes_states():
    assert checker.fingerprint(pure(KET0)) != checker.fingerprint(pure(PLUS))
