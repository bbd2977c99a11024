"""Quantum transition systems and the circuit compilers that produce them.

A transition system is a finite set of locations with super-operator
labelled edges; for every location with outgoing edges the operators sum to
a trace-preserving map, so stepping a configuration distributes all of its
probability mass over the successors.

This module also owns the textual model format (see docs/model_format.md
for the grammar).  Each transition keeps the surface form it was written
in, so serialize -> parse round trips reproduce the system exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .errors import (DimensionMismatch, MalformedCircuit,
                     NormalisationViolation, ParseError, UnknownGate,
                     UnknownLocation)
from .linalg import TOL_HERM, is_hermitian
from .parsing import (EOF, IDENT, NUMBER, TokenStream, format_complex,
                      parse_complex, tokenize)

NORM_TOL = 1e-9  # Definition-level normalisation defect allowed per location

_PUNCTS = ["->", ":", ",", ";", "[", "]", "{", "}", "(", ")", "="]
_KEYWORDS = {"qubits", "locations", "initial", "transitions",
             "gate", "kraus", "measure"}


# --- surface forms kept on transitions ------------------------------------

@dataclass(frozen=True)
class GateSpec:
    name: str
    targets: tuple
    params: tuple = ()


@dataclass(frozen=True)
class KrausSpec:
    matrices: tuple  # nested tuples of complex, little-endian over targets
    targets: tuple


@dataclass(frozen=True)
class MeasureSpec:
    name: str
    targets: tuple
    outcome: int


def _op_from_spec(spec, n_qubits: int) -> ch.SuperOperator:
    if isinstance(spec, GateSpec):
        return ch.gate_on_qubits(spec.name, spec.targets, n_qubits,
                                 *spec.params)
    if isinstance(spec, KrausSpec):
        mats = [np.array(m, dtype=complex) for m in spec.matrices]
        base = ch.SuperOperator.from_kraus(mats)
        return ch.embed(base, spec.targets, n_qubits)
    if isinstance(spec, MeasureSpec):
        m = ch.computational_measurement(len(spec.targets))
        return ch.embed(m.branch_channel(spec.outcome), spec.targets, n_qubits)
    raise TypeError(f"unknown op spec {spec!r}")


@dataclass(frozen=True, eq=False)
class Transition:
    pre: str
    post: str
    op: ch.SuperOperator
    spec: object = None  # GateSpec | KrausSpec | MeasureSpec | None


def gate_edge(pre, post, name, targets, n_qubits, params=()) -> Transition:
    spec = GateSpec(name, tuple(targets), tuple(params))
    return Transition(pre, post, _op_from_spec(spec, n_qubits), spec)


def kraus_edge(pre, post, matrices, targets, n_qubits) -> Transition:
    mats = tuple(tuple(tuple(complex(x) for x in row) for row in np.asarray(m))
                 for m in matrices)
    spec = KrausSpec(mats, tuple(targets))
    return Transition(pre, post, _op_from_spec(spec, n_qubits), spec)


def measure_edge(pre, post, targets, outcome, n_qubits, name="M") -> Transition:
    spec = MeasureSpec(name, tuple(targets), int(outcome))
    return Transition(pre, post, _op_from_spec(spec, n_qubits), spec)


@dataclass(frozen=True, eq=False)
class QuantumTransitionSystem:
    n_qubits: int
    locations: tuple
    initial: str
    transitions: tuple
    _out: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        locs = tuple(self.locations)
        if len(set(locs)) != len(locs):
            raise MalformedCircuit("duplicate location names")
        if self.initial not in locs:
            raise UnknownLocation(f"initial location {self.initial!r} undeclared")
        out = {l: [] for l in locs}
        for t in self.transitions:
            if t.pre not in out or t.post not in out:
                bad = t.pre if t.pre not in out else t.post
                raise UnknownLocation(f"transition endpoint {bad!r} undeclared")
            out[t.pre].append(t)
        d = 2 ** self.n_qubits
        for l, ts in out.items():
            if not ts:
                continue
            total = np.zeros((d, d), dtype=complex)
            for t in ts:
                for k in t.op.kraus:
                    total += k.conj().T @ k
            defect = float(np.abs(total - np.eye(d)).max())
            if defect > NORM_TOL:
                raise NormalisationViolation(
                    f"outgoing operators at location {l!r} sum to a map with "
                    f"normalisation defect {defect:.3e}", location=l,
                    defect=defect)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "transitions", tuple(self.transitions))
        self._out.update(out)

    def outgoing(self, location: str):
        if location not in self._out:
            raise UnknownLocation(f"unknown location {location!r}")
        return tuple(self._out[location])

    def same_system(self, other: "QuantumTransitionSystem",
                    tol: float = 1e-12) -> bool:
        """Structural equality: locations, initial, and transitions with the
        same surface specs and numerically equal operators."""
        if (self.n_qubits, self.locations, self.initial) != \
                (other.n_qubits, other.locations, other.initial):
            return False
        if len(self.transitions) != len(other.transitions):
            return False
        for a, b in zip(self.transitions, other.transitions):
            if (a.pre, a.post, a.spec) != (b.pre, b.post, b.spec):
                return False
            if len(a.op.kraus) != len(b.op.kraus):
                return False
            for ka, kb in zip(a.op.kraus, b.op.kraus):
                if np.abs(ka - kb).max() > tol:
                    return False
        return True


@dataclass(frozen=True, eq=False)
class Configuration:
    """A location paired with a normalised state; `probability` is the mass
    of the branch that led here."""

    location: str
    state: np.ndarray
    probability: float = 1.0

    def __post_init__(self):
        state = np.array(self.state, dtype=complex)
        if state.ndim != 2 or state.shape[0] != state.shape[1]:
            raise DimensionMismatch(f"state shape {state.shape}")
        if not is_hermitian(state, 1e3 * TOL_HERM):
            raise DimensionMismatch("configuration state is not Hermitian")
        tr = float(np.trace(state).real)
        if abs(tr - 1.0) > 1e-9:
            raise DimensionMismatch(f"configuration state trace {tr}")
        if not 0.0 < self.probability <= 1.0 + 1e-12:
            raise DimensionMismatch(
                f"branch probability {self.probability} outside (0, 1]")
        state.setflags(write=False)
        object.__setattr__(self, "state", state)


def step(sys: QuantumTransitionSystem, config: Configuration):
    """One transition step: every outgoing branch with probability above
    TOL_PROB, as (successor configuration, branch probability) pairs.  The
    branch probabilities sum to 1 and the successor configurations carry
    `config.probability` times their branch probability."""
    results = []
    for t in sys.outgoing(config.location):
        post = ch.apply(t.op, config.state)
        p = float(np.trace(post).real)
        if p > ch.TOL_PROB:
            # symmetrize: dividing by a small branch probability would
            # otherwise amplify float asymmetry past the state validator
            post = (post + post.conj().T) / (2.0 * p)
            succ = Configuration(t.post, post, config.probability * p)
            results.append((succ, p))
    return results


# --- circuit intermediate representation ----------------------------------

@dataclass(frozen=True)
class Gate:
    """A (possibly noisy) gate application.  Either a library gate by name
    (textbook wire order, first wire = control for CX) or a raw channel
    whose Kraus operators are little-endian over `qubits`."""

    qubits: tuple
    name: str = None
    params: tuple = ()
    op: ch.SuperOperator = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "params", tuple(self.params))
        if (self.name is None) == (self.op is None):
            raise MalformedCircuit("gate needs exactly one of name / op")


@dataclass(frozen=True)
class Seq:
    first: object
    second: object


@dataclass(frozen=True)
class Cond:
    """Measure `qubits`, then continue with the branch of the outcome."""

    measurement: ch.Measurement
    qubits: tuple
    branches: dict

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "branches", dict(self.branches))


def _check_targets(qubits, n_qubits, what):
    if len(set(qubits)) != len(qubits):
        raise MalformedCircuit(f"{what}: repeated qubit in {qubits}")
    for q in qubits:
        if not 1 <= q <= n_qubits:
            raise MalformedCircuit(f"{what}: qubit {q} outside 1..{n_qubits}")


def compile_circuit(ir, n_qubits: int) -> QuantumTransitionSystem:
    """Compile a dynamic circuit into a transition system.

    Gates become single edges, sequencing chains sub-systems, and a
    measurement fans out one trace-reducing edge per outcome followed by a
    fresh copy of that outcome's branch (the result is a tree).  Every
    terminal location gets an identity self-loop so paths never end."""
    counter = itertools.count()
    locations = []
    transitions = []

    def fresh() -> str:
        name = f"l{next(counter)}"
        locations.append(name)
        return name

    def emit(node, pre) -> list:
        if isinstance(node, Gate):
            _check_targets(node.qubits, n_qubits, "gate")
            post = fresh()
            if node.name is not None:
                transitions.append(gate_edge(pre, post, node.name,
                                             node.qubits, n_qubits,
                                             node.params))
            else:
                if node.op.n_qubits != len(node.qubits):
                    raise MalformedCircuit(
                        f"{node.op.n_qubits}-qubit channel applied to "
                        f"{len(node.qubits)} qubits")
                transitions.append(kraus_edge(pre, post, node.op.kraus,
                                              node.qubits, n_qubits))
            return [post]
        if isinstance(node, Seq):
            terminals = []
            for mid in emit(node.first, pre):
                terminals.extend(emit(node.second, mid))
            return terminals
        if isinstance(node, Cond):
            _check_targets(node.qubits, n_qubits, "measurement")
            if len(node.qubits) != node.measurement.n_qubits:
                raise MalformedCircuit(
                    f"{node.measurement.n_qubits}-qubit measurement on "
                    f"{len(node.qubits)} qubits")
            outcomes = sorted(node.measurement.branches)
            if sorted(node.branches) != outcomes:
                raise MalformedCircuit(
                    f"branches {sorted(node.branches)} do not cover "
                    f"outcomes {outcomes}")
            terminals = []
            for outcome in outcomes:
                post = fresh()
                transitions.append(measure_edge(pre, post, node.qubits,
                                                outcome, n_qubits))
                terminals.extend(emit(node.branches[outcome], post))
            return terminals
        raise MalformedCircuit(f"not a circuit node: {node!r}")

    start = fresh()
    for terminal in emit(ir, start):
        transitions.append(gate_edge(terminal, terminal, "I", (1,), n_qubits))
    return QuantumTransitionSystem(n_qubits, tuple(locations), start,
                                   tuple(transitions))


def build_sequential(combinational: ch.SuperOperator, state_qubits: int,
                     memory_qubits: int) -> QuantumTransitionSystem:
    """Synchronous sequential circuit: one location whose self-loop applies
    the combinational channel every clock cycle, the memory wires being fed
    back."""
    n = state_qubits + memory_qubits
    if combinational.n_qubits != n:
        raise DimensionMismatch(
            f"combinational part has {combinational.n_qubits} qubits, "
            f"expected {state_qubits}+{memory_qubits}")
    loop = kraus_edge("l0", "l0", combinational.kraus,
                      tuple(range(1, n + 1)), n)
    return QuantumTransitionSystem(n, ("l0",), "l0", (loop,))


# --- the teleportation fixture --------------------------------------------

def teleportation_qts() -> QuantumTransitionSystem:
    """The three-qubit teleportation protocol as a transition system:
    entangle, Bell-measure qubits 2 then 1, and apply the X/Z corrections
    on qubit 3; terminal locations loop on the identity."""
    n = 3
    e = []
    e.append(gate_edge("l0", "l1", "CX", (1, 2), n))
    e.append(gate_edge("l1", "l2", "H", (1,), n))
    e.append(measure_edge("l2", "l3", (2,), 0, n))
    e.append(measure_edge("l2", "l4", (2,), 1, n))
    e.append(gate_edge("l3", "l5", "I", (3,), n))
    e.append(gate_edge("l4", "l6", "X", (3,), n))
    e.append(measure_edge("l5", "l7", (1,), 0, n))
    e.append(measure_edge("l5", "l8", (1,), 1, n))
    e.append(measure_edge("l6", "l9", (1,), 0, n))
    e.append(measure_edge("l6", "l10", (1,), 1, n))
    e.append(gate_edge("l7", "l11", "I", (3,), n))
    e.append(gate_edge("l8", "l12", "Z", (3,), n))
    e.append(gate_edge("l9", "l13", "I", (3,), n))
    e.append(gate_edge("l10", "l14", "Z", (3,), n))
    for terminal in ("l11", "l12", "l13", "l14"):
        e.append(gate_edge(terminal, terminal, "I", (1,), n))
    locations = tuple(f"l{i}" for i in range(15))
    return QuantumTransitionSystem(n, locations, "l0", tuple(e))


def teleportation_circuit() -> object:
    """The same protocol as a dynamic circuit (compiles to a system
    isomorphic to `teleportation_qts`)."""
    m1 = ch.computational_measurement(1)
    fix_x = Cond(m1, (2,), {0: Gate((3,), name="I"), 1: Gate((3,), name="X")})
    fix_z = Cond(m1, (1,), {0: Gate((3,), name="I"), 1: Gate((3,), name="Z")})
    return Seq(Seq(Gate((1, 2), name="CX"), Gate((1,), name="H")),
               Seq(fix_x, fix_z))


def teleportation_input(psi) -> np.ndarray:
    """Initial density matrix: `psi` on qubit 1, qubits 2-3 sharing the
    maximally entangled pair."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != 2:
        raise DimensionMismatch("teleportation input must be a single qubit")
    bell = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    full = np.kron(bell, psi)
    return np.outer(full, full.conj())


# --- textual model format --------------------------------------------------

def parse_model(text: str) -> QuantumTransitionSystem:
    """Parse the textual model format; all system invariants are validated
    and violations carry source positions."""
    ts = TokenStream(tokenize(text, _PUNCTS))

    ts.expect_keyword("qubits")
    n_tok = ts.peek()
    n_qubits = ts.expect_int("qubit count")
    if n_qubits < 1:
        raise ParseError("qubit count must be positive", n_tok.line,
                         n_tok.column)

    ts.expect_keyword("locations")
    locations = []
    while ts.peek().kind == IDENT and not ts.at_keyword("initial"):
        tok = ts.next()
        if tok.text in _KEYWORDS:
            raise ParseError(f"{tok.text!r} is a reserved word", tok.line,
                             tok.column)
        locations.append(tok.text)
    if not locations:
        ts.error("expected at least one location")

    ts.expect_keyword("initial")
    initial_tok = ts.expect_ident("initial location")

    ts.expect_keyword("transitions")
    transitions = []
    positions = {}
    while ts.peek().kind != EOF:
        pre_tok = ts.peek()
        transitions.append(_parse_transition(ts, n_qubits, set(locations)))
        positions.setdefault(transitions[-1].pre, (pre_tok.line,
                                                   pre_tok.column))

    try:
        return QuantumTransitionSystem(n_qubits, tuple(locations),
                                       initial_tok.text, tuple(transitions))
    except NormalisationViolation as exc:
        line, col = positions.get(exc.location, (1, 1))
        raise NormalisationViolation(
            f"location {exc.location!r}: outgoing operators have "
            f"normalisation defect {exc.defect:.3e}", location=exc.location,
            defect=exc.defect, line=line, column=col) from None


def _parse_targets(ts: TokenStream, n_qubits: int) -> tuple:
    ts.expect_punct("[")
    targets = [ts.expect_int("qubit id")]
    while ts.accept_punct(","):
        targets.append(ts.expect_int("qubit id"))
    close = ts.peek()
    ts.expect_punct("]")
    for q in targets:
        if not 1 <= q <= n_qubits:
            raise ParseError(f"qubit {q} outside 1..{n_qubits}", close.line,
                             close.column)
    if len(set(targets)) != len(targets):
        raise ParseError(f"repeated qubit in {targets}", close.line,
                         close.column)
    return tuple(targets)


def _parse_matrix(ts: TokenStream):
    ts.expect_punct("[")
    rows = []
    while True:
        ts.expect_punct("[")
        row = [parse_complex(ts)]
        while ts.accept_punct(","):
            row.append(parse_complex(ts))
        ts.expect_punct("]")
        rows.append(tuple(row))
        if not ts.accept_punct(","):
            break
    ts.expect_punct("]")
    width = len(rows[0])
    if any(len(r) != width for r in rows) or len(rows) != width:
        ts.error("matrix must be square")
    return tuple(rows)


def _parse_transition(ts: TokenStream, n_qubits: int, known) -> Transition:
    pre_tok = ts.expect_ident("location")
    if pre_tok.text not in known:
        raise ParseError(f"undeclared location {pre_tok.text!r}",
                         pre_tok.line, pre_tok.column)
    ts.expect_punct("->")
    post_tok = ts.expect_ident("location")
    if post_tok.text not in known:
        raise ParseError(f"undeclared location {post_tok.text!r}",
                         post_tok.line, post_tok.column)
    ts.expect_punct(":")
    kind = ts.peek()
    if ts.at_keyword("gate"):
        ts.next()
        name_tok = ts.expect_ident("gate name")
        try:
            wires = ch.gate_wire_count(name_tok.text)
        except UnknownGate:
            raise ParseError(f"unknown gate {name_tok.text!r}",
                             name_tok.line, name_tok.column) from None
        params = []
        if ts.accept_punct("("):
            while True:
                sign = -1.0 if ts.accept_punct("-") else 1.0
                tok = ts.peek()
                if tok.kind != NUMBER:
                    ts.error("expected a gate parameter")
                ts.next()
                params.append(sign * float(tok.value))
                if not ts.accept_punct(","):
                    break
            ts.expect_punct(")")
        targets = _parse_targets(ts, n_qubits)
        if len(targets) != wires:
            raise ParseError(
                f"gate {name_tok.text} acts on {wires} qubit(s), "
                f"got {len(targets)}", name_tok.line, name_tok.column)
        return gate_edge(pre_tok.text, post_tok.text, name_tok.text.upper(),
                         targets, n_qubits, tuple(params))
    if ts.at_keyword("kraus"):
        open_tok = ts.next()
        ts.expect_punct("{")
        mats = [_parse_matrix(ts)]
        while ts.accept_punct(";"):
            mats.append(_parse_matrix(ts))
        ts.expect_punct("}")
        targets = _parse_targets(ts, n_qubits)
        dim = 2 ** len(targets)
        for m in mats:
            if len(m) != dim:
                raise ParseError(
                    f"kraus matrix is {len(m)}x{len(m)}, expected "
                    f"{dim}x{dim} for {len(targets)} qubit(s)",
                    open_tok.line, open_tok.column)
        try:
            return kraus_edge(pre_tok.text, post_tok.text,
                              [np.array(m) for m in mats], targets, n_qubits)
        except DimensionMismatch as exc:
            raise NormalisationViolation(str(exc), location=pre_tok.text,
                                         line=open_tok.line,
                                         column=open_tok.column)
    if ts.at_keyword("measure"):
        ts.next()
        name_tok = ts.expect_ident("measurement name")
        targets = _parse_targets(ts, n_qubits)
        ts.expect_punct("=")
        out_tok = ts.peek()
        outcome = ts.expect_int("outcome")
        if not 0 <= outcome < 2 ** len(targets):
            raise ParseError(
                f"outcome {outcome} outside 0..{2 ** len(targets) - 1}",
                out_tok.line, out_tok.column)
        return measure_edge(pre_tok.text, post_tok.text, targets, outcome,
                            n_qubits, name_tok.text)
    raise ParseError(f"expected gate, kraus, or measure, got {kind.text!r}",
                     kind.line, kind.column)


def _format_matrix(rows) -> str:
    return "[" + ", ".join(
        "[" + ", ".join(format_complex(x) for x in row) + "]"
        for row in rows) + "]"


def serialize_model(sys: QuantumTransitionSystem) -> str:
    """Canonical text for a system; parse(serialize(s)) equals s."""
    lines = [f"qubits {sys.n_qubits}", ""]
    lines.append("locations " + " ".join(sys.locations))
    lines.append(f"initial {sys.initial}")
    lines.append("")
    lines.append("transitions")
    for t in sys.transitions:
        spec = t.spec
        if isinstance(spec, GateSpec):
            params = ""
            if spec.params:
                params = "(" + ", ".join(repr(float(p))
                                         for p in spec.params) + ")"
            op = f"gate {spec.name}{params}" \
                 f"[{', '.join(str(q) for q in spec.targets)}]"
        elif isinstance(spec, MeasureSpec):
            op = f"measure {spec.name}" \
                 f"[{', '.join(str(q) for q in spec.targets)}] = {spec.outcome}"
        else:
            if isinstance(spec, KrausSpec):
                mats, targets = spec.matrices, spec.targets
            else:
                mats = tuple(tuple(tuple(x for x in row) for row in k)
                             for k in t.op.kraus)
                targets = tuple(range(1, sys.n_qubits + 1))
            body = " ; ".join(_format_matrix(m) for m in mats)
            op = f"kraus {{ {body} }}[{', '.join(str(q) for q in targets)}]"
        lines.append(f"  {t.pre} -> {t.post} : {op}")
    return "\n".join(lines) + "\n"
