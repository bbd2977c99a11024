"""Super-operators in Kraus form, their matrix representation, composition,
qubit embedding, measurements, and the standard gate/noise constants.

Vectorization convention (fixed so that the maximally-entangled-state
identity holds exactly): vec(A) is the row-major flattening, the reference
state is Psi = vec(I), and the matrix representation of a channel with Kraus
operators {E_i} is

    M = sum_i kron(E_i, conj(E_i)),

which satisfies M vec(A) = vec(sum_i E_i A E_i^dagger) entrywise.  Under
this convention the matrix of the sequential composite "e then f" is
M_f @ M_e exactly.  The matrix of a parallel composite is kron(M_f, M_e)
only up to an interleaving of the doubled-space index groups; the exact
permuted identity is exercised in the test suite, and the observable
contract is that parallel application factorizes:
apply(e || f, rho_a (x) rho_b) = apply(e, rho_a) (x) apply(f, rho_b).

Register layout is little-endian throughout (qubit 1 = bit weight 1).
Multi-qubit gate constants from `gate_matrix` follow the textbook layout
where the FIRST wire is the most significant bit (so CNOT with control on
wire 1 is block-diag(I, X)); `embed` works in register terms, and the
circuit builders in `qts` reverse the wire list when lifting a textbook
constant onto register qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (BadParameter, DimensionMismatch, InvalidDensityMatrix,
                     RepeatedQubit, TargetOutOfRange, UnknownGate)
from .linalg import TOL_HERM, TOL_NORM, is_hermitian

TOL_PROB = 1e-12  # branches below this probability are dropped


class TraceClass(Enum):
    PRESERVING = "preserving"
    REDUCING = "reducing"


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """A quantum channel sum_i E_i rho E_i^dagger on n qubits.

    Trace-preserving channels satisfy sum E_i^dagger E_i = I; trace-reducing
    ones (measurement branches) only require the defect I - sum E'E to be
    positive semidefinite."""

    n_qubits: int
    kraus: tuple
    trace_class: TraceClass = TraceClass.PRESERVING
    _matrix_rep: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionMismatch("a channel needs at least one qubit")
        d = 2 ** self.n_qubits
        mats = tuple(_frozen(k) for k in self.kraus)
        if not mats:
            raise DimensionMismatch("a channel needs at least one Kraus term")
        for k in mats:
            if k.shape != (d, d):
                raise DimensionMismatch(
                    f"Kraus operator shape {k.shape}, expected {(d, d)}")
        total = sum(k.conj().T @ k for k in mats)
        defect = np.eye(d) - total
        if self.trace_class is TraceClass.PRESERVING:
            if np.abs(defect).max() > TOL_NORM:
                raise DimensionMismatch(
                    "Kraus operators do not sum to a trace-preserving map "
                    f"(defect {np.abs(defect).max():.2e})")
        else:
            if np.linalg.eigvalsh((defect + defect.conj().T) / 2).min() < -TOL_NORM:
                raise DimensionMismatch(
                    "trace-reducing channel exceeds the identity")
        object.__setattr__(self, "kraus", mats)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @classmethod
    def from_kraus(cls, mats, trace_class=None) -> "SuperOperator":
        mats = [np.asarray(m, dtype=complex) for m in mats]
        n = int(round(math.log2(mats[0].shape[0])))
        if trace_class is None:
            d = mats[0].shape[0]
            defect = np.eye(d) - sum(m.conj().T @ m for m in mats)
            close = np.abs(defect).max() <= TOL_NORM
            trace_class = TraceClass.PRESERVING if close else TraceClass.REDUCING
        return cls(n, tuple(mats), trace_class)

    @classmethod
    def unitary(cls, u) -> "SuperOperator":
        u = np.asarray(u, dtype=complex)
        n = int(round(math.log2(u.shape[0])))
        return cls(n, (u,), TraceClass.PRESERVING)

    @classmethod
    def identity(cls, n_qubits: int) -> "SuperOperator":
        return cls(n_qubits, (np.eye(2 ** n_qubits),), TraceClass.PRESERVING)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)


def apply(e: SuperOperator, rho: np.ndarray) -> np.ndarray:
    """Channel application sum_i E_i rho E_i^dagger."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (e.dim, e.dim):
        raise DimensionMismatch(
            f"state shape {rho.shape} vs channel dim {e.dim}")
    out = np.zeros_like(rho)
    for k in e.kraus:
        out += k @ rho @ k.conj().T
    return out


def matrix_rep(e: SuperOperator) -> np.ndarray:
    """The 4^n x 4^n matrix sum_i kron(E_i, conj(E_i)); cached per channel."""
    if not e._matrix_rep:
        m = sum(np.kron(k, k.conj()) for k in e.kraus)
        m.setflags(write=False)
        e._matrix_rep.append(m)
    return e._matrix_rep[0]


def compose_sequential(e: SuperOperator, f: SuperOperator) -> SuperOperator:
    """The channel "e then f"; Kraus set is all products F_j E_i."""
    if e.n_qubits != f.n_qubits:
        raise DimensionMismatch(
            f"channel sizes differ: {e.n_qubits} vs {f.n_qubits} qubits")
    kraus = tuple(fk @ ek for fk in f.kraus for ek in e.kraus)
    preserving = (e.trace_class is TraceClass.PRESERVING
                  and f.trace_class is TraceClass.PRESERVING)
    tc = TraceClass.PRESERVING if preserving else TraceClass.REDUCING
    return SuperOperator(e.n_qubits, kraus, tc)


def compose_parallel(e: SuperOperator, f: SuperOperator) -> SuperOperator:
    """Independent channels side by side: `e` on register qubits 1..n_e,
    `f` on the qubits above them (so f's Kraus factor is the most
    significant in the Kronecker product)."""
    kraus = tuple(np.kron(fk, ek) for fk in f.kraus for ek in e.kraus)
    preserving = (e.trace_class is TraceClass.PRESERVING
                  and f.trace_class is TraceClass.PRESERVING)
    tc = TraceClass.PRESERVING if preserving else TraceClass.REDUCING
    return SuperOperator(e.n_qubits + f.n_qubits, kraus, tc)


def expand_operator(op: np.ndarray, targets, total: int) -> np.ndarray:
    """Lift a k-qubit operator (little-endian over its own wires) to `total`
    register qubits, wire j acting on qubit targets[j]."""
    op = np.asarray(op, dtype=complex)
    targets = list(targets)
    k = len(targets)
    if op.shape != (2 ** k, 2 ** k):
        raise DimensionMismatch(
            f"operator shape {op.shape} does not fit {k} target qubits")
    if len(set(targets)) != k:
        raise RepeatedQubit(f"repeated target in {targets}")
    for t in targets:
        if not 1 <= t <= total:
            raise TargetOutOfRange(f"qubit {t} outside 1..{total}")
    rest = [q for q in range(1, total + 1) if q not in targets]
    dest = targets + rest  # wire j+1 of the padded operator -> qubit dest[j]
    full = np.kron(np.eye(2 ** (total - k)), op)
    fwd = np.zeros(2 ** total, dtype=np.intp)
    for j, q in enumerate(dest):
        bit = (np.arange(2 ** total) >> j) & 1
        fwd |= bit << (q - 1)
    out = np.zeros_like(full)
    out[np.ix_(fwd, fwd)] = full
    return out


def embed(e: SuperOperator, targets, total: int) -> SuperOperator:
    """Channel acting as `e` on the listed register qubits and as the
    identity elsewhere."""
    targets = list(targets)
    if len(targets) != e.n_qubits:
        raise DimensionMismatch(
            f"{e.n_qubits}-qubit channel given {len(targets)} targets")
    kraus = tuple(expand_operator(k, targets, total) for k in e.kraus)
    return SuperOperator(total, kraus, e.trace_class)


@dataclass(frozen=True, eq=False)
class Measurement:
    """A family {M_m} with sum_m M_m^dagger M_m = I, keyed by outcome."""

    n_qubits: int
    branches: dict

    def __post_init__(self):
        d = 2 ** self.n_qubits
        branches = {m: _frozen(mat) for m, mat in self.branches.items()}
        if not branches:
            raise DimensionMismatch("a measurement needs at least one branch")
        total = np.zeros((d, d), dtype=complex)
        for m, mat in branches.items():
            if mat.shape != (d, d):
                raise DimensionMismatch(
                    f"branch {m}: shape {mat.shape}, expected {(d, d)}")
            total += mat.conj().T @ mat
        if np.abs(total - np.eye(d)).max() > TOL_NORM:
            raise DimensionMismatch(
                "measurement operators do not sum to the identity "
                f"(defect {np.abs(total - np.eye(d)).max():.2e})")
        object.__setattr__(self, "branches", dict(branches))

    def branch_channel(self, outcome) -> SuperOperator:
        """The trace-reducing channel {M_m} of one outcome."""
        return SuperOperator(self.n_qubits, (self.branches[outcome],),
                             TraceClass.REDUCING)


def computational_measurement(n_qubits: int) -> Measurement:
    """Projective measurement in the computational basis; outcomes are the
    little-endian integers of the measured bitstrings."""
    d = 2 ** n_qubits
    branches = {}
    for m in range(d):
        p = np.zeros((d, d), dtype=complex)
        p[m, m] = 1.0
        branches[m] = p
    return Measurement(n_qubits, branches)


def measure(m: Measurement, rho: np.ndarray):
    """All outcomes with probability above TOL_PROB, as
    (outcome, probability, normalised post state) triples."""
    rho = np.asarray(rho, dtype=complex)
    d = 2 ** m.n_qubits
    if rho.shape != (d, d):
        raise DimensionMismatch(f"state shape {rho.shape} vs dim {d}")
    if not is_hermitian(rho, TOL_HERM):
        raise InvalidDensityMatrix("state is not Hermitian")
    results = []
    for outcome in sorted(m.branches):
        mat = m.branches[outcome]
        post = mat @ rho @ mat.conj().T
        p = float(np.trace(post).real)
        if p > TOL_PROB:
            results.append((outcome, p, post / p))
    return results


def entangled_reference(d: int) -> np.ndarray:
    """The unnormalised maximally entangled vector sum_k |kk> on C^d (x) C^d."""
    return np.eye(d).reshape(-1).astype(complex)


def vectorize_check(e: SuperOperator, a: np.ndarray):
    """Both sides of the vectorization identity, evaluated literally:
    lhs = (E(A) (x) I) Psi and rhs = M (A (x) I) Psi.  They agree within
    1e-10 for any channel and matrix of matching dimension."""
    a = np.asarray(a, dtype=complex)
    d = e.dim
    if a.shape != (d, d):
        raise DimensionMismatch(f"matrix shape {a.shape} vs channel dim {d}")
    psi = entangled_reference(d)
    lhs = np.kron(apply(e, a), np.eye(d)) @ psi
    rhs = matrix_rep(e) @ (np.kron(a, np.eye(d)) @ psi)
    return lhs, rhs


# --- standard gates and noises ------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)

_FIXED_GATES = {
    "I": PAULI_I,
    "ID": PAULI_I,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
    "S": np.diag([1, 1j]).astype(complex),
    "T": np.diag([1, np.exp(1j * math.pi / 4)]),
    # textbook layout: first wire (control) is the most significant bit
    "CX": np.block([[np.eye(2), np.zeros((2, 2))],
                    [np.zeros((2, 2)), PAULI_X]]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0],
                      [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_FIXED_GATES["CNOT"] = _FIXED_GATES["CX"]

_ROTATIONS = {
    "RX": PAULI_X,
    "RY": PAULI_Y,
    "RZ": PAULI_Z,
}


def gate_matrix(name: str, *params: float) -> np.ndarray:
    """Unitary constant for a named gate, in the textbook layout (first
    wire = most significant bit).  Rotations RX/RY/RZ take one angle."""
    key = name.upper()
    if key in _FIXED_GATES:
        if params:
            raise BadParameter(f"gate {name} takes no parameters")
        return _FIXED_GATES[key].copy()
    if key in _ROTATIONS:
        if len(params) != 1:
            raise BadParameter(f"gate {name} takes exactly one angle")
        theta = float(params[0])
        pauli = _ROTATIONS[key]
        return (math.cos(theta / 2) * np.eye(2)
                - 1j * math.sin(theta / 2) * pauli)
    raise UnknownGate(f"unknown gate {name!r}")


def gate_wire_count(name: str) -> int:
    key = name.upper()
    if key in _FIXED_GATES:
        return int(round(math.log2(_FIXED_GATES[key].shape[0])))
    if key in _ROTATIONS:
        return 1
    raise UnknownGate(f"unknown gate {name!r}")


def gate_library(name: str, *params: float) -> SuperOperator:
    """The unitary channel of a named gate constant."""
    return SuperOperator.unitary(gate_matrix(name, *params))


def gate_on_qubits(name: str, wires, total: int, *params: float) -> SuperOperator:
    """Named gate applied to register qubits, first listed wire playing the
    gate's first (textbook most-significant) role.  The wire list is
    reversed when embedding because registers are little-endian."""
    u = gate_matrix(name, *params)
    return embed(SuperOperator.unitary(u), list(reversed(list(wires))), total)


def noise_library(name: str, p: float) -> SuperOperator:
    """Single-qubit flip noises: with probability 1-p the Pauli operator is
    applied, so the state is left alone with probability p."""
    if not 0.0 <= p <= 1.0:
        raise BadParameter(f"noise probability {p} outside [0, 1]")
    paulis = {
        "bit_flip": PAULI_X,
        "phase_flip": PAULI_Z,
        "bit_phase_flip": PAULI_Y,
    }
    key = name.lower().replace("-", "_").replace(" ", "_")
    if key not in paulis:
        raise UnknownGate(f"unknown noise {name!r}")
    kraus = []
    if p > 0.0:
        kraus.append(math.sqrt(p) * np.eye(2))
    if p < 1.0:
        kraus.append(math.sqrt(1.0 - p) * paulis[key])
    return SuperOperator(1, tuple(kraus), TraceClass.PRESERVING)


def partial_trace(rho: np.ndarray, keep, n_qubits: int) -> np.ndarray:
    """Reduced density matrix over the kept qubits (ascending order becomes
    the new little-endian register)."""
    keep = sorted(keep)
    rho = np.asarray(rho, dtype=complex)
    d = 2 ** n_qubits
    if rho.shape != (d, d):
        raise DimensionMismatch(f"state shape {rho.shape} vs dim {d}")
    for q in keep:
        if not 1 <= q <= n_qubits:
            raise TargetOutOfRange(f"qubit {q} outside 1..{n_qubits}")
    # axes: row bits little-endian, then column bits little-endian;
    # tracing a qubit identifies its row axis with its column axis
    t = rho.reshape((2,) * (2 * n_qubits), order="F")
    label = {}
    counter = 0
    for q in range(n_qubits):
        label[q] = counter
        counter += 1
    for q in range(n_qubits):
        if q + 1 in keep:
            label[n_qubits + q] = counter
            counter += 1
        else:
            label[n_qubits + q] = label[q]
    lhs = "".join(_SYM[label[ax]] for ax in range(2 * n_qubits))
    out = "".join(_SYM[label[q - 1]] for q in keep) + \
          "".join(_SYM[label[n_qubits + q - 1]] for q in keep)
    reduced = np.einsum(lhs + "->" + out, t)
    k = len(keep)
    return reduced.reshape((2 ** k, 2 ** k), order="F")


_SYM = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
