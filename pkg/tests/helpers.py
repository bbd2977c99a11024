"""Shared random generators and small numeric oracles for the test suite."""

import numpy as np

from qmc import channel as ch
from qmc import linalg as la
from qmc import logic as lg
from qmc import qts


def random_unit_vector(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_psd(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return g @ g.conj().T


def random_density(rng, d, rank=None):
    rho = random_psd(rng, d, rank)
    return rho / np.trace(rho).real


def random_subspace(rng, d, k):
    if k == 0:
        return la.Subspace.zero(d)
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    return la.Subspace(la.orth_columns(g))


def random_channel(rng, n_qubits, n_kraus=3):
    """Random trace-preserving channel: Gaussian operators renormalised by
    the inverse square root of their squared sum."""
    d = 2 ** n_qubits
    gs = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
          for _ in range(n_kraus)]
    s = sum(g.conj().T @ g for g in gs)
    w, v = np.linalg.eigh(s)
    s_inv_half = v @ np.diag(w ** -0.5) @ v.conj().T
    return ch.SuperOperator.from_kraus([g @ s_inv_half for g in gs])


def random_unitary(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def block_unitary_channel(rng, n_qubits, block):
    """Unitary channel that is block diagonal over the first `block` basis
    vectors, so spans of leading basis states stay put under iteration."""
    d = 2 ** n_qubits
    u = np.zeros((d, d), dtype=complex)
    u[:block, :block] = random_unitary(rng, block)
    u[block:, block:] = random_unitary(rng, d - block)
    return ch.SuperOperator.unitary(u)


def trace_distance(a, b):
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def dense_oracle_state(gates, psi):
    """Apply a list of full-register unitaries in order to a state vector."""
    out = np.asarray(psi, dtype=complex)
    for u in gates:
        out = u @ out
    return out


def random_loop_system(rng, n_qubits):
    """Single-location system looping on a random trace-preserving channel."""
    e = random_channel(rng, n_qubits, n_kraus=int(rng.integers(1, 4)))
    return qts.build_sequential(e, n_qubits, 0)


_CLOSING_GATES_1Q = ("I", "X", "Z", "H", "S")


def random_closing_qts(rng, n_qubits, n_locations):
    """Random system built from gates of finite order, measurement fan-outs,
    and flip noises: these tend to produce configuration graphs that close
    quickly, which the brute-force comparison tests need."""
    locations = [f"l{i}" for i in range(n_locations)]
    transitions = []
    for i, loc in enumerate(locations):
        kind = rng.choice(["gate", "measure", "noise"])
        if kind == "gate":
            post = locations[int(rng.integers(0, n_locations))]
            if n_qubits == 2 and rng.random() < 0.3:
                wires = (1, 2) if rng.random() < 0.5 else (2, 1)
                transitions.append(qts.gate_edge(loc, post, "CX", wires,
                                                 n_qubits))
            else:
                name = str(rng.choice(_CLOSING_GATES_1Q))
                q = int(rng.integers(1, n_qubits + 1))
                transitions.append(qts.gate_edge(loc, post, name, (q,),
                                                 n_qubits))
        elif kind == "measure":
            q = int(rng.integers(1, n_qubits + 1))
            for outcome in (0, 1):
                post = locations[int(rng.integers(0, n_locations))]
                transitions.append(qts.measure_edge(loc, post, (q,), outcome,
                                                    n_qubits))
        else:
            post = locations[int(rng.integers(0, n_locations))]
            p = float(rng.choice([0.25, 0.5, 0.75]))
            noise = ch.noise_library(str(rng.choice(["bit_flip",
                                                     "phase_flip"])), p)
            q = int(rng.integers(1, n_qubits + 1))
            transitions.append(qts.kraus_edge(loc, post, noise.kraus, (q,),
                                              n_qubits))
    return qts.QuantumTransitionSystem(n_qubits, tuple(locations),
                                       locations[0], tuple(transitions))


def random_prop(rng, atoms, depth=2):
    if depth <= 0 or rng.random() < 0.45:
        roll = rng.random()
        if roll < 0.7:
            return lg.Atom(str(rng.choice(atoms)))
        return lg.PTrue() if roll < 0.85 else lg.PFalse()
    kind = rng.choice(["not", "and", "or"])
    if kind == "not":
        return lg.NotQ(random_prop(rng, atoms, depth - 1))
    left = random_prop(rng, atoms, depth - 1)
    right = random_prop(rng, atoms, depth - 1)
    return lg.AndQ(left, right) if kind == "and" else lg.OrQ(left, right)


def random_state_formula(rng, atoms, depth):
    """Random sugar-free state formula of nesting depth at most `depth`."""
    if depth <= 0 or rng.random() < 0.25:
        return lg.Prop(random_prop(rng, atoms, 1))
    kind = rng.choice(["not", "and", "ex", "ax", "eu", "au"])
    if kind == "not":
        return lg.Not(random_state_formula(rng, atoms, depth - 1))
    if kind == "and":
        return lg.And(random_state_formula(rng, atoms, depth - 1),
                      random_state_formula(rng, atoms, depth - 1))
    if kind in ("ex", "ax"):
        sub = lg.Next(random_state_formula(rng, atoms, depth - 1))
        return lg.Exists(sub) if kind == "ex" else lg.Forall(sub)
    sub = lg.Until(random_state_formula(rng, atoms, depth - 1),
                   random_state_formula(rng, atoms, depth - 1))
    return lg.Exists(sub) if kind == "eu" else lg.Forall(sub)


_LEAF_GATES = ("H", "X", "Y", "Z", "S", "T")


def random_circuit(rng, n_qubits, depth):
    """Random dynamic circuit over gates, flip noises, and single-qubit
    measurements with both outcome branches."""
    if depth <= 0 or rng.random() < 0.3:
        q = int(rng.integers(1, n_qubits + 1))
        roll = rng.random()
        if roll < 0.45:
            return qts.Gate((q,), name=str(rng.choice(_LEAF_GATES)))
        if roll < 0.6 and n_qubits >= 2:
            wires = list(rng.choice(range(1, n_qubits + 1), size=2,
                                    replace=False))
            return qts.Gate(tuple(int(w) for w in wires), name="CX")
        noise = ch.noise_library(
            str(rng.choice(["bit_flip", "phase_flip", "bit_phase_flip"])),
            float(rng.random()))
        return qts.Gate((q,), op=noise)
    if rng.random() < 0.6:
        return qts.Seq(random_circuit(rng, n_qubits, depth - 1),
                       random_circuit(rng, n_qubits, depth - 1))
    q = int(rng.integers(1, n_qubits + 1))
    return qts.Cond(ch.computational_measurement(1), (q,), {
        0: random_circuit(rng, n_qubits, depth - 1),
        1: random_circuit(rng, n_qubits, depth - 1),
    })


def random_closing_state(rng, n_qubits):
    """Initial states likely to produce small, closing orbits."""
    d = 2 ** n_qubits
    kind = rng.choice(["basis", "hadamard", "random"])
    if kind == "basis":
        v = np.zeros(d, dtype=complex)
        v[int(rng.integers(0, d))] = 1.0
    elif kind == "hadamard":
        h = ch.HADAMARD
        full = h
        for _ in range(n_qubits - 1):
            full = np.kron(full, h)
        v = full[:, int(rng.integers(0, d))]
    else:
        v = random_unit_vector(rng, d)
    return np.outer(v, v.conj())
