"""Reachability analysis of quantum Markov chains.

Three interchangeable routes compute the subspace reachable from a state
under iterated channel application:

* the closed form: support of the sum of the first d channel powers,
* the vectorized route: accumulate powers of the channel's matrix
  representation applied to vec(rho) and read the answer off a Schmidt
  decomposition (contracted as a tensor network for 3+ qubits, dense
  matrix-vector products below - see docs/reach_benchmarks.md for the
  measured crossover),
* a fixed-point iteration joining images until the dimension stabilises.

They must agree as subspaces; the test suite cross-checks all three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel as ch
from . import linalg as la
from . import tensor as tn
from .errors import DimensionMismatch

# dense matrix powers beat per-step network contraction below this size
TENSOR_MIN_QUBITS = 3


@dataclass(frozen=True, eq=False)
class QuantumMarkovChain:
    """A state space of dimension d evolving under one trace-preserving
    channel per step."""

    dim: int
    channel: ch.SuperOperator

    def __post_init__(self):
        if self.channel.dim != self.dim:
            raise DimensionMismatch(
                f"channel dim {self.channel.dim} vs chain dim {self.dim}")
        if self.channel.trace_class is not ch.TraceClass.PRESERVING:
            raise DimensionMismatch(
                "a Markov chain channel must be trace-preserving")


def image(e: ch.SuperOperator, x: la.Subspace) -> la.Subspace:
    """Image of a subspace under a channel: the join over its pure states
    of the supports of their outputs, computed as the support of the
    channel applied to the subspace projector."""
    if x.ambient_dim != e.dim:
        raise DimensionMismatch(
            f"subspace ambient {x.ambient_dim} vs channel dim {e.dim}")
    if x.dim == 0:
        return x
    return la.support(ch.apply(e, la.projector(x)))


def adjacent(c: QuantumMarkovChain, rho: np.ndarray,
             sigma: np.ndarray) -> bool:
    """Whether sigma can follow rho in one step: supp(sigma) inside the
    image of supp(rho)."""
    return la.contains(image(c.channel, la.support(rho)), la.support(sigma))


def _check_state(c: QuantumMarkovChain, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.dim, c.dim):
        raise DimensionMismatch(f"state shape {rho.shape} vs dim {c.dim}")
    if float(np.trace(rho).real) <= 0.0:
        raise DimensionMismatch("state must have positive trace")
    return rho


def reachable_subspace(c: QuantumMarkovChain, rho: np.ndarray,
                       rtol: float = la.TOL_EIG) -> la.Subspace:
    """Closed form: support of sum_{i<d} E^i(rho).  The running sum is
    renormalised by its trace each round, which leaves the support alone."""
    rho = _check_state(c, rho)
    acc = rho / float(np.trace(rho).real)
    cur = acc
    for _ in range(c.dim - 1):
        cur = ch.apply(c.channel, cur)
        acc = acc + cur
        tr = float(np.trace(acc).real)
        acc = acc / tr
        cur = cur / tr
    return la.support(acc, rtol)


def _vec_names(n: int, tag: str):
    return tuple(f"{tag}{i}" for i in range(2 * n))


def _step_by_network(m_tensor_data, phi: np.ndarray, n: int) -> np.ndarray:
    """One application of the channel matrix via a two-node network."""
    ins = _vec_names(n, "a")
    outs = _vec_names(n, "b")
    m_t = tn.tensor_from_matrix(m_tensor_data, outs, ins)
    phi_t = tn.tensor_from_vector(phi, ins)
    net = tn.TensorNetwork((m_t, phi_t), outs)
    return tn.contract_network(net).to_vector(outs)


def reachable_subspace_vectorized(c: QuantumMarkovChain, rho: np.ndarray,
                                  rtol: float = la.TOL_EIG) -> la.Subspace:
    """Vectorized route: Phi = sum_{i<d} M^i vec(rho) lives on a doubled
    space; the left Schmidt vectors with non-negligible coefficient span the
    reachable subspace."""
    rho = _check_state(c, rho)
    n = c.channel.n_qubits
    d = c.dim
    m = ch.matrix_rep(c.channel)
    # vec(rho) = (rho (x) I)|Psi> under the package vectorization convention
    phi_step = rho.reshape(-1).astype(complex)
    acc = phi_step.copy()
    use_network = n >= TENSOR_MIN_QUBITS
    for _ in range(d - 1):
        if use_network:
            phi_step = _step_by_network(m, phi_step, n)
        else:
            phi_step = m @ phi_step
        acc = acc + phi_step
        scale = np.linalg.norm(acc)
        acc = acc / scale
        phi_step = phi_step / scale
    terms = la.schmidt(acc, d, rtol)
    if not terms:
        return la.Subspace.zero(d)
    return la.Subspace(np.column_stack([left for _, left, _ in terms]))


def reachable_fixpoint_oracle(c: QuantumMarkovChain, rho: np.ndarray,
                              rtol: float = la.TOL_EIG) -> la.Subspace:
    """Fixed-point route: start from supp(rho) and join in the channel
    image until the dimension stops growing (at most d rounds)."""
    rho = _check_state(c, rho)
    x = la.support(rho, rtol)
    for _ in range(c.dim):
        grown = la.join([x, image(c.channel, x)])
        if grown.dim == x.dim:
            return x
        x = grown
    return x
