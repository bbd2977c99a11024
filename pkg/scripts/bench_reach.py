"""Benchmark the two vectorized-reachability backends.

The vectorized route repeatedly applies the channel's matrix representation
to a doubled-space vector.  That step can run as a dense matrix-vector
product or as a two-node tensor-network contraction; this script times both
per qubit count to justify the crossover constant in qmc.reach
(TENSOR_MIN_QUBITS).  Results land in docs/reach_benchmarks.md.

Usage: python scripts/bench_reach.py [--trials N]
"""

import argparse
import time

import numpy as np

from qmc import channel as ch
from qmc import reach


def random_channel(rng, n_qubits, n_kraus=3):
    d = 2 ** n_qubits
    gs = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
          for _ in range(n_kraus)]
    s = sum(g.conj().T @ g for g in gs)
    w, v = np.linalg.eigh(s)
    s_inv_half = v @ np.diag(w ** -0.5) @ v.conj().T
    return ch.SuperOperator.from_kraus([g @ s_inv_half for g in gs])


def time_route(n_qubits, use_network, trials, rng):
    d = 2 ** n_qubits
    e = random_channel(rng, n_qubits)
    m = ch.matrix_rep(e)
    phi = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
    start = time.perf_counter()
    for _ in range(trials):
        if use_network:
            phi = reach._step_by_network(m, phi, n_qubits)
        else:
            phi = m @ phi
        phi = phi / np.linalg.norm(phi)
    return (time.perf_counter() - start) / trials


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=50)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'qubits':>6} {'dense (ms)':>12} {'network (ms)':>13}")
    for n in range(1, 6):
        dense = time_route(n, False, args.trials, rng) * 1e3
        network = time_route(n, True, args.trials, rng) * 1e3
        print(f"{n:>6} {dense:>12.4f} {network:>13.4f}")


if __name__ == "__main__":
    main()
