"""End-to-end teleportation walkthrough.

Builds the three-qubit teleportation system, sends a random qubit through
it, prints the branch tree, and checks the delivery assertion both through
the library API and the CLI-style report.

Usage: python scripts/run_teleportation.py [--seed N]
"""

import argparse

import numpy as np

from qmc import channel as ch
from qmc import checker, kets
from qmc import linalg as la
from qmc import logic as lg
from qmc import qts


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi = v / np.linalg.norm(v)
    print("payload |psi> =", kets.ket_string(psi, digits=6))

    system = qts.teleportation_qts()
    rho0 = qts.teleportation_input(psi)

    print("\nbranch tree:")
    frontier = [(qts.Configuration(system.initial, rho0), 0)]
    while frontier:
        config, depth = frontier.pop()
        print("  " * depth + f"{config.location}  p={config.probability:.4f}")
        if depth < 6:
            for succ, _ in qts.step(system, config):
                frontier.append((succ, depth + 1))

    print("\nterminal payloads on qubit 3:")
    leaves = [qts.Configuration(system.initial, rho0)]
    for _ in range(6):
        leaves = [s for c in leaves for s, _ in qts.step(system, c)]
    target = np.outer(psi, psi.conj())
    for leaf in leaves:
        reduced = ch.partial_trace(leaf.state, [3], 3)
        err = np.abs(reduced - target).max()
        print(f"  {leaf.location}: p={leaf.probability:.4f} "
              f"max deviation {err:.2e}")

    vecs = []
    for x in range(2):
        for y in range(2):
            full = np.zeros(8, dtype=complex)
            full[x + 2 * y] = psi[0]
            full[x + 2 * y + 4] = psi[1]
            vecs.append(full)
    bindings = {"psi3": la.Subspace.span(vecs)}
    formula = lg.parse_formula("A (true U [psi3])")
    verdict = checker.check(system, rho0, formula, bindings, bound=16,
                            label="teleports")
    print(f"\nassertion 'A (true U [psi3])': {verdict.result} "
          f"({verdict.nodes} configurations explored)")


if __name__ == "__main__":
    main()
