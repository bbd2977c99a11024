"""Model checking of temporal assertions over configuration graphs.

A configuration graph is the explicit-state unfolding of a transition
system from an initial state: nodes are (location, state) pairs
deduplicated by a rounded fingerprint, edges follow the system's
transitions with their branch probabilities.  Exploration is breadth-first
up to a bound; if unexpanded nodes remain the graph is truncated and
verdicts become three-valued.

Checking labels every node with the state subformulas using the standard
EX / EU / EG fixpoints, run twice on truncated graphs (a certain lower
bound and a possible upper bound) so that `holds` and `fails` are only ever
reported when the explored prefix already decides them.  Branch
probabilities are carried for reporting; verdicts ignore them.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import logic as lg
from . import qts as q
from .errors import NoTraceAvailable, UnboundAtom

FP_DECIMALS = 7     # fingerprint rounding, decimal places
TOL_FP = 1e-7       # states closer than this share a node
DEFAULT_BOUND = 64  # exploration depth when none is given

COMPLETE = "complete"


def fingerprint(state: np.ndarray) -> str:
    """Hex digest of the Hermitian-symmetrized, rounded state."""
    sym = (state + state.conj().T) / 2.0
    rounded = np.round(sym, FP_DECIMALS) + 0.0  # fold -0.0 into +0.0
    return hashlib.blake2b(np.ascontiguousarray(rounded).tobytes(),
                           digest_size=16).hexdigest()


@dataclass(eq=False)
class GraphNode:
    index: int
    config: q.Configuration
    digest: str
    depth: int
    complete: bool = False
    out: tuple = ()  # (dst index, branch probability) pairs


@dataclass(frozen=True, eq=False)
class ConfigurationGraph:
    system: q.QuantumTransitionSystem
    nodes: tuple
    closure: object  # COMPLETE or ("truncated", bound)
    _labels: dict = field(default_factory=dict, repr=False)

    @property
    def root(self) -> GraphNode:
        return self.nodes[0]

    @property
    def edge_count(self) -> int:
        return sum(len(n.out) for n in self.nodes)

    def label_set(self, prop, bindings: dict, member_tol: float = None,
                  eig_tol: float = None) -> frozenset:
        """Indices of the nodes whose state's support lies in the denoted
        subspace; cached per proposition (and tolerance override)."""
        member_tol = la.TOL_MEMBER if member_tol is None else member_tol
        eig_tol = la.TOL_EIG if eig_tol is None else eig_tol
        key = (lg.print_prop(prop), member_tol, eig_tol)
        if key not in self._labels:
            target = lg.eval_prop(prop, bindings,
                                  ambient_dim=2 ** self.system.n_qubits)
            members = frozenset(
                n.index for n in self.nodes
                if la.contains(target, la.support(n.config.state, eig_tol),
                               member_tol))
            self._labels[key] = members
        return self._labels[key]


def _thread_count(threads) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("QMC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def build_graph(sys: q.QuantumTransitionSystem, rho0: np.ndarray,
                bound: int = DEFAULT_BOUND, dedup: bool = True,
                threads=None) -> ConfigurationGraph:
    """Breadth-first configuration graph from (initial location, rho0).

    Frontier nodes are expanded layer by layer (optionally in a thread
    pool; results are merged in frontier order, so the graph never depends
    on the thread count).  Nodes still unexpanded after `bound` layers
    leave the graph truncated.  `dedup=False` skips fingerprint merging and
    grows a tree, which only terminates within the bound; it exists to
    validate that merging never changes verdicts."""
    root = q.Configuration(sys.initial, np.asarray(rho0, dtype=complex))
    nodes = [GraphNode(0, root, fingerprint(root.state), 0)]
    buckets = {(root.location, nodes[0].digest): [0]}
    frontier = [0]
    workers = _thread_count(threads)

    def expand(index: int):
        return q.step(sys, nodes[index].config)

    for _ in range(bound):
        if not frontier:
            break
        if workers > 1 and len(frontier) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                expansions = list(pool.map(expand, frontier))
        else:
            expansions = [expand(i) for i in frontier]
        next_frontier = []
        for index, successors in zip(frontier, expansions):
            edges = []
            for succ, p in successors:
                key = (succ.location, fingerprint(succ.state))
                dst = None
                if dedup:
                    for cand in buckets.get(key, ()):
                        diff = np.abs(nodes[cand].config.state
                                      - succ.state).max()
                        if diff <= TOL_FP:
                            dst = cand
                            break
                if dst is None:
                    dst = len(nodes)
                    nodes.append(GraphNode(dst, succ, key[1],
                                           nodes[index].depth + 1))
                    buckets.setdefault(key, []).append(dst)
                    next_frontier.append(dst)
                edges.append((dst, p))
            nodes[index].complete = True
            nodes[index].out = tuple(edges)
        frontier = next_frontier

    closure = COMPLETE if not frontier else ("truncated", bound)
    return ConfigurationGraph(sys, tuple(nodes), closure)


# --- three-valued CTL labeling ----------------------------------------------

@dataclass(frozen=True)
class _Sets:
    """Per-formula node sets: `lo` certainly satisfy, `hi` possibly do."""
    lo: frozenset
    hi: frozenset


class _Labeling:
    def __init__(self, graph: ConfigurationGraph, bindings: dict,
                 member_tol: float = None, eig_tol: float = None):
        self.graph = graph
        self.bindings = bindings
        self.member_tol = member_tol
        self.eig_tol = eig_tol
        self.all = frozenset(range(len(graph.nodes)))
        self.incomplete = frozenset(n.index for n in graph.nodes
                                    if not n.complete)
        self.out = {n.index: tuple(dst for dst, _ in n.out)
                    for n in graph.nodes}
        # In a system where every location has outgoing transitions, every
        # configuration keeps a successor forever (normalisation leaves at
        # least one branch above the probability floor), so every node
        # starts an infinite path.  Only models with sink locations need
        # the conservative per-node fixpoints.
        system = graph.system
        if all(system.outgoing(l) for l in system.locations):
            self.inf_lo = self.inf_hi = self.all
        else:
            self.inf_lo = self._inf(optimistic=False)
            self.inf_hi = self._inf(optimistic=True)

    def _inf(self, optimistic: bool) -> frozenset:
        """Nodes certainly (or possibly) starting an infinite path."""
        live = set(self.all)
        while True:
            keep = set()
            for s in live:
                if optimistic and s in self.incomplete:
                    keep.add(s)
                elif any(t in live for t in self.out[s]):
                    keep.add(s)
            if keep == live:
                return frozenset(live)
            live = keep

    def _pre(self, targets: frozenset) -> frozenset:
        return frozenset(s for s in self.all
                         if any(t in targets for t in self.out[s]))

    def _not(self, s: _Sets) -> _Sets:
        return _Sets(self.all - s.hi, self.all - s.lo)

    def _and(self, a: _Sets, b: _Sets) -> _Sets:
        return _Sets(a.lo & b.lo, a.hi & b.hi)

    def _or(self, a: _Sets, b: _Sets) -> _Sets:
        return _Sets(a.lo | b.lo, a.hi | b.hi)

    def _ex(self, s: _Sets) -> _Sets:
        lo = self._pre(s.lo & self.inf_lo)
        hi = self._pre(s.hi & self.inf_hi) | self.incomplete
        return _Sets(lo, hi)

    def _eu(self, a: _Sets, b: _Sets) -> _Sets:
        lo = b.lo & self.inf_lo
        while True:
            grown = lo | (a.lo & self._pre(lo))
            if grown == lo:
                break
            lo = grown
        hi = b.hi & self.inf_hi
        while True:
            grown = hi | (a.hi & (self.incomplete | self._pre(hi)))
            if grown == hi:
                break
            hi = grown
        return _Sets(lo, hi)

    def _eg(self, s: _Sets) -> _Sets:
        lo = s.lo
        while True:
            shrunk = lo & self._pre(lo)
            if shrunk == lo:
                break
            lo = shrunk
        hi = s.hi
        while True:
            shrunk = hi & (self.incomplete | self._pre(hi))
            if shrunk == hi:
                break
            hi = shrunk
        return _Sets(lo, hi)

    def eval(self, formula) -> _Sets:
        if isinstance(formula, lg.Prop):
            members = self.graph.label_set(formula.prop, self.bindings,
                                           self.member_tol, self.eig_tol)
            return _Sets(members, members)
        if isinstance(formula, lg.Not):
            return self._not(self.eval(formula.sub))
        if isinstance(formula, lg.And):
            return self._and(self.eval(formula.left), self.eval(formula.right))
        if isinstance(formula, lg.Exists):
            path = formula.path
            if isinstance(path, lg.Next):
                return self._ex(self.eval(path.sub))
            return self._eu(self.eval(path.left), self.eval(path.right))
        if isinstance(formula, lg.Forall):
            path = formula.path
            if isinstance(path, lg.Next):
                # A X f = ! E X ! f
                return self._not(self._ex(self._not(self.eval(path.sub))))
            # A (f U g) = ! ( E(!g U (!f && !g)) || E G !g )
            nf = self._not(self.eval(path.left))
            ng = self._not(self.eval(path.right))
            return self._not(self._or(self._eu(ng, self._and(nf, ng)),
                                      self._eg(ng)))
        raise TypeError(f"not a state formula: {formula!r}")


# --- verdicts and traces ------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    location: str
    probability: float  # branch probability of the edge into this node
    state_digest: str


@dataclass(frozen=True)
class Verdict:
    label: str
    result: str  # "holds" | "fails" | "unknown"
    trace: tuple = None
    closure: object = COMPLETE
    nodes: int = 0
    edges: int = 0
    timings: dict = None


def check(sys: q.QuantumTransitionSystem, rho0: np.ndarray, formula,
          bindings: dict, bound: int = DEFAULT_BOUND, label: str = "",
          threads=None, graph: ConfigurationGraph = None,
          member_tol: float = None, eig_tol: float = None) -> Verdict:
    """Decide whether the system with initial state rho0 satisfies the
    formula, exploring at most `bound` steps.  On truncated graphs the
    result is `unknown` unless the explored prefix already decides it."""
    t0 = time.perf_counter()
    if graph is None:
        graph = build_graph(sys, rho0, bound, threads=threads)
    t1 = time.perf_counter()
    _check_bound_atoms(formula, bindings)
    labeling = _Labeling(graph, bindings, member_tol, eig_tol)
    sets = labeling.eval(formula)
    if 0 in sets.lo:
        result = "holds"
    elif 0 not in sets.hi:
        result = "fails"
    else:
        result = "unknown"
    t2 = time.perf_counter()
    trace = None
    try:
        trace = extract_trace(graph, formula, bindings, result,
                              _labeling=labeling)
    except NoTraceAvailable:
        pass
    return Verdict(label=label, result=result, trace=trace,
                   closure=graph.closure, nodes=len(graph.nodes),
                   edges=graph.edge_count,
                   timings={"build_s": t1 - t0, "label_s": t2 - t1})


def _check_bound_atoms(formula, bindings):
    def prop_atoms(p):
        yield from lg._atoms(p)

    def walk(f):
        if isinstance(f, lg.Prop):
            for atom in prop_atoms(f.prop):
                if atom.name not in bindings:
                    raise UnboundAtom(f"atom {atom.name!r} is not bound")
        elif isinstance(f, lg.Not):
            walk(f.sub)
        elif isinstance(f, lg.And):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, (lg.Exists, lg.Forall)):
            p = f.path
            if isinstance(p, lg.Next):
                walk(p.sub)
            else:
                walk(p.left)
                walk(p.right)

    walk(formula)


def _shortest_path(graph, start, allowed, targets):
    """BFS path (node indices) from start through `allowed` to any target;
    deterministic because successors are visited in edge order."""
    if start in targets:
        return [start]
    prev = {start: None}
    queue = [start]
    while queue:
        nxt = []
        for u in queue:
            for v, _ in graph.nodes[u].out:
                if v in prev:
                    continue
                if v in targets:
                    prev[v] = u
                    path = [v]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return list(reversed(path))
                if v in allowed:
                    prev[v] = u
                    nxt.append(v)
        queue = nxt
    return None


def _lasso(graph, start, region):
    """Path from start that closes a cycle inside `region` (start must be
    in the region); the repeated node appears twice."""
    on_path = []
    on_path_set = set()
    seen = set()

    def dfs(u):
        on_path.append(u)
        on_path_set.add(u)
        seen.add(u)
        for v, _ in graph.nodes[u].out:
            if v not in region:
                continue
            if v in on_path_set:
                return on_path[on_path.index(v):] + [v]
            if v not in seen:
                found = dfs(v)
                if found is not None:
                    return found
        on_path.pop()
        on_path_set.remove(u)
        return None

    return dfs(start)


def _steps_for(graph, path) -> tuple:
    steps = []
    prev = None
    for idx in path:
        node = graph.nodes[idx]
        p = 1.0
        if prev is not None:
            for dst, bp in graph.nodes[prev].out:
                if dst == idx:
                    p = bp
                    break
        steps.append(TraceStep(node.config.location, p, node.digest))
        prev = idx
    return tuple(steps)


def extract_trace(graph: ConfigurationGraph, formula, bindings: dict,
                  kind: str, _labeling=None) -> tuple:
    """Shortest witness (holds, Exists-rooted) or counterexample (fails,
    Forall-rooted); raises NoTraceAvailable for every other shape."""
    if kind == "unknown":
        raise NoTraceAvailable("no trace for an unknown verdict")
    labeling = _labeling or _Labeling(graph, bindings)
    root = 0
    if kind == "holds" and isinstance(formula, lg.Exists):
        path_f = formula.path
        if isinstance(path_f, lg.Next):
            target = labeling.eval(path_f.sub).lo & labeling.inf_lo
            for dst, _ in graph.nodes[root].out:
                if dst in target:
                    return _steps_for(graph, [root, dst])
            raise NoTraceAvailable("no witness edge found")
        good = labeling.eval(path_f.left).lo
        target = labeling.eval(path_f.right).lo & labeling.inf_lo
        path = _shortest_path(graph, root, good, target)
        if path is None:
            raise NoTraceAvailable("no witness path found")
        return _steps_for(graph, path)
    if kind == "fails" and isinstance(formula, lg.Forall):
        path_f = formula.path
        if isinstance(path_f, lg.Next):
            bad = (labeling.all - labeling.eval(path_f.sub).hi) \
                & labeling.inf_lo
            for dst, _ in graph.nodes[root].out:
                if dst in bad:
                    return _steps_for(graph, [root, dst])
            raise NoTraceAvailable("no refuting edge found")
        not_f = labeling.all - labeling.eval(path_f.left).hi
        not_g = labeling.all - labeling.eval(path_f.right).hi
        dead = not_f & not_g & labeling.inf_lo
        path = _shortest_path(graph, root, not_g, dead)
        if path is not None and root in not_g | dead:
            return _steps_for(graph, path)
        if root in not_g:
            lasso = _lasso(graph, root, not_g)
            if lasso is not None:
                return _steps_for(graph, lasso)
        raise NoTraceAvailable("no refuting path found")
    raise NoTraceAvailable(
        f"no finite trace for a {kind} verdict on this formula shape")
