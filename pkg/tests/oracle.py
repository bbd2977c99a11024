"""Independent evaluator of the temporal semantics by explicit path search.

This deliberately avoids the checker's set-based fixpoint labeling: path
quantifiers are decided by depth-first search over concrete paths of the
configuration graph, with lasso detection for infinite-avoidance arguments,
and the set of nodes admitting an infinite path comes from a transitive
closure rather than a greatest fixpoint.  Used to cross-check the checker's
reduction to CTL on graphs that close.
"""

from qmc import logic as lg


class PathOracle:
    def __init__(self, graph, bindings):
        if graph.closure != "complete":
            raise ValueError("the path oracle needs a complete graph")
        self.graph = graph
        self.bindings = bindings
        self.succ = {n.index: tuple(dst for dst, _ in n.out)
                     for n in graph.nodes}
        self.inf = self._infinite_starts()
        self._memo = {}

    def _infinite_starts(self):
        # transitive closure; a node starts an infinite path iff it can
        # reach some node that can reach itself
        reach = {u: set(vs) for u, vs in self.succ.items()}
        changed = True
        while changed:
            changed = False
            for u in reach:
                extra = set()
                for v in reach[u]:
                    extra |= reach[v]
                if not extra <= reach[u]:
                    reach[u] |= extra
                    changed = True
        on_cycle = {u for u in reach if u in reach[u]}
        return {u for u in reach
                if u in on_cycle or reach[u] & on_cycle}

    def holds(self, node, formula) -> bool:
        key = (node, formula)
        if key in self._memo:
            return self._memo[key]
        result = self._eval(node, formula)
        self._memo[key] = result
        return result

    def _eval(self, node, formula) -> bool:
        if isinstance(formula, lg.Prop):
            state = self.graph.nodes[node].config.state
            return lg.satisfies_atomic(state, formula.prop, self.bindings)
        if isinstance(formula, lg.Not):
            return not self.holds(node, formula.sub)
        if isinstance(formula, lg.And):
            return self.holds(node, formula.left) and \
                self.holds(node, formula.right)
        if isinstance(formula, lg.Exists):
            return self._exists(node, formula.path)
        if isinstance(formula, lg.Forall):
            return self._forall(node, formula.path)
        raise TypeError(f"not a state formula: {formula!r}")

    def _exists(self, node, path) -> bool:
        if isinstance(path, lg.Next):
            return any(t in self.inf and self.holds(t, path.sub)
                       for t in self.succ[node])
        left, right = path.left, path.right
        seen = set()

        def dfs(u):
            if u in seen:
                return False
            seen.add(u)
            if u in self.inf and self.holds(u, right):
                return True
            if not self.holds(u, left):
                return False
            return any(dfs(v) for v in self.succ[u])

        return node in self.inf and dfs(node)

    def _forall(self, node, path) -> bool:
        if isinstance(path, lg.Next):
            return all(self.holds(t, path.sub)
                       for t in self.succ[node] if t in self.inf)
        if node not in self.inf:
            return True  # no paths start here
        left, right = path.left, path.right
        on_stack = set()
        safe = set()

        def refutes(u):
            # walking a prefix where `right` has not held yet
            if self.holds(u, right):
                return False
            if not self.holds(u, left):
                return True  # neither holds and the path can continue
            if u in on_stack:
                return True  # a cycle avoiding `right` forever
            if u in safe:
                return False
            on_stack.add(u)
            try:
                for v in self.succ[u]:
                    if v in self.inf and refutes(v):
                        return True
            finally:
                on_stack.remove(u)
            safe.add(u)
            return False

        return not refutes(node)
