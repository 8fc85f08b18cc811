"""
Reduced ordered binary decision diagrams.

Node 0 is false and node 1 is true; every other node is a
``(level, low, high)`` triple kept unique by the unique table. ``ite`` is
memoized in the computed table.
"""
import logging
import sys
from contextlib import contextmanager
from typing import Dict, List, Sequence, Tuple

from core.exceptions import CompilationBudgetExceeded
from formulas.nodes import And, Const, Node, Not, Or, Var

logger = logging.getLogger(__name__)

FALSE = 0
TRUE = 1
TERMINAL_LEVEL = sys.maxsize


@contextmanager
def recursion_limit(depth: int):
    previous = sys.getrecursionlimit()
    sys.setrecursionlimit(max(previous, depth))
    try:
        yield
    finally:
        sys.setrecursionlimit(previous)


class BDD:
    def __init__(self, order: Sequence[int], node_cap: int = 10_000_000):
        self.order: List[int] = list(order)
        self.levels: Dict[int, int] = {var: level for level, var in enumerate(self.order)}
        self.node_cap = node_cap
        self.nodes: List[Tuple[int, int, int]] = [(TERMINAL_LEVEL, FALSE, FALSE), (TERMINAL_LEVEL, TRUE, TRUE)]
        self.unique: Dict[Tuple[int, int, int], int] = {}
        self.computed: Dict[Tuple[int, int, int], int] = {}

    def __len__(self):
        return len(self.nodes)

    def level(self, node: int) -> int:
        return self.nodes[node][0]

    def var_of(self, node: int) -> int:
        return self.order[self.nodes[node][0]]

    def low(self, node: int) -> int:
        return self.nodes[node][1]

    def high(self, node: int) -> int:
        return self.nodes[node][2]

    def mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        node = self.unique.get(key)
        if node is None:
            if len(self.nodes) >= self.node_cap:
                raise CompilationBudgetExceeded(
                    f'Compilation exceeded {self.node_cap} decision nodes (set DCPLP_NODE_CAP to raise the cap)'
                )
            node = len(self.nodes)
            self.nodes.append(key)
            self.unique[key] = node
        return node

    def var(self, var: int) -> int:
        return self.mk(self.levels[var], FALSE, TRUE)

    def _cofactors(self, node: int, level: int) -> Tuple[int, int]:
        node_level, low, high = self.nodes[node]
        if node_level == level:
            return low, high
        return node, node

    def ite(self, f: int, g: int, h: int) -> int:
        if f == TRUE:
            return g
        if f == FALSE:
            return h
        if g == h:
            return g
        if g == TRUE and h == FALSE:
            return f
        key = (f, g, h)
        result = self.computed.get(key)
        if result is not None:
            return result
        top = min(self.level(f), self.level(g), self.level(h))
        f0, f1 = self._cofactors(f, top)
        g0, g1 = self._cofactors(g, top)
        h0, h1 = self._cofactors(h, top)
        result = self.mk(top, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self.computed[key] = result
        return result

    def negate(self, f: int) -> int:
        return self.ite(f, FALSE, TRUE)

    def conjoin(self, f: int, g: int) -> int:
        return self.ite(f, g, FALSE)

    def disjoin(self, f: int, g: int) -> int:
        return self.ite(f, TRUE, g)

    def build(self, formula: Node) -> int:
        """BDD of a formula over the variables of this order"""
        cache: Dict[Node, int] = {}
        with recursion_limit(4 * (len(self.order) + 100) + 1000):
            return self._build(formula, cache)

    def _build(self, node: Node, cache: Dict[Node, int]) -> int:
        if node in cache:
            return cache[node]
        if isinstance(node, Var):
            result = self.var(node.id)
        elif isinstance(node, Not):
            result = self.negate(self._build(node.child, cache))
        elif isinstance(node, And):
            result = TRUE
            for child in node.children:
                result = self.conjoin(result, self._build(child, cache))
                if result == FALSE:
                    break
        elif isinstance(node, Or):
            result = FALSE
            for child in node.children:
                result = self.disjoin(result, self._build(child, cache))
                if result == TRUE:
                    break
        elif isinstance(node, Const):
            result = TRUE if node.value else FALSE
        else:
            raise TypeError(f'Not a formula node: {node!r}')
        cache[node] = result
        return result

    def reachable(self, root: int) -> int:
        """Number of nodes reachable from ``root``, terminals included"""
        seen = set()
        stack = [root]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            if node > TRUE:
                stack.extend((self.low(node), self.high(node)))
        return len(seen)
