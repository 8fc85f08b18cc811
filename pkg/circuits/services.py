"""
Compilation of propositional formulas to smooth deterministic decomposable
circuits.

The formula is compiled to a reduced ordered BDD whose decision nodes are
emitted as ``Or(And(x, high), And(not x, low))``; ``smooth`` then adds
``(x or not x)`` gadgets so the children of every Or mention the same
non-derived variables.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from core.exceptions import CompilationBudgetExceeded, CompilationError
from formulas.services import PropFormula

from .bdd import BDD, FALSE as BDD_FALSE, TRUE as BDD_TRUE, recursion_limit

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 20
DETERMINISM_CHECK_LIMIT = 64


@dataclass(frozen=True)
class CircuitNode:
    kind: str  # 'false', 'true', 'literal', 'and', 'or'
    children: Tuple[int, ...] = ()
    var: Optional[int] = None
    positive: bool = True


class Circuit:
    """
    Arena of hash-consed nodes. Children are always created before their
    parents, so node ids are a topological order.
    """

    FALSE = 0
    TRUE = 1

    def __init__(self, variables: Iterable[int] = (), derived: Iterable[int] = ()):
        self.nodes: List[CircuitNode] = []
        self.varsets: List[FrozenSet[int]] = []
        self._unique: Dict[CircuitNode, int] = {}
        self.variables: Tuple[int, ...] = tuple(variables)
        self.derived: FrozenSet[int] = frozenset(derived)
        self.root = self.FALSE
        self._add(CircuitNode('false'))
        self._add(CircuitNode('true'))

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, node: int) -> CircuitNode:
        return self.nodes[node]

    def _add(self, node: CircuitNode) -> int:
        existing = self._unique.get(node)
        if existing is not None:
            return existing
        id = len(self.nodes)
        self.nodes.append(node)
        self._unique[node] = id
        if node.kind == 'literal':
            self.varsets.append(frozenset((node.var,)))
        else:
            self.varsets.append(frozenset().union(*(self.varsets[child] for child in node.children)))
        return id

    def literal(self, var: int, positive: bool = True) -> int:
        return self._add(CircuitNode('literal', (), var, positive))

    def conjunction(self, children: Sequence[int]) -> int:
        kept = []
        for child in children:
            if child == self.FALSE:
                return self.FALSE
            if child != self.TRUE and child not in kept:
                kept.append(child)
        if not kept:
            return self.TRUE
        if len(kept) == 1:
            return kept[0]
        return self._add(CircuitNode('and', tuple(kept)))

    def disjunction(self, children: Sequence[int]) -> int:
        kept = []
        for child in children:
            if child == self.TRUE:
                return self.TRUE
            if child != self.FALSE and child not in kept:
                kept.append(child)
        if not kept:
            return self.FALSE
        if len(kept) == 1:
            return kept[0]
        return self._add(CircuitNode('or', tuple(kept)))

    def reachable(self, root: Optional[int] = None) -> List[int]:
        """Ids of the nodes below ``root`` in increasing (topological) order"""
        root = self.root if root is None else root
        seen = {root}
        stack = [root]
        while stack:
            for child in self.nodes[stack.pop()].children:
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return sorted(seen)

    def evaluate(self, assignment) -> bool:
        """Truth value under a mapping from variable id to bool"""
        values: Dict[int, bool] = {}
        for id in self.reachable():
            node = self.nodes[id]
            if node.kind == 'literal':
                values[id] = bool(assignment[node.var]) == node.positive
            elif node.kind == 'and':
                values[id] = all(values[child] for child in node.children)
            elif node.kind == 'or':
                values[id] = any(values[child] for child in node.children)
            else:
                values[id] = node.kind == 'true'
        return values[self.root]

    @property
    def size(self) -> int:
        return len(self.reachable())


def variable_order(formula: PropFormula) -> List[int]:
    """
    Leaves grouped by the first random variable they mention, groups in
    order of first occurrence; derived atoms last, in reverse topological
    order of the completion (an atom before the atoms its bodies use).
    """
    groups: Dict[object, List[int]] = {}
    for var in formula.leaves:
        variables = var.random_variables
        key = variables[0] if variables else None
        groups.setdefault(key, []).append(var.id)
    order = [id for ids in groups.values() for id in ids]
    order += reversed(formula.derived_order)
    derived = set(formula.derived_order)
    order += [var.id for var in formula.table if var.is_derived and var.id not in derived]
    return order


def compile_formula(formula: PropFormula, root=None, node_cap: int = 10_000_000,
                    variable_cap: int = 10_000) -> Circuit:
    """Compile ``formula`` (or the node ``root`` over its variables) to a circuit"""
    if formula.size > variable_cap:
        raise CompilationBudgetExceeded(
            f'Formula has {formula.size} variables, more than the cap of {variable_cap}'
        )
    bdd = BDD(variable_order(formula), node_cap)
    top = bdd.build(formula.root if root is None else root)
    circuit = Circuit((var.id for var in formula.table), formula.derived_order)
    with recursion_limit(4 * (len(bdd.order) + 100) + 1000):
        circuit.root = _convert(bdd, top, circuit, {})
    logger.info(f'Compiled {formula.size} variables into {bdd.reachable(top)} BDD nodes, {circuit.size} circuit nodes')
    return circuit


def _convert(bdd: BDD, node: int, circuit: Circuit, memo: Dict[int, int]) -> int:
    if node == BDD_FALSE:
        return Circuit.FALSE
    if node == BDD_TRUE:
        return Circuit.TRUE
    if node in memo:
        return memo[node]
    var = bdd.var_of(node)
    high = _convert(bdd, bdd.high(node), circuit, memo)
    low = _convert(bdd, bdd.low(node), circuit, memo)
    branches = []
    if high != Circuit.FALSE:
        branches.append(circuit.conjunction([circuit.literal(var, True), high]))
    if low != Circuit.FALSE:
        branches.append(circuit.conjunction([circuit.literal(var, False), low]))
    result = circuit.disjunction(branches)
    memo[node] = result
    return result


def smooth(circuit: Circuit) -> Circuit:
    """Make every Or's children cover the same non-derived variables"""
    smoothed = Circuit(circuit.variables, circuit.derived)
    mapped: Dict[int, int] = {Circuit.FALSE: Circuit.FALSE, Circuit.TRUE: Circuit.TRUE}
    gadgets = 0
    for id in circuit.reachable():
        if id in mapped:
            continue
        node = circuit[id]
        if node.kind == 'literal':
            mapped[id] = smoothed.literal(node.var, node.positive)
        elif node.kind == 'and':
            mapped[id] = smoothed.conjunction([mapped[child] for child in node.children])
        else:
            children = [mapped[child] for child in node.children]
            union = frozenset().union(*(smoothed.varsets[child] for child in children))
            padded = []
            for child in children:
                missing = sorted(union - smoothed.varsets[child] - circuit.derived)
                gadgets += len(missing)
                extra = [smoothed.disjunction([smoothed.literal(var, True), smoothed.literal(var, False)])
                         for var in missing]
                padded.append(smoothed.conjunction([child] + extra))
            mapped[id] = smoothed.disjunction(padded)
    smoothed.root = mapped[circuit.root]
    logger.debug(f'Smoothing added {gadgets} gadgets')
    return smoothed


def model_count(circuit: Circuit, variables: Optional[int] = None) -> int:
    """Number of models over all declared variables, for a decomposable deterministic circuit"""
    total = len(circuit.variables) if variables is None else variables
    counts: Dict[int, int] = {}
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind == 'false':
            counts[id] = 0
        elif node.kind in ('true', 'literal'):
            counts[id] = 1
        elif node.kind == 'and':
            count = 1
            for child in node.children:
                count *= counts[child]
            counts[id] = count
        else:
            size = len(circuit.varsets[id])
            counts[id] = sum(counts[child] << (size - len(circuit.varsets[child])) for child in node.children)
    root = circuit.root
    return counts[root] << (total - len(circuit.varsets[root]))


def is_decomposable(circuit: Circuit) -> bool:
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind != 'and':
            continue
        seen = set()
        for child in node.children:
            if seen & circuit.varsets[child]:
                return False
            seen |= circuit.varsets[child]
    return True


def _entailed_literals(circuit: Circuit) -> Dict[int, FrozenSet[Tuple[int, bool]]]:
    entailed: Dict[int, FrozenSet[Tuple[int, bool]]] = {}
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind == 'literal':
            entailed[id] = frozenset({(node.var, node.positive)})
        elif node.kind == 'and':
            entailed[id] = frozenset().union(*(entailed[child] for child in node.children))
        elif node.kind == 'or':
            entailed[id] = frozenset.intersection(*(entailed[child] for child in node.children))
        else:
            entailed[id] = frozenset()
    return entailed


def _conflicting(left: FrozenSet, right: FrozenSet) -> bool:
    return any((var, not positive) in right for var, positive in left)


def _jointly_satisfiable(circuit: Circuit, left: int, right: int) -> bool:
    variables = sorted(circuit.varsets[left] | circuit.varsets[right])
    for values in itertools.product((False, True), repeat=len(variables)):
        assignment = dict(zip(variables, values))
        if _evaluate_node(circuit, left, assignment) and _evaluate_node(circuit, right, assignment):
            return True
    return False


def _evaluate_node(circuit: Circuit, root: int, assignment) -> bool:
    saved = circuit.root
    circuit.root = root
    try:
        return circuit.evaluate(assignment)
    finally:
        circuit.root = saved


def is_deterministic(circuit: Circuit) -> bool:
    """
    Or children must be pairwise inconsistent: shown by complementary
    entailed literals, or by enumeration over at most twenty variables.
    """
    entailed = _entailed_literals(circuit)
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind != 'or':
            continue
        for left, right in itertools.combinations(node.children, 2):
            if _conflicting(entailed[left], entailed[right]):
                continue
            if len(circuit.varsets[left] | circuit.varsets[right]) > BRUTE_FORCE_LIMIT:
                return False
            if _jointly_satisfiable(circuit, left, right):
                return False
    return True


def is_smooth(circuit: Circuit) -> bool:
    """Or children mention the same variables, derived atoms exempt"""
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind != 'or':
            continue
        varsets = {circuit.varsets[child] - circuit.derived for child in node.children}
        if len(varsets) > 1:
            return False
    return True


def verify(circuit: Circuit) -> Dict[str, bool]:
    return {
        'decomposable': is_decomposable(circuit),
        'deterministic': is_deterministic(circuit),
        'smooth': is_smooth(circuit),
    }


def to_dot(circuit: Circuit, formula: Optional[PropFormula] = None, name: str = 'circuit') -> str:
    """Graphviz rendering; inner nodes carry their number and semiring operator"""
    def literal_name(node: CircuitNode) -> str:
        text = str(formula.var(node.var)) if formula is not None else f'x{node.var}'
        text = text.replace('\\', '\\\\').replace('"', '\\"')
        return text if node.positive else f'¬{text}'

    lines = [f'digraph {name} {{', '  rankdir=BT;']
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind == 'literal':
            lines.append(f'  n{id} [shape=box, label="{literal_name(node)}"];')
        elif node.kind == 'and':
            lines.append(f'  n{id} [shape=circle, label="{id}\\n⊗"];')
        elif node.kind == 'or':
            lines.append(f'  n{id} [shape=circle, label="{id}\\n⊕"];')
        else:
            lines.append(f'  n{id} [shape=box, label="{node.kind}"];')
        for child in node.children:
            lines.append(f'  n{child} -> n{id};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def property_checks(circuit: Circuit) -> Dict[str, bool]:
    """
    Decomposability and smoothness of every circuit; determinism only for
    circuits over at most ``DETERMINISM_CHECK_LIMIT`` variables.
    """
    checks = {'decomposable': is_decomposable(circuit), 'smooth': is_smooth(circuit)}
    if len(circuit.variables) <= DETERMINISM_CHECK_LIMIT:
        checks['deterministic'] = is_deterministic(circuit)
    return checks


def assert_properties(circuit: Circuit) -> Dict[str, bool]:
    checks = property_checks(circuit)
    failed = [name for name, holds in checks.items() if not holds]
    if failed:
        raise CompilationError(f'Compiled circuit is not {" or ".join(failed)}')
    return checks


def compile_smooth(formula: PropFormula, root=None, node_cap: int = 10_000_000,
                   variable_cap: int = 10_000) -> Circuit:
    circuit = smooth(compile_formula(formula, root, node_cap, variable_cap))
    assert_properties(circuit)
    return circuit
