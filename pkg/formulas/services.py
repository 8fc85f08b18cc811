"""
Propositional encoding of ground DF-PLP programs.

``clark_completion`` turns every derived atom into a biconditional with the
disjunction of its bodies; comparisons become leaf variables. ``symbolize``
then replaces comparisons over finite-support variables by choice selectors
whose labels marginalize the variable exactly.
"""
import logging
from dataclasses import dataclass, field, replace as dataclass_replace
from typing import Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx

from core.exceptions import CyclicRuleDependency, UnknownEvidenceAtom
from desugaring.services import GroundDfplpProgram, replace_terms
from grounding.services import GroundTask
from language.arithmetic import SymbolTable, compare_static, evaluate_static, random_variables
from language.terms import (
    Comparison, Distribution, Literal, Number, RandomVariableId, format_term,
)

from .nodes import FALSE, TRUE, Const, Node, Var, conj, disj, iff, neg, replace, to_text, variables

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12
SYMBOLIC_KINDS = ('flip', 'finite', 'uniform_list')


@dataclass(frozen=True)
class Derived:
    atom: object

    def __str__(self):
        return format_term(self.atom)


@dataclass(frozen=True)
class ComparisonLeaf:
    comparison: Comparison

    def __str__(self):
        return str(self.comparison)


@dataclass(frozen=True)
class Choice:
    """
    Selector of a stick-breaking chain: true with ``probability`` given that
    every earlier position of the same variable was not selected.
    """

    var: RandomVariableId
    position: int
    probability: float = field(compare=False)

    def __str__(self):
        return f'choice({self.var},{self.position})'


Meta = Union[Derived, ComparisonLeaf, Choice]


@dataclass(frozen=True)
class PropVar:
    id: int
    meta: Meta

    @property
    def kind(self) -> str:
        if isinstance(self.meta, Derived):
            return 'derived'
        if isinstance(self.meta, ComparisonLeaf):
            return 'comparison'
        return 'choice'

    @property
    def is_derived(self) -> bool:
        return isinstance(self.meta, Derived)

    @property
    def random_variables(self) -> List[RandomVariableId]:
        if isinstance(self.meta, ComparisonLeaf):
            return random_variables(self.meta.comparison)
        if isinstance(self.meta, Choice):
            return [self.meta.var]
        return []

    def __str__(self):
        return str(self.meta)


@dataclass(frozen=True)
class PropFormula:
    """
    A completed program: ``definitions`` pairs each derived atom with its
    body formula (dependencies first); ``constraints`` are extra conjuncts
    such as evidence and query literals.
    """

    table: Tuple[PropVar, ...]
    definitions: Tuple[Tuple[int, Node], ...]
    constraints: Tuple[Node, ...] = ()
    atom_ids: Dict[object, int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def root(self) -> Node:
        return conj([iff(Var(id), body) for id, body in self.definitions] + list(self.constraints))

    @property
    def derived_order(self) -> List[int]:
        return [id for id, _ in self.definitions]

    @property
    def size(self) -> int:
        return len(self.table)

    def var(self, id: int) -> PropVar:
        return self.table[id - 1]

    def id_of(self, atom) -> Optional[int]:
        return self.atom_ids.get(atom)

    @property
    def leaves(self) -> List[PropVar]:
        return [var for var in self.table if not var.is_derived]

    def conjoin(self, *nodes: Node) -> 'PropFormula':
        return dataclass_replace(self, constraints=self.constraints + tuple(nodes))

    def to_text(self) -> str:
        """DIMACS-like listing: header, variable legend, one conjunct per line"""
        conjuncts = [f'{id} <-> {to_text(body)}' for id, body in self.definitions]
        conjuncts += [to_text(node) for node in self.constraints]
        lines = [f'p formula {self.size} {len(conjuncts)}']
        lines += [f'c {var.id} {var.kind} {var}' for var in self.table]
        lines += conjuncts
        return '\n'.join(lines) + '\n'


class CompletionBuilder:
    """Assigns dense ids in order of first appearance and builds the completion"""

    def __init__(self, symbols: SymbolTable):
        self.symbols = symbols
        self.table: List[PropVar] = []
        self.ids: Dict[Meta, int] = {}
        self.graph = nx.DiGraph()

    def variable(self, meta: Meta) -> int:
        id = self.ids.get(meta)
        if id is None:
            id = len(self.table) + 1
            self.ids[meta] = id
            self.table.append(PropVar(id, meta))
            if isinstance(meta, Derived):
                self.graph.add_node(id)
        return id

    def literal(self, literal: Literal, head_id: Optional[int] = None) -> Node:
        atom = literal.atom
        if isinstance(atom, Comparison):
            if random_variables(atom):
                node = Var(self.variable(ComparisonLeaf(atom)))
            else:
                node = TRUE if compare_static(atom, self.symbols) else FALSE
        else:
            id = self.variable(Derived(atom))
            if head_id is not None:
                self.graph.add_edge(id, head_id)
            node = Var(id)
        return node if literal.positive else neg(node)

    def complete(self, program: GroundDfplpProgram) -> PropFormula:
        bodies: Dict[int, List[Node]] = {}
        for rule in program.rules:
            head_id = self.variable(Derived(rule.head))
            body = conj([self.literal(literal, head_id) for literal in rule.body])
            bodies.setdefault(head_id, []).append(body)
        for atom in program.task.atoms:
            self.variable(Derived(atom))

        if not nx.is_directed_acyclic_graph(self.graph):
            cycle = nx.find_cycle(self.graph)
            path = ' -> '.join(str(self.table[edge[1] - 1]) for edge in cycle)
            raise CyclicRuleDependency(
                f'The relevant ground program is cyclic: {path}; only acyclic programs are supported'
            )
        order = list(nx.lexicographical_topological_sort(self.graph, key=lambda id: id))
        definitions = tuple((id, disj(bodies.get(id, [FALSE]))) for id in order)
        atom_ids = {var.meta.atom: var.id for var in self.table if var.is_derived}
        return PropFormula(tuple(self.table), definitions, (), atom_ids)


def clark_completion(program: GroundDfplpProgram) -> PropFormula:
    """Clark's completion of an acyclic ground program; undefined atoms become false"""
    formula = CompletionBuilder(program.symbols).complete(program)
    logger.info(
        f'Completion: {formula.size} variables, {len(formula.definitions)} derived atoms, '
        f'{len(formula.leaves)} comparison leaves'
    )
    return formula


def assert_evidence(formula: PropFormula, task: GroundTask) -> PropFormula:
    """Conjoin one literal per evidence atom; observations are evidence on synthetic atoms"""
    literals = []
    for atom, value in task.evidence:
        id = formula.id_of(atom)
        if id is None:
            raise UnknownEvidenceAtom(f'Evidence atom {format_term(atom)} does not occur in the program')
        literals.append(Var(id) if value else neg(Var(id)))
    if not literals:
        return formula
    logger.debug(f'Asserted {len(literals)} evidence literals')
    return formula.conjoin(*literals)


def conjoin_query(formula: PropFormula, query) -> PropFormula:
    id = formula.id_of(query)
    if id is None:
        raise UnknownEvidenceAtom(f'Query atom {format_term(query)} does not occur in the program')
    return formula.conjoin(Var(id))


def stick_breaking(weights: List[float]) -> List[float]:
    """Conditional selector probabilities q_k = p_k / (1 - sum of earlier p_j)"""
    result = []
    used = 0.0
    for weight in weights:
        remaining = 1.0 - used
        q = weight / remaining if remaining > MASS_TOLERANCE else 0.0
        result.append(min(max(q, 0.0), 1.0))
        used += weight
    return result


class Symbolizer:
    """Expands comparisons over symbolic variables into choice selectors"""

    def __init__(self, formula: PropFormula, distributions: Dict[RandomVariableId, Distribution],
                 symbolic: Iterable[RandomVariableId], symbols: SymbolTable):
        self.formula = formula
        self.distributions = distributions
        self.symbolic = set(symbolic)
        self.symbols = symbols
        self.table: List[PropVar] = list(formula.table)
        self.ids: Dict[Meta, int] = {var.meta: var.id for var in formula.table}
        self._branches: Dict[RandomVariableId, List[Tuple[Node, Optional[object]]]] = {}

    def symbolize(self) -> PropFormula:
        replacements: Dict[int, Node] = {}
        for var in self.formula.leaves:
            if isinstance(var.meta, ComparisonLeaf) and self.symbolic.intersection(var.random_variables):
                replacements[var.id] = self.expand(var.meta.comparison)
        if not replacements:
            return self.formula

        cache = {}

        def mapping(id):
            return replacements.get(id, Var(id))

        definitions = [(id, replace(body, mapping, cache)) for id, body in self.formula.definitions]
        constraints = [replace(node, mapping, cache) for node in self.formula.constraints]
        formula = self._compact(definitions, constraints, set(replacements))
        logger.info(
            f'Symbolic marginalization of {len(self.symbolic)} finite variables '
            f'replaced {len(replacements)} comparison leaves'
        )
        return formula

    def expand(self, comparison: Comparison) -> Node:
        targets = [var for var in random_variables(comparison) if var in self.symbolic]
        if not targets:
            return self._leaf(comparison)
        var = targets[0]
        branches = []
        for selector, value in self.branches(var):
            if value is None:
                # no outcome: NaN makes every comparison false except =\=
                residual = Const(comparison.op == '=\\=')
            else:
                residual = self.expand(replace_terms(comparison, {var: value}))
            branches.append(conj([selector, residual]))
        return disj(branches)

    def branches(self, var: RandomVariableId) -> List[Tuple[Node, Optional[object]]]:
        if var in self._branches:
            return self._branches[var]
        dist = self.distributions[var]
        if dist.kind == 'flip':
            probability = evaluate_static(dist.params[0], self.symbols)
            selector = self._choice(var, 1, probability)
            branches = [(selector, Number(1)), (neg(selector), Number(0))]
        else:
            outcomes = list(dist.outcomes)
            if dist.kind == 'finite':
                weights = [evaluate_static(p, self.symbols) for p in dist.parameter_expressions]
            else:
                weights = [1.0 / len(outcomes)] * len(outcomes)
            leftover = 1.0 - sum(weights) > MASS_TOLERANCE
            conditionals = stick_breaking(weights)
            branches = []
            earlier: List[Node] = []
            for position, (outcome, q) in enumerate(zip(outcomes, conditionals), 1):
                if position == len(outcomes) and not leftover:
                    branches.append((conj(earlier), outcome))
                    break
                selector = self._choice(var, position, q)
                branches.append((conj(earlier + [selector]), outcome))
                earlier.append(neg(selector))
            if leftover:
                branches.append((conj(earlier), None))
        self._branches[var] = branches
        return branches

    def _choice(self, var: RandomVariableId, position: int, probability: float) -> Node:
        return Var(self._variable(Choice(var, position, probability)))

    def _leaf(self, comparison: Comparison) -> Node:
        if not random_variables(comparison):
            return TRUE if compare_static(comparison, self.symbols) else FALSE
        return Var(self._variable(ComparisonLeaf(comparison)))

    def _variable(self, meta: Meta) -> int:
        id = self.ids.get(meta)
        if id is None:
            id = len(self.table) + 1
            self.ids[meta] = id
            self.table.append(PropVar(id, meta))
        return id

    def _compact(self, definitions, constraints, retired) -> PropFormula:
        """Drop replaced leaves and renumber the remaining variables densely"""
        used = set()
        for _, body in definitions:
            used.update(variables(body))
        for node in constraints:
            used.update(variables(node))
        kept = [var for var in self.table
                if var.is_derived or (var.id in used and var.id not in retired)]
        renumber = {var.id: position for position, var in enumerate(kept, 1)}
        cache = {}

        def mapping(id):
            return Var(renumber[id])

        table = tuple(PropVar(renumber[var.id], var.meta) for var in kept)
        return PropFormula(
            table,
            tuple((renumber[id], replace(body, mapping, cache)) for id, body in definitions),
            tuple(replace(node, mapping, cache) for node in constraints),
            {var.meta.atom: var.id for var in table if var.is_derived},
        )


def symbolize(formula: PropFormula, distributions: Dict[RandomVariableId, Distribution],
              symbolic: Iterable[RandomVariableId], symbols: SymbolTable) -> PropFormula:
    """Marginalize the given finite-support variables through choice selectors"""
    return Symbolizer(formula, distributions, symbolic, symbols).symbolize()


def encode(program: GroundDfplpProgram) -> PropFormula:
    """Completion with the task's evidence asserted"""
    return assert_evidence(clark_completion(program), program.task)
