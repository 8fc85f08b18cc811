import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count, product
from typing import Dict, Iterable, List, Optional, Set, Tuple

from core.exceptions import (
    CyclicRandomTermDependency, Diagnostic, InvalidProbability, RvCycle, UnboundedExpansion,
)
from grounding.services import GroundProgram, GroundTask
from language.arithmetic import SymbolTable, evaluate_static
from language.services import is_static_number
from language.terms import (
    AnnotatedDisjunction, Comparison, Compound, DistClause, Distribution, Literal, NormalClause,
    Number, ProbFact, RandomVariableId, Statement, Constant, format_term, statement_symbols,
)

from .graph import DependencyGraph

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9
RV = 'rv'

Body = Tuple[Literal, ...]


class FreshNames:
    """
    Generates names ``<prefix>1, <prefix>2, ...`` that cannot collide with
    any symbol of the program: the prefix is extended with underscores
    until no existing symbol looks like ``<prefix><digits>``.
    """

    def __init__(self, used: Iterable[str], base: str):
        used = set(used)
        prefix = base
        while any(re.fullmatch(rf'{re.escape(prefix)}\d+', symbol) for symbol in used):
            prefix += '_'
        self.prefix = prefix
        self._counter = count(1)

    def next(self) -> Tuple[int, str]:
        index = next(self._counter)
        return index, f'{self.prefix}{index}'


@dataclass(frozen=True)
class DistributionalFact:
    var: RandomVariableId
    dist: Distribution

    def __str__(self):
        return f'{self.var} ~ {self.dist}.'


@dataclass
class AdFreeProgram:
    """Ground program with probabilistic facts and ADs replaced by DCs and rules"""

    statements: List[Statement]
    task: GroundTask
    symbols: SymbolTable
    random_terms: frozenset = frozenset()
    used_symbols: Set[str] = field(default_factory=set)

    def __str__(self):
        return ''.join(f'{statement}\n' for statement in self.statements)


@dataclass
class DistributionalEncoding:
    facts: List[DistributionalFact]
    context_rules: List[NormalClause]
    logic_rules: List[NormalClause]
    variables: Dict[object, List[RandomVariableId]]
    task: GroundTask
    symbols: SymbolTable

    def __str__(self):
        lines = [str(fact) for fact in self.facts]
        lines += [str(rule) for rule in self.context_rules]
        lines += [str(rule) for rule in self.logic_rules]
        return ''.join(f'{line}\n' for line in lines)


@dataclass
class GroundDfplpProgram:
    """
    Distributional facts plus normal clauses over regular atoms and
    comparisons. ``contexts`` maps each random term to its variables and the
    unfolded bodies under which each variable is the one the term denotes.
    """

    facts: List[DistributionalFact]
    rules: List[NormalClause]
    contexts: Dict[object, List[Tuple[RandomVariableId, List[Body]]]]
    task: GroundTask
    symbols: SymbolTable

    @property
    def distributions(self) -> Dict[RandomVariableId, Distribution]:
        return {fact.var: fact.dist for fact in self.facts}

    def __str__(self):
        lines = [str(fact) for fact in self.facts] + [str(rule) for rule in self.rules]
        for query in self.task.queries:
            lines.append(f'query({format_term(query)}).')
        for atom, value in self.task.evidence:
            lines.append(f"evidence({format_term(atom)},{'true' if value else 'false'}).")
        return ''.join(f'{line}\n' for line in lines)


def rv_atom(term, var: RandomVariableId) -> Compound:
    return Compound(RV, (term, var))


def is_rv_atom(atom) -> bool:
    return isinstance(atom, Compound) and atom.functor == RV and atom.arity == 2 \
        and isinstance(atom.args[1], RandomVariableId)


def choice_comparison(term, value: int) -> Literal:
    return Literal(Comparison('=:=', term, Number(Fraction(value))))


class AdEliminator:
    """Replaces probabilistic facts and annotated disjunctions by fresh random terms"""

    def __init__(self, ground: GroundProgram):
        self.ground = ground
        self.used = {symbol for clause in ground.clauses for symbol in statement_symbols(clause)}
        self.names = FreshNames(self.used, 'x')

    def eliminate(self) -> AdFreeProgram:
        statements: List[Statement] = []
        fresh_terms = set()
        for clause in self.ground.clauses:
            if isinstance(clause, ProbFact):
                self._check_probabilities([clause.prob], clause)
                term = self._fresh_term(fresh_terms)
                statements.append(DistClause(term, Distribution('flip', (clause.prob,)), (), clause.line))
                statements.append(NormalClause(clause.atom, (choice_comparison(term, 1),), clause.line))
            elif isinstance(clause, AnnotatedDisjunction):
                self._check_probabilities([prob for prob, _ in clause.choices], clause)
                term = self._fresh_term(fresh_terms)
                if len(clause.choices) == 1:
                    prob, atom = clause.choices[0]
                    statements.append(DistClause(term, Distribution('flip', (prob,)), (), clause.line))
                    statements.append(NormalClause(atom, clause.body + (choice_comparison(term, 1),), clause.line))
                    continue
                pairs = tuple(Compound(':', (prob, Number(Fraction(position))))
                              for position, (prob, _) in enumerate(clause.choices, 1))
                statements.append(DistClause(term, Distribution('finite', pairs), (), clause.line))
                for position, (_, atom) in enumerate(clause.choices, 1):
                    # the local choice goes last
                    body = clause.body + (choice_comparison(term, position),)
                    statements.append(NormalClause(atom, body, clause.line))
            else:
                statements.append(clause)
        used = self.used | {term.symbol for term in fresh_terms}
        logger.info(f'Eliminated {len(fresh_terms)} probabilistic facts and annotated disjunctions')
        return AdFreeProgram(
            statements, self.ground.task, self.ground.symbols,
            self.ground.random_terms | frozenset(fresh_terms), used,
        )

    def _fresh_term(self, fresh_terms: set) -> Constant:
        _, name = self.names.next()
        term = Constant(name)
        fresh_terms.add(term)
        return term

    def _check_probabilities(self, probabilities, clause):
        total = 0.0
        for prob in probabilities:
            if not is_static_number(prob):
                continue
            value = evaluate_static(prob)
            if not 0.0 <= value <= 1.0:
                raise InvalidProbability(f'Probability {format_term(prob)} in "{clause}" is outside [0,1]', clause.line)
            total += value
        if total > 1.0 + PROBABILITY_TOLERANCE:
            raise InvalidProbability(f'Probabilities in "{clause}" sum to {total:g}, more than 1', clause.line)


def eliminate_ads(ground: GroundProgram) -> AdFreeProgram:
    return AdEliminator(ground).eliminate()


def replace_terms(expression, mapping: Dict):
    """Replace random terms inside an arithmetic expression"""
    if expression in mapping:
        return mapping[expression]
    if isinstance(expression, Compound) and expression.is_arithmetic:
        return Compound(expression.functor, tuple(replace_terms(arg, mapping) for arg in expression.args))
    if isinstance(expression, Comparison):
        return Comparison(expression.op, replace_terms(expression.lhs, mapping), replace_terms(expression.rhs, mapping))
    return expression


def replace_in_distribution(dist: Distribution, mapping: Dict) -> Distribution:
    if dist.kind == 'finite':
        params = tuple(Compound(':', (replace_terms(p.args[0], mapping), p.args[1])) for p in dist.params)
    elif dist.kind == 'uniform_list':
        params = dist.params
    else:
        params = tuple(replace_terms(p, mapping) for p in dist.params)
    return Distribution(dist.kind, params)


def occurrences(expression, random_terms) -> List:
    """Random terms used inside an arithmetic expression or comparison, in order"""
    found: List = []

    def visit(term):
        if term in random_terms:
            if term not in found:
                found.append(term)
        elif isinstance(term, Compound) and term.is_arithmetic:
            for arg in term.args:
                visit(arg)
        elif isinstance(term, Comparison):
            visit(term.lhs)
            visit(term.rhs)

    visit(expression)
    return found


class DcEliminator:
    """Introduces one random variable per distributional clause and parent combination"""

    def __init__(self, program: AdFreeProgram, expansion_cap: int = 1_000_000):
        self.program = program
        self.expansion_cap = expansion_cap
        self.names = FreshNames(program.used_symbols, 'v')
        self.clauses: Dict[object, List[Tuple[int, DistClause]]] = {}
        for index, statement in enumerate(program.statements):
            if isinstance(statement, DistClause):
                self.clauses.setdefault(statement.head, []).append((index, statement))
        self.random_terms = set(self.clauses) | set(program.random_terms)
        self.variables: Dict[object, List[RandomVariableId]] = {}
        self.facts: List[DistributionalFact] = []
        self.context_rules: List[NormalClause] = []
        self._active: List = []

    def eliminate(self) -> DistributionalEncoding:
        for term in self.clauses:
            self._variables_of(term)
        for term in self.random_terms:
            self.variables.setdefault(term, [])
        logic_rules = [s for s in self.program.statements if isinstance(s, NormalClause)]
        logger.info(f'Introduced {len(self.facts)} random variables for {len(self.clauses)} random terms')
        return DistributionalEncoding(
            self.facts, self.context_rules, logic_rules, self.variables,
            self.program.task, self.program.symbols,
        )

    def _variables_of(self, term) -> List[RandomVariableId]:
        if term in self.variables:
            return self.variables[term]
        if term in self._active:
            cycle = self._active[self._active.index(term):] + [term]
            raise CyclicRandomTermDependency(
                'Random terms depend on themselves: ' + ' -> '.join(format_term(t) for t in cycle)
            )
        self._active.append(term)
        result: List[RandomVariableId] = []
        for index, clause in self.clauses.get(term, []):
            parents: List = []
            for expression in clause.dist.parameter_expressions:
                for parent in occurrences(expression, self.random_terms):
                    if parent not in parents:
                        parents.append(parent)
            parent_variables = [self._variables_of(parent) for parent in parents]
            for combination in product(*parent_variables):
                if len(self.facts) >= self.expansion_cap:
                    raise UnboundedExpansion(
                        f'Eliminating distributional clauses needs more than {self.expansion_cap} random variables',
                        clause.line,
                    )
                number, name = self.names.next()
                var = RandomVariableId(number, name, term, index)
                mapping = dict(zip(parents, combination))
                self.facts.append(DistributionalFact(var, replace_in_distribution(clause.dist, mapping)))
                guards = tuple(Literal(rv_atom(parent, parent_var)) for parent, parent_var in mapping.items())
                self.context_rules.append(NormalClause(rv_atom(term, var), guards + clause.body, clause.line))
                result.append(var)
        self._active.pop()
        self.variables[term] = result
        return result


def eliminate_dcs(program: AdFreeProgram, expansion_cap: int = 1_000_000) -> DistributionalEncoding:
    return DcEliminator(program, expansion_cap).eliminate()


def contextualize(rules: Iterable[NormalClause], variables: Dict[object, List[RandomVariableId]],
                  expansion_cap: int = 1_000_000) -> List[NormalClause]:
    """
    Replace every random term used in a comparison by each of its random
    variables in turn, guarding the rule with the matching ``rv/2`` atoms.
    A rule using a term without variables disappears.
    """
    result: List[NormalClause] = []
    for rule in rules:
        terms: List = []
        for literal in rule.body:
            if isinstance(literal.atom, Comparison):
                for term in occurrences(literal.atom, variables):
                    if term not in terms:
                        terms.append(term)
        if not terms:
            result.append(rule)
            continue
        for combination in product(*(variables[term] for term in terms)):
            if len(result) >= expansion_cap:
                raise UnboundedExpansion(f'Contextualization produced more than {expansion_cap} rules', rule.line)
            mapping = dict(zip(terms, combination))
            guards = tuple(Literal(rv_atom(term, var)) for term, var in mapping.items())
            body = tuple(
                Literal(replace_terms(literal.atom, mapping), literal.positive)
                if isinstance(literal.atom, Comparison) else literal
                for literal in rule.body
            )
            result.append(NormalClause(rule.head, guards + body, rule.line))
    return result


def simplify_body(body: Iterable[Literal]) -> Optional[Body]:
    """Drop repeated literals; None when the body holds a literal and its negation"""
    seen = dict.fromkeys(body)
    for literal in seen:
        if literal.negate() in seen:
            return None
    return tuple(seen)


class RvUnfolder:
    """Replaces ``rv/2`` atoms by the bodies of their defining context rules"""

    def __init__(self, context_rules: List[NormalClause]):
        self.definitions: Dict[Compound, List[Body]] = {}
        for rule in context_rules:
            self.definitions.setdefault(rule.head, []).append(rule.body)
        self.depth_limit = len(context_rules)
        self._memo: Dict[Compound, List[Body]] = {}
        self._active: List[Compound] = []

    def unfold_atom(self, atom: Compound) -> List[Body]:
        if atom in self._memo:
            return self._memo[atom]
        if atom in self._active or len(self._active) > self.depth_limit:
            raise RvCycle(f'Unfolding {format_term(atom)} does not terminate: context rules are cyclic')
        self._active.append(atom)
        bodies: List[Body] = []
        for body in self.definitions.get(atom, []):
            for unfolded in self.unfold_body(body):
                if unfolded not in bodies:
                    bodies.append(unfolded)
        self._active.pop()
        self._memo[atom] = bodies
        return bodies

    def unfold_body(self, body: Body) -> List[Body]:
        partial: List[Body] = [()]
        for literal in body:
            if literal.positive and is_rv_atom(literal.atom):
                expansions = self.unfold_atom(literal.atom)
                partial = [done + extra for done in partial for extra in expansions]
            else:
                partial = [done + (literal,) for done in partial]
            if not partial:
                return []
        bodies = []
        for candidate in partial:
            simplified = simplify_body(candidate)
            if simplified is not None and simplified not in bodies:
                bodies.append(simplified)
        return bodies


def unfold_rv(encoding: DistributionalEncoding, expansion_cap: int = 1_000_000) -> GroundDfplpProgram:
    """Contextualize the encoding and unfold every ``rv/2`` atom away"""
    context_rules = contextualize(encoding.context_rules, encoding.variables, expansion_cap)
    logic_rules = contextualize(encoding.logic_rules, encoding.variables, expansion_cap)
    unfolder = RvUnfolder(context_rules)

    rules: List[NormalClause] = []
    seen = set()
    pruned = 0
    for rule in logic_rules:
        bodies = unfolder.unfold_body(rule.body)
        if not bodies:
            pruned += 1
        for body in bodies:
            clause = NormalClause(rule.head, body, rule.line)
            if clause not in seen:
                seen.add(clause)
                rules.append(clause)

    contexts = {
        term: [(var, unfolder.unfold_atom(rv_atom(term, var))) for var in variables]
        for term, variables in encoding.variables.items()
    }
    logger.info(f'Unfolded to {len(rules)} rules ({pruned} rules with inconsistent bodies dropped)')
    return GroundDfplpProgram(encoding.facts, rules, contexts, encoding.task, encoding.symbols)


# Parameter slots and the values they accept
POSITIVE_SLOTS = {('normal', 1), ('beta', 0), ('beta', 1), ('poisson', 0)}
UNIT_SLOTS = {('flip', 0)}


def _support(dist: Distribution) -> Optional[Tuple[float, float]]:
    """Bounds of a distribution's support when statically known"""
    if dist.kind == 'normal':
        return float('-inf'), float('inf')
    if dist.kind == 'beta':
        return 0.0, 1.0
    if dist.kind == 'poisson':
        return 0.0, float('inf')
    if dist.kind == 'flip':
        return 0.0, 1.0
    if dist.kind == 'uniform' and all(is_static_number(p) for p in dist.params):
        return evaluate_static(dist.params[0]), evaluate_static(dist.params[1])
    if dist.kind in ('finite', 'uniform_list') and all(isinstance(o, Number) for o in dist.outcomes):
        values = [float(o.value) for o in dist.outcomes]
        return min(values), max(values)
    return None


def validate_core(program: GroundDfplpProgram) -> DependencyGraph:
    """
    Build the dependency graph and check it is acyclic. Parameters fed by a
    variable whose support reaches outside the parameter's domain are
    reported as warnings on ``graph.diagnostics``.
    """
    graph = DependencyGraph(program.facts)
    graph.check_acyclic()
    distributions = program.distributions
    diagnostics: List[Diagnostic] = []
    for fact in program.facts:
        slots = fact.dist.parameter_expressions
        for position, expression in enumerate(slots):
            if not isinstance(expression, RandomVariableId):
                continue
            support = _support(distributions[expression])
            if support is None:
                continue
            low, high = support
            key = (fact.dist.kind, position)
            weight = fact.dist.kind == 'finite'
            if key in POSITIVE_SLOTS and low < 0:
                problem = 'must be positive'
            elif (key in UNIT_SLOTS or weight) and (low < 0 or high > 1):
                problem = 'must lie in [0,1]'
            else:
                continue
            origin = format_term(expression.origin) if expression.origin is not None else str(expression)
            diagnostics.append(Diagnostic(
                'domain',
                f'{fact.var} ~ {fact.dist}: parameter {position + 1} {problem} but is fed by '
                f'{origin} ~ {distributions[expression]}',
                severity='warning',
            ))
    graph.diagnostics = diagnostics
    for diagnostic in diagnostics:
        logger.warning(str(diagnostic))
    logger.info(f'Dependency graph: {len(graph)} random variables, {len(graph.edges)} edges')
    return graph


def desugar(ground: GroundProgram, expansion_cap: int = 1_000_000) -> GroundDfplpProgram:
    """All desugaring stages in order"""
    encoding = eliminate_dcs(eliminate_ads(ground), expansion_cap)
    return unfold_rv(encoding, expansion_cap)
