import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Dict, Iterator, List, Optional, Tuple

from core.exceptions import GroundingError, NonTerminatingGrounding, UnknownPredicate
from language.arithmetic import SymbolTable, compare_static
from language.terms import (
    AnnotatedDisjunction, Comparison, Compound, Constant, DistClause, Literal, NormalClause,
    Number, ProbFact, Program, QueryTask, Statement, Variable, format_term, predicate_key,
)

from .unification import is_ground, rename, substitute, substitute_body, unify, variant_key

logger = logging.getLogger(__name__)


def synthetic_atom(name: str, index: int) -> Compound:
    return Compound(f'${name}', (Number(Fraction(index)),))


@dataclass(frozen=True)
class GroundTask:
    """
    A task over ground atoms only. Comparison queries and evidence, and
    observations, are represented by synthetic atoms defined in the
    ground program; ``labels`` keeps the user-facing text of each query.
    """

    queries: Tuple[Compound, ...] = ()
    evidence: Tuple[Tuple[Compound, bool], ...] = ()
    observations: Tuple[Tuple[object, Number], ...] = ()
    labels: Dict[object, str] = field(default_factory=dict, compare=False)

    def label(self, query) -> str:
        return self.labels.get(query, format_term(query))

    @property
    def atoms(self) -> List:
        return list(self.queries) + [atom for atom, _ in self.evidence]


@dataclass
class GroundProgram:
    clauses: List[Statement]
    atom_index: Dict[object, List[int]]
    task: GroundTask
    symbols: SymbolTable
    random_terms: frozenset = frozenset()

    def __str__(self):
        lines = [str(clause) for clause in self.clauses]
        for query in self.task.queries:
            lines.append(f'query({format_term(query)}).')
        for atom, value in self.task.evidence:
            lines.append(f"evidence({format_term(atom)},{'true' if value else 'false'}).")
        return '\n'.join(lines) + ('\n' if lines else '')


class RelevantGrounder:
    """
    Computes the relevant ground program by tabled backward chaining.

    Calls are memoized by variant. A call met again while it is being
    solved sees the answers found so far; the whole search is repeated
    from the roots until no new answer or clause appears, which makes the
    result complete for recursive programs over finite domains too.
    """

    def __init__(self, program: Program, memo_cap: int = 1_000_000):
        self.program = program
        self.memo_cap = memo_cap
        self.statements: List[Statement] = list(program.statements)
        self._renames = count(1)
        self._discoveries = count()
        self._records: Dict[Statement, Tuple[int, int]] = {}
        self._answers: Dict[object, List] = {}
        self._random_cache: Dict[object, bool] = {}
        self._changed = False
        self._visited = set()
        self._visited_terms = set()
        self._symbols: Optional[SymbolTable] = None
        self._build_index()

    def _build_index(self):
        self._atom_clauses: Dict[Tuple[str, int], List[int]] = defaultdict(list)
        self._dc_clauses: Dict[Tuple[str, int], List[int]] = defaultdict(list)
        for index, statement in enumerate(self.statements):
            self._index_statement(index, statement)

    def _index_statement(self, index: int, statement: Statement):
        if isinstance(statement, DistClause):
            self._dc_clauses[predicate_key(statement.head)].append(index)
        elif isinstance(statement, NormalClause):
            self._atom_clauses[predicate_key(statement.head)].append(index)
        elif isinstance(statement, ProbFact):
            self._atom_clauses[predicate_key(statement.atom)].append(index)
        else:
            for key in dict.fromkeys(predicate_key(atom) for _, atom in statement.choices):
                self._atom_clauses[key].append(index)

    def _add_synthetic(self, head: Compound, body: Tuple[Literal, ...]):
        statement = NormalClause(head, body)
        self.statements.append(statement)
        self._index_statement(len(self.statements) - 1, statement)

    # Task handling

    def _prepare_task(self, task: QueryTask) -> Tuple[List, List, List, Dict]:
        queries, evidence, labels = [], [], {}
        for number, query in enumerate(task.queries, 1):
            if isinstance(query, Comparison):
                atom = self._comparison_goal('query', number, query)
            else:
                atom = query
                self._check_known(atom)
            queries.append(atom)
            labels[atom] = str(query)
        for number, (goal, value) in enumerate(task.evidence, 1):
            if isinstance(goal, Comparison):
                atom = self._comparison_goal('evidence', number, goal)
            else:
                atom = goal
                self._check_known(atom)
                if not is_ground(atom):
                    raise GroundingError(f'Evidence {format_term(atom)} must be ground')
            evidence.append((atom, value))
        observed = []
        for number, (term, value) in enumerate(task.observations, 1):
            comparison = Comparison('delta_interval', term, value)
            if not is_ground(comparison):
                raise GroundingError(f'Observation of {format_term(term)} must be ground')
            atom = synthetic_atom('observed', number)
            self._add_synthetic(atom, (Literal(comparison),))
            evidence.append((atom, True))
            observed.append((term, value))
        return queries, evidence, observed, labels

    def _comparison_goal(self, name: str, number: int, comparison: Comparison) -> Compound:
        if not is_ground(comparison):
            raise GroundingError(f'{name.capitalize()} {comparison} must be ground')
        atom = synthetic_atom(name, number)
        self._add_synthetic(atom, (Literal(comparison),))
        return atom

    def _check_known(self, atom):
        if predicate_key(atom) not in self._atom_clauses:
            functor, arity = predicate_key(atom)
            raise UnknownPredicate(f'No clause defines {functor}/{arity} (needed by {format_term(atom)})')

    def _default_roots(self) -> Tuple[List, List]:
        """Every ground head, used when the task names no goal"""
        atoms, terms = [], []
        for statement in self.program.statements:
            if isinstance(statement, DistClause):
                if is_ground(statement.head):
                    terms.append(statement.head)
                continue
            if isinstance(statement, NormalClause):
                heads = [statement.head]
            elif isinstance(statement, ProbFact):
                heads = [statement.atom]
            else:
                heads = [atom for _, atom in statement.choices]
            atoms.extend(head for head in heads if is_ground(head))
        return list(dict.fromkeys(atoms)), list(dict.fromkeys(terms))

    # Fixpoint driver

    def ground(self, task: Optional[QueryTask] = None) -> GroundProgram:
        task = task or self.program.task
        queries, evidence, observed, labels = self._prepare_task(task)
        roots = queries + [atom for atom, _ in evidence]
        random_roots: List = []
        if not roots:
            roots, random_roots = self._default_roots()

        iterations = 0
        while True:
            iterations += 1
            self._changed = False
            self._visited = set()
            self._visited_terms = set()
            for goal in roots:
                self._solve(goal)
            for term in random_roots:
                self._ground_random_term(term)
            if not self._changed:
                break

        ground_queries = []
        for query in queries:
            if is_ground(query):
                ground_queries.append(query)
                continue
            for answer in self._answers.get(variant_key(query), []):
                ground_queries.append(answer)
                labels[answer] = format_term(answer)

        ordered = sorted(self._records.items(), key=lambda item: item[1])
        clauses = [statement for statement, _ in ordered]
        atom_index: Dict[object, List[int]] = defaultdict(list)
        for position, clause in enumerate(clauses):
            for head in _defined_atoms(clause):
                atom_index[head].append(position)

        symbols = SymbolTable.from_statements(self.statements, self._symbolic_leaves(clauses))
        logger.info(f'Relevant ground program: {len(clauses)} clauses after {iterations} passes')
        ground_task = GroundTask(tuple(ground_queries), tuple(evidence), tuple(observed), labels)
        random_terms = frozenset(term for term, random in self._random_cache.items() if random and is_ground(term))
        return GroundProgram(clauses, dict(atom_index), ground_task, symbols, random_terms)

    @property
    def symbols(self) -> SymbolTable:
        if self._symbols is None:
            self._symbols = SymbolTable.from_statements(self.statements)
        return self._symbols

    def _symbolic_leaves(self, clauses) -> List:
        """Non-random constants compared against random terms, in order of appearance"""
        leaves = []

        def visit(term):
            if isinstance(term, Compound) and term.is_arithmetic:
                for arg in term.args:
                    visit(arg)
            elif isinstance(term, (Constant, Compound)) and not self.is_random(term):
                leaves.append(term)

        for clause in clauses:
            for literal in getattr(clause, 'body', ()):
                if isinstance(literal.atom, Comparison):
                    visit(literal.atom.lhs)
                    visit(literal.atom.rhs)
        return leaves

    def _check_budget(self):
        size = len(self._answers) + len(self._records) + len(self._visited_terms)
        if size > self.memo_cap:
            raise NonTerminatingGrounding(
                f'Grounding exceeded {self.memo_cap} memo entries; '
                f'the relevant ground program is probably infinite'
            )

    def _record(self, index: int, instance: Statement):
        if instance not in self._records:
            self._records[instance] = (index, next(self._discoveries))
            self._changed = True
            self._check_budget()

    # Atoms

    def _solve(self, goal) -> List:
        key = variant_key(goal)
        if key in self._visited:
            return self._answers.get(key, [])
        self._visited.add(key)
        answers = self._answers.setdefault(key, [])
        self._check_budget()
        for index in self._atom_clauses.get(predicate_key(goal), []):
            for head in self._resolve(index, goal):
                if head not in answers:
                    answers.append(head)
                    self._changed = True
        return answers

    def _resolve(self, index: int, goal) -> Iterator:
        statement = rename(self.statements[index], f'#{next(self._renames)}')
        if isinstance(statement, NormalClause):
            subst = unify(goal, statement.head)
            if subst is None:
                return
            for solution in self._solve_body(statement.body, subst):
                head = substitute(statement.head, solution)
                body = self._ground_body(statement.body, solution, statement)
                self._record(index, NormalClause(head, body, statement.line))
                yield head
        elif isinstance(statement, ProbFact):
            subst = unify(goal, statement.atom)
            if subst is None:
                return
            instance = substitute(statement, subst)
            self._require_ground(instance, statement)
            self._ground_expression(instance.prob)
            self._record(index, instance)
            yield instance.atom
        else:
            for _, atom in statement.choices:
                subst = unify(goal, atom)
                if subst is None:
                    continue
                for solution in self._solve_body(statement.body, subst):
                    choices = tuple((substitute(p, solution), substitute(a, solution))
                                    for p, a in statement.choices)
                    body = self._ground_body(statement.body, solution, statement)
                    instance = AnnotatedDisjunction(choices, body, statement.line)
                    self._require_ground(instance, statement)
                    for prob, _ in choices:
                        self._ground_expression(prob)
                    self._record(index, instance)
                    yield substitute(atom, solution)

    def _require_ground(self, instance, statement):
        if isinstance(instance, AnnotatedDisjunction):
            parts = [t for choice in instance.choices for t in choice]
        elif isinstance(instance, ProbFact):
            parts = [instance.prob, instance.atom]
        elif isinstance(instance, DistClause):
            parts = [instance.head, instance.dist]
        else:
            parts = [instance.head]
        if not is_ground(parts):
            raise GroundingError(
                f'Cannot ground "{instance}": variables are not bound by the body',
                statement.line,
            )

    # Bodies

    def _solve_body(self, body: Tuple[Literal, ...], subst) -> Iterator:
        positives = [lit for lit in body if lit.positive and not isinstance(lit.atom, Comparison)]
        rest = [lit for lit in body if not (lit.positive and not isinstance(lit.atom, Comparison))]
        yield from self._solve_from(positives + rest, 0, subst)

    def _solve_from(self, literals: List[Literal], position: int, subst) -> Iterator:
        if position == len(literals):
            yield subst
            return
        literal = literals[position]
        atom = substitute(literal.atom, subst)
        if isinstance(atom, Comparison):
            if not is_ground(atom):
                raise GroundingError(f'Comparison {atom} is not ground when it is reached (floundering)')
            verdict = self._static_verdict(atom)
            if verdict is not None and verdict != literal.positive:
                return
            if verdict is None:
                self._ground_expression(atom.lhs)
                self._ground_expression(atom.rhs)
            yield from self._solve_from(literals, position + 1, subst)
        elif literal.positive:
            for answer in list(self._solve(atom)):
                extended = unify(atom, answer, subst)
                if extended is not None:
                    yield from self._solve_from(literals, position + 1, extended)
        else:
            if not is_ground(atom):
                raise GroundingError(f'Negated atom {format_term(atom)} is not ground (floundering)')
            self._solve(atom)
            yield from self._solve_from(literals, position + 1, subst)

    def _ground_body(self, body, subst, statement) -> Tuple[Literal, ...]:
        ground = []
        for literal in substitute_body(body, subst):
            if not is_ground(literal):
                raise GroundingError(f'Cannot ground body literal {literal}', statement.line)
            if isinstance(literal.atom, Comparison) and self._static_verdict(literal.atom) is not None:
                continue
            ground.append(literal)
        return tuple(ground)

    def _static_verdict(self, comparison: Comparison) -> Optional[bool]:
        """Truth value of a comparison without random terms, None otherwise"""
        if self._mentions_random(comparison.lhs) or self._mentions_random(comparison.rhs):
            return None
        if comparison.is_delta:
            raise GroundingError(
                f'{comparison}: {format_term(comparison.lhs)} is not defined by any distributional clause'
            )
        return compare_static(comparison, self.symbols)

    # Random terms

    def is_random(self, term) -> bool:
        """A term is random when it unifies with the head of a distributional clause"""
        if term in self._random_cache:
            return self._random_cache[term]
        result = False
        if isinstance(term, (Constant, Compound)) and not (isinstance(term, Compound) and term.is_arithmetic):
            for index in self._dc_clauses.get(predicate_key(term), []):
                if unify(term, rename(self.statements[index].head, '#r')) is not None:
                    result = True
                    break
        self._random_cache[term] = result
        return result

    def _mentions_random(self, expression) -> bool:
        if isinstance(expression, Compound) and expression.is_arithmetic:
            return any(self._mentions_random(arg) for arg in expression.args)
        return self.is_random(expression)

    def _ground_expression(self, expression):
        if isinstance(expression, Variable):
            raise GroundingError(f'Variable {expression} is unbound in a parameter (floundering)')
        if isinstance(expression, Compound) and expression.is_arithmetic:
            for arg in expression.args:
                self._ground_expression(arg)
        elif self.is_random(expression):
            self._ground_random_term(expression)

    def _ground_random_term(self, term):
        if not is_ground(term):
            raise GroundingError(f'Random term {format_term(term)} is not ground')
        if term in self._visited_terms:
            return
        self._visited_terms.add(term)
        self._check_budget()
        for index in self._dc_clauses.get(predicate_key(term), []):
            statement = rename(self.statements[index], f'#{next(self._renames)}')
            subst = unify(term, statement.head)
            if subst is None:
                continue
            for solution in self._solve_body(statement.body, subst):
                instance = DistClause(
                    substitute(statement.head, solution),
                    substitute(statement.dist, solution),
                    self._ground_body(statement.body, solution, statement),
                    statement.line,
                )
                self._require_ground(instance, statement)
                self._record(index, instance)
                for param in instance.dist.parameter_expressions:
                    self._ground_expression(param)


def _defined_atoms(clause: Statement) -> List:
    if isinstance(clause, NormalClause):
        return [clause.head]
    if isinstance(clause, ProbFact):
        return [clause.atom]
    if isinstance(clause, AnnotatedDisjunction):
        return [atom for _, atom in clause.choices]
    return []


def relevant_ground_program(program: Program, task: Optional[QueryTask] = None,
                            memo_cap: int = 1_000_000) -> GroundProgram:
    """Ground ``program`` with respect to ``task`` (the program's own task by default)"""
    return RelevantGrounder(program, memo_cap).ground(task)
