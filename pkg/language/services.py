import logging
from pathlib import Path
from typing import Iterable, List, Union

from core.exceptions import Diagnostic

from .arithmetic import evaluate_static
from .parser import parse_program
from .terms import (
    AnnotatedDisjunction, Comparison, Compound, Constant, DistClause, Distribution, Literal,
    NormalClause, Number, ProbFact, Program, RandomVariableId, Variable, format_term,
)

logger = logging.getLogger(__name__)

DISTRIBUTION_ARITY = {
    'flip': 1,
    'normal': 2,
    'beta': 2,
    'poisson': 1,
    'uniform': 2,
    'delta': 1,
}
LIST_DISTRIBUTIONS = ('finite', 'uniform_list')
ENGINE_PREDICATES = {('rv', 2)}

PROBABILITY_TOLERANCE = 1e-9


def load_program(path: Union[str, Path]) -> Program:
    """Read and parse a program file"""
    text = Path(path).read_text(encoding='utf-8')
    return parse_program(text)


def variables_of(term) -> List[Variable]:
    """Logic variables of a term, literal or distribution in order of occurrence"""
    found: List[Variable] = []

    def visit(item):
        if isinstance(item, Variable):
            if item not in found:
                found.append(item)
        elif isinstance(item, Compound):
            for arg in item.args:
                visit(arg)
        elif isinstance(item, Comparison):
            visit(item.lhs)
            visit(item.rhs)
        elif isinstance(item, Literal):
            visit(item.atom)
        elif isinstance(item, Distribution):
            for param in item.params:
                visit(param)
        elif isinstance(item, (tuple, list)):
            for element in item:
                visit(element)

    visit(term)
    return found


def is_static_number(term) -> bool:
    """True for expressions built from numbers and arithmetic functors only"""
    if isinstance(term, Number):
        return True
    if isinstance(term, Compound) and term.is_arithmetic:
        return all(is_static_number(arg) for arg in term.args)
    return False


class SyntaxValidator:
    """Collects diagnostics for a parsed program"""

    def __init__(self, program: Program):
        self.program = program
        self.diagnostics: List[Diagnostic] = []

    def validate(self) -> List[Diagnostic]:
        for statement in self.program.statements:
            self._check_heads(statement)
            self._check_range_restriction(statement)
            if isinstance(statement, DistClause):
                self._check_distribution(statement.dist, statement.line)
            elif isinstance(statement, ProbFact):
                self._check_probabilities([statement.prob], statement.line)
            elif isinstance(statement, AnnotatedDisjunction):
                self._check_probabilities([prob for prob, _ in statement.choices], statement.line)
            for literal in getattr(statement, 'body', ()):
                if isinstance(literal.atom, Comparison):
                    self._check_comparison(literal.atom, statement.line)
        for goal in self._task_goals():
            if isinstance(goal, Comparison):
                self._check_comparison(goal, None)
        for term, value in self.program.task.observations:
            self._check_comparison(Comparison('delta_interval', term, value), None)
        return self.diagnostics

    def _report(self, code: str, message: str, line=None, severity='error'):
        self.diagnostics.append(Diagnostic(code, message, line, severity))

    def _task_goals(self) -> Iterable:
        task = self.program.task
        yield from task.queries
        for atom, _ in task.evidence:
            yield atom

    def _heads(self, statement):
        if isinstance(statement, (DistClause, NormalClause)):
            return [statement.head]
        if isinstance(statement, ProbFact):
            return [statement.atom]
        return [atom for _, atom in statement.choices]

    def _check_heads(self, statement):
        for head in self._heads(statement):
            if isinstance(head, Compound):
                key = (head.functor, head.arity)
            elif isinstance(head, Constant):
                key = (head.symbol, 0)
            else:
                continue
            if key in ENGINE_PREDICATES or key[0].startswith('$'):
                self._report(
                    'reserved-head',
                    f'{key[0]}/{key[1]} is reserved for the engine and cannot be defined',
                    statement.line,
                )

    def _check_range_restriction(self, statement):
        body = getattr(statement, 'body', ())
        bound = variables_of(body)
        head_parts = list(self._heads(statement))
        if isinstance(statement, DistClause):
            head_parts.append(statement.dist)
        elif isinstance(statement, ProbFact):
            head_parts.append(statement.prob)
        elif isinstance(statement, AnnotatedDisjunction):
            head_parts.extend(prob for prob, _ in statement.choices)
        unbound = [v for v in variables_of(head_parts) if v not in bound]
        if unbound:
            names = ', '.join(v.name for v in unbound)
            self._report(
                'range-restriction',
                f'Variables {names} in "{statement}" do not occur in its body',
                statement.line,
            )

    def _check_distribution(self, dist: Distribution, line):
        if dist.kind in LIST_DISTRIBUTIONS:
            if dist.kind == 'finite':
                pairs_ok = all(isinstance(p, Compound) and p.functor == ':' and p.arity == 2
                               for p in dist.params)
                if not pairs_ok or not dist.params:
                    self._report('unknown-distribution', f'finite expects a non-empty list of p:v pairs in {dist}', line)
                    return
                self._check_probabilities([p.args[0] for p in dist.params], line)
            elif not dist.params:
                self._report('unknown-distribution', f'uniform expects a non-empty list in {dist}', line)
                return
            outcomes = dist.outcomes
            numeric = [isinstance(o, Number) for o in outcomes]
            if any(numeric) and not all(numeric):
                self._report(
                    'mixed-sample-space',
                    f'{dist} mixes numbers and symbols; symbols are numbered 1, 2, ... and may coincide with numbers',
                    line, severity='warning',
                )
            return
        arity = DISTRIBUTION_ARITY.get(dist.kind)
        if arity is None:
            self._report('unknown-distribution', f'Unknown distribution {dist.kind}/{len(dist.params)}', line)
        elif arity != len(dist.params):
            self._report(
                'unknown-distribution',
                f'{dist.kind} takes {arity} parameter(s), got {len(dist.params)}',
                line,
            )
        elif dist.kind == 'flip':
            self._check_probabilities(list(dist.params), line, exclusive=False)

    def _check_probabilities(self, probabilities, line, exclusive=True):
        static_total = 0.0
        for prob in probabilities:
            if isinstance(prob, (Comparison, Literal)) or (isinstance(prob, Compound) and prob.functor in ('[]', ':')):
                self._report('malformed-probability', f'{format_term(prob)} is not a probability expression', line)
                continue
            if not is_static_number(prob):
                continue
            value = evaluate_static(prob)
            if not 0.0 <= value <= 1.0:
                self._report('malformed-probability', f'Probability {format_term(prob)} is outside [0,1]', line)
            static_total += value
        if exclusive and static_total > 1.0 + PROBABILITY_TOLERANCE:
            self._report('malformed-probability', f'Probabilities sum to {static_total:g}, more than 1', line)

    def _check_comparison(self, comparison: Comparison, line):
        if not comparison.is_delta:
            return
        lhs, rhs = comparison.lhs, comparison.rhs
        if not isinstance(lhs, (Constant, Compound, RandomVariableId)) or (isinstance(lhs, Compound) and lhs.is_arithmetic):
            self._report(
                'malformed-delta-interval',
                f'{comparison}: the first argument must be a random term, not an expression',
                line,
            )
        if not isinstance(rhs, Number):
            self._report('malformed-delta-interval', f'{comparison}: the second argument must be a number', line)


def validate_syntax(program: Program) -> List[Diagnostic]:
    """Return the diagnostics of a parsed program; an empty list means it is well-formed"""
    diagnostics = SyntaxValidator(program).validate()
    logger.info(f'Syntax validation found {len(diagnostics)} diagnostics')
    return diagnostics
