"""
Abstract syntax of DC-ProbLog programs.

Every node is an immutable dataclass, so ASTs can be shared freely between
pipeline stages and worker processes. ``str()`` of any node yields the
canonical concrete syntax accepted back by the parser.
"""
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Tuple, Union

PLAIN_NAME = re.compile(r'^[a-z][A-Za-z0-9_]*$')

ARITHMETIC_FUNCTORS = {('+', 2), ('-', 2), ('*', 2), ('/', 2), ('-', 1),
                       ('abs', 1), ('max', 2), ('min', 2)}
COMPARISON_OPS = ('<', '>', '=<', '>=', '=:=', '=\\=')
DELTA_INTERVAL = 'delta_interval'
NEGATED_OP = {'<': '>=', '>=': '<', '>': '=<', '=<': '>', '=:=': '=\\=', '=\\=': '=:='}

_PRECEDENCE = {'+': 500, '-': 500, '*': 400, '/': 400}


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self):
        if self.symbol == '[]' or PLAIN_NAME.match(self.symbol):
            return self.symbol
        return f"'{self.symbol}'"


@dataclass(frozen=True)
class Number:
    value: Union[Fraction, float]

    def __post_init__(self):
        if isinstance(self.value, float) and (self.value != self.value or abs(self.value) == float('inf')):
            raise ValueError(f'Number must be finite, got {self.value}')

    def __float__(self):
        return float(self.value)

    def __str__(self):
        value = self.value
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return str(value.numerator)
            return f'{value.numerator}/{value.denominator}'
        if isinstance(value, int):
            return str(value)
        return repr(float(value))

    @property
    def negative(self) -> bool:
        return self.value < 0


@dataclass(frozen=True)
class Compound:
    functor: str
    args: Tuple['Term', ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError(f'Compound term {self.functor} needs at least one argument')

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_arithmetic(self) -> bool:
        return (self.functor, self.arity) in ARITHMETIC_FUNCTORS

    def __str__(self):
        return format_term(self)


@dataclass(frozen=True, eq=False)
class RandomVariableId:
    """
    A random variable introduced by distributional-clause elimination.

    Identity is the index alone; ``origin`` is the random term it stands for
    and ``statement`` the index of the statement that introduced it.
    """

    index: int
    name: str
    origin: Optional['Term'] = None
    statement: Optional[int] = None

    def __eq__(self, other):
        return isinstance(other, RandomVariableId) and other.index == self.index

    def __hash__(self):
        return hash(('rv', self.index))

    def __lt__(self, other):
        return self.index < other.index

    def __str__(self):
        return self.name


Term = Union[Variable, Constant, Number, Compound, RandomVariableId]

EMPTY_LIST = Constant('[]')


@dataclass(frozen=True)
class Comparison:
    op: str
    lhs: Term
    rhs: Term

    @property
    def is_delta(self) -> bool:
        return self.op == DELTA_INTERVAL

    def negated(self) -> 'Comparison':
        return Comparison(NEGATED_OP[self.op], self.lhs, self.rhs)

    def __str__(self):
        if self.is_delta:
            return f'{DELTA_INTERVAL}({format_term(self.lhs)},{format_term(self.rhs)})'
        return f'{format_term(self.lhs)}{self.op}{format_term(self.rhs)}'


Atom = Union[Constant, Compound, Comparison]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negate(self) -> 'Literal':
        return Literal(self.atom, not self.positive)

    def __str__(self):
        return str(self.atom) if self.positive else f'not {self.atom}'


@dataclass(frozen=True)
class Distribution:
    """
    A distribution term such as ``normal(20,5)``.

    ``finite`` keeps its ``p:v`` pairs as ``':'/2`` compounds and
    ``uniform_list`` its values, both unpacked from the list argument.
    """

    kind: str
    params: Tuple[Term, ...] = ()

    def __str__(self):
        if self.kind == 'finite':
            return f"finite([{','.join(format_term(p) for p in self.params)}])"
        if self.kind == 'uniform_list':
            return f"uniform([{','.join(format_term(p) for p in self.params)}])"
        if not self.params:
            return str(Constant(self.kind))
        return f"{Constant(self.kind)}({','.join(format_term(p) for p in self.params)})"

    @property
    def parameter_expressions(self) -> Tuple[Term, ...]:
        """Expressions that may mention random terms: weights, not outcomes"""
        if self.kind == 'finite':
            return tuple(pair.args[0] for pair in self.params)
        if self.kind == 'uniform_list':
            return ()
        return self.params

    @property
    def outcomes(self) -> Tuple[Term, ...]:
        """Outcome values of a finite-support list distribution"""
        if self.kind == 'finite':
            return tuple(pair.args[1] for pair in self.params)
        if self.kind == 'uniform_list':
            return self.params
        return ()


def _format_body(body) -> str:
    return ', '.join(str(literal) for literal in body)


@dataclass(frozen=True)
class DistClause:
    head: Term
    dist: Distribution
    body: Tuple[Literal, ...] = ()
    line: Optional[int] = field(default=None, compare=False)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def __str__(self):
        text = f'{format_term(self.head)} ~ {self.dist}'
        return f'{text} :- {_format_body(self.body)}.' if self.body else f'{text}.'


@dataclass(frozen=True)
class ProbFact:
    prob: Term
    atom: Term
    line: Optional[int] = field(default=None, compare=False)

    def __str__(self):
        return f'{format_term(self.prob)}::{format_term(self.atom)}.'


@dataclass(frozen=True)
class AnnotatedDisjunction:
    choices: Tuple[Tuple[Term, Term], ...]
    body: Tuple[Literal, ...] = ()
    line: Optional[int] = field(default=None, compare=False)

    def __str__(self):
        head = '; '.join(f'{format_term(p)}::{format_term(a)}' for p, a in self.choices)
        return f'{head} :- {_format_body(self.body)}.' if self.body else f'{head}.'


@dataclass(frozen=True)
class NormalClause:
    head: Term
    body: Tuple[Literal, ...] = ()
    line: Optional[int] = field(default=None, compare=False)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def __str__(self):
        head = format_term(self.head)
        return f'{head} :- {_format_body(self.body)}.' if self.body else f'{head}.'


Statement = Union[DistClause, ProbFact, AnnotatedDisjunction, NormalClause]


def dist_fact(head: Term, dist: Distribution, line: Optional[int] = None) -> DistClause:
    return DistClause(head, dist, (), line)


def fact(atom: Term, line: Optional[int] = None) -> NormalClause:
    return NormalClause(atom, (), line)


@dataclass(frozen=True)
class QueryTask:
    """Queries, Boolean evidence and delta-interval observations of one task"""

    queries: Tuple[Atom, ...] = ()
    evidence: Tuple[Tuple[Atom, bool], ...] = ()
    observations: Tuple[Tuple[Term, Number], ...] = ()

    def merge(self, other: 'QueryTask') -> 'QueryTask':
        return QueryTask(
            self.queries + other.queries,
            self.evidence + other.evidence,
            self.observations + other.observations,
        )

    @property
    def is_empty(self) -> bool:
        return not (self.queries or self.evidence or self.observations)

    def directives(self) -> Iterator[str]:
        for query in self.queries:
            yield f'query({query}).'
        for atom, value in self.evidence:
            yield f"evidence({atom},{'true' if value else 'false'})."
        for term, value in self.observations:
            yield f'observation({format_term(term)},{value}).'


@dataclass(frozen=True)
class Program:
    statements: Tuple[Statement, ...] = ()
    task: QueryTask = QueryTask()

    def __str__(self):
        lines = [str(statement) for statement in self.statements]
        lines.extend(self.task.directives())
        return '\n'.join(lines) + ('\n' if lines else '')


def format_term(term, operand: bool = False) -> str:
    """Print a term; ``operand`` parenthesizes negative numbers and sums"""
    if isinstance(term, Number):
        text = str(term)
        return f'({text})' if operand and (term.negative or '/' in text) else text
    if isinstance(term, (Comparison, Literal)):
        return str(term)
    if not isinstance(term, Compound):
        return str(term)
    if term.functor == '[]':
        return f"[{','.join(format_term(item) for item in term.args)}]"
    if term.functor == ':' and term.arity == 2:
        return f'{format_term(term.args[0])}:{format_term(term.args[1])}'
    if term.arity == 2 and term.functor in _PRECEDENCE:
        return _format_binary(term, operand)
    if term.arity == 1 and term.functor == '-':
        inner = term.args[0]
        wrap = isinstance(inner, Compound) and inner.functor in _PRECEDENCE and inner.arity == 2
        text = f'-({format_term(inner)})' if wrap else f'-{format_term(inner, operand=True)}'
        return f'({text})' if operand else text
    args = ','.join(format_term(arg) for arg in term.args)
    return f'{Constant(term.functor)}({args})'


def _format_binary(term: Compound, operand: bool) -> str:
    precedence = _PRECEDENCE[term.functor]
    left, right = term.args

    def side(child, strict):
        if isinstance(child, Compound) and child.arity == 2 and child.functor in _PRECEDENCE:
            child_precedence = _PRECEDENCE[child.functor]
            if child_precedence > precedence or (strict and child_precedence == precedence):
                return f'({format_term(child)})'
            return format_term(child)
        if isinstance(child, Number) and isinstance(child.value, Fraction) and child.value.denominator != 1:
            return f'({child})'
        return format_term(child, operand=True)

    text = f'{side(left, False)}{term.functor}{side(right, True)}'
    return f'({text})' if operand and precedence == 500 else text


def term_symbols(term) -> Iterator[str]:
    """Yield every constant symbol and functor name occurring in a term"""
    if isinstance(term, Constant):
        yield term.symbol
    elif isinstance(term, Compound):
        yield term.functor
        for arg in term.args:
            yield from term_symbols(arg)
    elif isinstance(term, Comparison):
        yield from term_symbols(term.lhs)
        yield from term_symbols(term.rhs)
    elif isinstance(term, Literal):
        yield from term_symbols(term.atom)
    elif isinstance(term, Distribution):
        yield term.kind
        for param in term.params:
            yield from term_symbols(param)
    elif isinstance(term, RandomVariableId):
        yield term.name


def statement_symbols(statement: Statement) -> Iterator[str]:
    if isinstance(statement, DistClause):
        parts = [statement.head, statement.dist, *statement.body]
    elif isinstance(statement, ProbFact):
        parts = [statement.prob, statement.atom]
    elif isinstance(statement, AnnotatedDisjunction):
        parts = [t for choice in statement.choices for t in choice] + list(statement.body)
    else:
        parts = [statement.head, *statement.body]
    for part in parts:
        yield from term_symbols(part)


def predicate_key(atom) -> Tuple[str, int]:
    """Functor/arity of an atom"""
    if isinstance(atom, Constant):
        return atom.symbol, 0
    if isinstance(atom, Compound):
        return atom.functor, atom.arity
    if isinstance(atom, Comparison):
        return atom.op, 2
    raise TypeError(f'Not an atom: {atom!r}')
