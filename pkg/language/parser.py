"""
Parser for DC-ProbLog programs.

The grammar is written for lark's Earley parser; the parse tree is turned
into the immutable AST of ``language.terms`` by ``ProgramBuilder``. The
grammar is documented in ``docs/language.md``.
"""
import logging
from dataclasses import replace
from fractions import Fraction
from functools import lru_cache
from itertools import count
from typing import Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from core.exceptions import DCProbLogError, ProgramSyntaxError, ReservedHeadError

from .terms import (
    DELTA_INTERVAL, EMPTY_LIST, AnnotatedDisjunction, Comparison, Compound, Constant,
    DistClause, Distribution, Literal, NormalClause, Number, ProbFact, Program, QueryTask,
    Variable, format_term,
)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
program: statement*

statement: clause "."

?clause: dist_clause
       | disjunction
       | rule

dist_clause: head "~" head body?
disjunction: choice (";" choice)* body?
choice: expr "::" head
rule: head body?

body: ":-" literal ("," literal)*

?literal: NOT literal_core -> negative
        | literal_core

?literal_core: comparison
             | head
             | "(" literal ")"

comparison: expr COMPARE expr

head: CONSTANT -> atom_name
    | QUOTED -> atom_name
    | CONSTANT "(" args ")" -> compound
    | QUOTED "(" args ")" -> compound

args: arg ("," arg)*
?arg: expr
    | comparison

?expr: sum
?sum: product
    | sum PLUS product -> binop
    | sum MINUS product -> binop
?product: unary
        | product STAR unary -> binop
        | product SLASH unary -> binop
?unary: primary
      | MINUS unary -> neg
?primary: NUMBER -> number
        | VARIABLE -> variable
        | head
        | list_term
        | "(" expr ")"

list_term: "[" [item ("," item)*] "]"
?item: expr
     | expr ":" expr -> pair

query_text: arg
term_text: expr

NOT.2: /(not\b|\\\+)/
COMPARE: /=<|>=|=:=|=\\=|<|>/
NUMBER: /\d+(\.\d+)?([eE][+-]?\d+)?/
VARIABLE: /[A-Z_][A-Za-z0-9_]*/
CONSTANT: /[a-z][A-Za-z0-9_]*/
QUOTED: /'[^']*'/
PLUS: "+"
MINUS: "-"
STAR: "*"
SLASH: "/"
COMMENT: /%[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

# Built-in predicates and functors that may not be defined by a clause
RESERVED_HEADS = {
    ('<', 2), ('>', 2), ('=<', 2), ('>=', 2), ('=:=', 2), ('=\\=', 2), (DELTA_INTERVAL, 2),
    ('+', 2), ('-', 2), ('*', 2), ('/', 2), ('-', 1), ('abs', 1), ('max', 2), ('min', 2),
    ('flip', 1), ('finite', 1), ('normal', 2), ('beta', 2), ('poisson', 1), ('uniform', 1),
    ('uniform', 2), ('delta', 1),
}

DIRECTIVES = {('query', 1), ('evidence', 1), ('evidence', 2), ('observation', 2)}


@lru_cache(maxsize=None)
def get_parser() -> Lark:
    return Lark(
        GRAMMAR,
        start=['program', 'query_text', 'term_text'],
        parser='earley',
        lexer='basic',
        propagate_positions=True,
        maybe_placeholders=True,
    )


class _Directive:
    """A query/evidence/observation directive awaiting its statement line"""

    def __init__(self, term: Compound, line=None):
        self.term = term
        self.line = line


def _unquote(token) -> str:
    text = str(token)
    return text[1:-1] if text.startswith("'") else text


def make_distribution(term) -> Distribution:
    """Turn the right-hand side of ``~`` into a Distribution"""
    if isinstance(term, Constant):
        return Distribution(term.symbol, ())
    if not isinstance(term, Compound):
        raise ProgramSyntaxError(f'{format_term(term)} is not a distribution')
    if term.arity == 1 and term.functor in ('finite', 'uniform'):
        items = list_items(term.args[0])
        if items is not None:
            kind = 'finite' if term.functor == 'finite' else 'uniform_list'
            return Distribution(kind, items)
    return Distribution(term.functor, term.args)


def list_items(term):
    """Items of a list term, or None when the term is not a list"""
    if term == EMPTY_LIST:
        return ()
    if isinstance(term, Compound) and term.functor == '[]':
        return term.args
    return None


def check_head(head, line=None):
    if isinstance(head, Comparison):
        raise ReservedHeadError(f'{head.op}/2 is a built-in and cannot be defined', line)
    if isinstance(head, Compound) and (head.functor, head.arity) in RESERVED_HEADS:
        raise ReservedHeadError(f'{head.functor}/{head.arity} is a built-in and cannot be defined', line)
    if isinstance(head, Constant) and (head.symbol, 0) in RESERVED_HEADS:
        raise ReservedHeadError(f'{head.symbol}/0 is a built-in and cannot be defined', line)


@v_args(inline=True)
class ProgramBuilder(Transformer):
    """Builds the AST from a lark parse tree"""

    def __init__(self):
        super().__init__()
        self._anonymous = count(1)

    def number(self, token):
        text = str(token)
        if '.' in text or 'e' in text or 'E' in text:
            return Number(float(text))
        return Number(Fraction(int(text)))

    def variable(self, token):
        name = str(token)
        if name == '_':
            name = f'_G{next(self._anonymous)}'
        return Variable(name)

    def atom_name(self, token):
        return Constant(_unquote(token))

    def compound(self, token, args):
        functor = _unquote(token)
        if functor == DELTA_INTERVAL and len(args) == 2:
            return Comparison(DELTA_INTERVAL, args[0], args[1])
        return Compound(functor, tuple(args))

    def args(self, *items):
        return list(items)

    def binop(self, left, op, right):
        op = str(op)
        if (op == '/' and isinstance(left, Number) and isinstance(right, Number)
                and isinstance(left.value, Fraction) and isinstance(right.value, Fraction)
                and right.value != 0):
            return Number(left.value / right.value)
        return Compound(op, (left, right))

    def neg(self, _, operand):
        if isinstance(operand, Number):
            return Number(-operand.value)
        return Compound('-', (operand,))

    def list_term(self, *items):
        items = tuple(item for item in items if item is not None)
        return Compound('[]', items) if items else EMPTY_LIST

    def pair(self, prob, value):
        return Compound(':', (prob, value))

    def comparison(self, left, op, right):
        return Comparison(str(op), left, right)

    def negative(self, _, inner):
        if isinstance(inner, Literal):
            return inner.negate()
        return Literal(inner, False)

    def body(self, *literals):
        return tuple(item if isinstance(item, Literal) else Literal(item) for item in literals)

    def choice(self, prob, atom):
        return prob, atom

    def dist_clause(self, head, dist, body=None):
        if isinstance(head, Comparison):
            check_head(head)
        return DistClause(head, make_distribution(dist), body or ())

    def disjunction(self, *items):
        items = [item for item in items if item is not None]
        body = ()
        if items and isinstance(items[-1][0], Literal):
            body = items.pop()
        choices = tuple(items)
        for _, atom in choices:
            check_head(atom)
        if len(choices) == 1 and not body:
            return ProbFact(choices[0][0], choices[0][1])
        return AnnotatedDisjunction(choices, body)

    def rule(self, head, body=None):
        if not body and isinstance(head, Compound) and (head.functor, head.arity) in DIRECTIVES:
            return _Directive(head)
        check_head(head)
        return NormalClause(head, body or ())

    @v_args(meta=True)
    def statement(self, meta, children):
        statement = children[0]
        line = getattr(meta, 'line', None)
        if isinstance(statement, _Directive):
            statement.line = line
            return statement
        return replace(statement, line=line)

    def program(self, *statements):
        clauses = []
        queries, evidence, observations = [], [], []
        for statement in statements:
            if isinstance(statement, _Directive):
                _add_directive(statement, queries, evidence, observations)
            else:
                clauses.append(statement)
        return Program(tuple(clauses), QueryTask(tuple(queries), tuple(evidence), tuple(observations)))

    def query_text(self, item):
        return item

    def term_text(self, item):
        return item


def _add_directive(directive: _Directive, queries, evidence, observations):
    term, line = directive.term, directive.line
    if term.functor == 'query':
        queries.append(_goal(term.args[0], line))
    elif term.functor == 'evidence':
        value = True
        if term.arity == 2:
            value = _truth_value(term.args[1], line)
        evidence.append((_goal(term.args[0], line), value))
    else:
        observed, value = term.args
        if not isinstance(value, Number):
            raise ProgramSyntaxError(f'Observed value {format_term(value)} must be a number', line)
        observations.append((observed, value))


def _goal(term, line=None):
    if isinstance(term, Comparison) or (isinstance(term, (Constant, Compound))
                                         and not (isinstance(term, Compound) and term.is_arithmetic)):
        return term
    raise ProgramSyntaxError(f'{format_term(term)} cannot be queried', line)


def _truth_value(term, line=None) -> bool:
    if term in (Constant('true'), Number(Fraction(1))):
        return True
    if term in (Constant('false'), Number(Fraction(0))):
        return False
    raise ProgramSyntaxError(f'Evidence value must be true or false, got {format_term(term)}', line)


def _parse(text: str, start: str):
    try:
        tree = get_parser().parse(text, start=start)
    except UnexpectedInput as exc:
        raise _syntax_error(exc, text) from None
    try:
        return ProgramBuilder().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, DCProbLogError):
            raise exc.orig_exc from None
        raise


def _syntax_error(exc: UnexpectedInput, text: str) -> ProgramSyntaxError:
    if isinstance(exc, UnexpectedEOF):
        expected = set(exc.expected)
        lines = text.splitlines() or ['']
        line, column = len(lines), len(lines[-1]) + 1
        found = 'end of input'
    elif isinstance(exc, UnexpectedToken):
        expected = set(exc.expected)
        line, column = exc.line, exc.column
        found = 'end of input' if exc.token.type == '$END' else repr(str(exc.token))
    else:
        expected = set(getattr(exc, 'allowed', None) or ())
        line, column = exc.line, exc.column
        found = repr(text[exc.pos_in_stream]) if isinstance(exc, UnexpectedCharacters) else 'input'
    message = f'Unexpected {found} at line {line}, column {column}'
    if expected:
        message += f"; expected one of: {', '.join(sorted(expected))}"
    return ProgramSyntaxError(message, line, column, frozenset(expected))


def parse_program(text: str) -> Program:
    """Parse program text, directives included"""
    program = _parse(text, 'program')
    logger.debug(f'Parsed {len(program.statements)} statements')
    return program


def parse_goal(text: str):
    """Parse a query: an atom or a comparison"""
    return _goal(_parse(text, 'query_text'))


def parse_term(text: str):
    return _parse(text, 'term_text')


def parse_evidence(text: str) -> Tuple[object, bool]:
    """Parse ``atom=true``; a bare atom means true"""
    goal_text, value_text = _split_assignment(text, required=False)
    value = True if value_text is None else _truth_value(parse_term(value_text))
    return parse_goal(goal_text), value


def parse_observation(text: str) -> Tuple[object, Number]:
    """Parse ``term=value``"""
    term_text, value_text = _split_assignment(text, required=True)
    value = parse_term(value_text)
    if not isinstance(value, Number):
        raise ProgramSyntaxError(f'Observed value {value_text!r} must be a number')
    return parse_term(term_text), value


def _split_assignment(text: str, required: bool):
    head, sep, tail = text.rpartition('=')
    # '=' that belongs to a comparison operator is not an assignment
    if not sep or head.endswith(('=', '\\', ':', '<', '>')) or not tail.strip() or tail.strip().startswith(('<', ':')):
        if required:
            raise ProgramSyntaxError(f'Expected term=value, got {text!r}')
        return text, None
    return head, tail
