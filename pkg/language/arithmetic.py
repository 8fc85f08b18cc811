import logging
from typing import Dict, Iterable, Mapping, Optional, Union

import numpy as np

from core.exceptions import NonNumericTerm, UnassignedVariable

from .terms import (
    Comparison, Compound, Constant, Distribution, Number, RandomVariableId, Term,
    format_term,
)

logger = logging.getLogger(__name__)

Values = Union[float, np.ndarray]

_COMPARATORS = {
    '<': np.less,
    '>': np.greater,
    '=<': np.less_equal,
    '>=': np.greater_equal,
    '=:=': np.equal,
    '=\\=': np.not_equal,
    # delta_interval on a countable support is an equality test
    'delta_interval': np.equal,
}


class SymbolTable:
    """
    Interns symbolic outcomes (``red``, ``wood``, ...) as natural numbers.

    Outcomes of list distributions are numbered 1, 2, ... in order of first
    appearance; any other constant gets the next free number on first use.
    """

    def __init__(self, symbols: Iterable[str] = ()):
        self._codes: Dict[str, int] = {}
        self._names: Dict[int, str] = {}
        for symbol in symbols:
            self.intern(symbol)

    def intern(self, symbol: str) -> int:
        code = self._codes.get(symbol)
        if code is None:
            code = len(self._codes) + 1
            self._codes[symbol] = code
            self._names[code] = symbol
        return code

    def name(self, code: float) -> Optional[str]:
        if code != code:
            return None
        return self._names.get(int(code)) if float(code).is_integer() else None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._codes

    def __len__(self):
        return len(self._codes)

    def items(self):
        return self._codes.items()

    @classmethod
    def from_statements(cls, statements, extra_terms: Iterable[Term] = ()) -> 'SymbolTable':
        table = cls()
        for statement in statements:
            dist = getattr(statement, 'dist', None)
            if isinstance(dist, Distribution):
                for outcome in dist.outcomes:
                    if not isinstance(outcome, Number):
                        table.intern(symbol_of(outcome))
        for term in extra_terms:
            table.intern(symbol_of(term))
        return table


def symbol_of(term: Term) -> str:
    """The interning key of a non-numeric outcome"""
    return term.symbol if isinstance(term, Constant) else format_term(term)


def is_static(expression: Term) -> bool:
    """True when an expression mentions no random variable"""
    if isinstance(expression, RandomVariableId):
        return False
    if isinstance(expression, Compound):
        return all(is_static(arg) for arg in expression.args)
    return True


def random_variables(expression) -> list:
    """Random variables of an expression or comparison, in order of occurrence"""
    found = []

    def visit(term):
        if isinstance(term, RandomVariableId):
            if term not in found:
                found.append(term)
        elif isinstance(term, Compound):
            for arg in term.args:
                visit(arg)
        elif isinstance(term, Comparison):
            visit(term.lhs)
            visit(term.rhs)

    visit(expression)
    return found


class ArithmeticEvaluator:
    """
    Evaluates arithmetic expressions over numbers, interned symbols and
    random variables. Random variables resolve to arrays of sampled values,
    so one call evaluates a whole block of samples.
    """

    def __init__(self, symbols: SymbolTable, values: Optional[Mapping[RandomVariableId, np.ndarray]] = None):
        self.symbols = symbols
        self.values = values if values is not None else {}

    def evaluate(self, expression: Term) -> Values:
        if isinstance(expression, Number):
            return float(expression.value)
        if isinstance(expression, RandomVariableId):
            try:
                return self.values[expression]
            except KeyError:
                raise UnassignedVariable(f'Random variable {expression} has no value in this sample')
        if isinstance(expression, Constant):
            return float(self.symbols.intern(expression.symbol))
        if isinstance(expression, Compound):
            if expression.is_arithmetic:
                return self._apply(expression)
            return float(self.symbols.intern(symbol_of(expression)))
        raise NonNumericTerm(f'Cannot evaluate {format_term(expression)} as a number')

    def _apply(self, expression: Compound) -> Values:
        args = [self.evaluate(arg) for arg in expression.args]
        functor = expression.functor
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            if len(args) == 1:
                if functor == '-':
                    return np.negative(args[0])
                return np.abs(args[0])
            left, right = args
            if functor == '+':
                return np.add(left, right)
            if functor == '-':
                return np.subtract(left, right)
            if functor == '*':
                return np.multiply(left, right)
            if functor == '/':
                return np.divide(left, right)
            if functor == 'max':
                return np.maximum(left, right)
            return np.minimum(left, right)

    def compare(self, comparison: Comparison) -> Union[bool, np.ndarray]:
        """Truth value of a comparison; NaN operands make everything but =\\= false"""
        left = self.evaluate(comparison.lhs)
        right = self.evaluate(comparison.rhs)
        with np.errstate(invalid='ignore'):
            return _COMPARATORS[comparison.op](left, right)


def evaluate_static(expression: Term, symbols: Optional[SymbolTable] = None) -> float:
    """Evaluate an expression without random variables to a float"""
    return float(ArithmeticEvaluator(symbols or SymbolTable()).evaluate(expression))


def compare_static(comparison: Comparison, symbols: Optional[SymbolTable] = None) -> bool:
    return bool(ArithmeticEvaluator(symbols or SymbolTable()).compare(comparison))


def broadcast(values: Values, size: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(values, dtype=float), (size,))


