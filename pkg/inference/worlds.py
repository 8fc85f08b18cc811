"""Truth values of formula variables in sampled or enumerated worlds"""
from typing import Dict, Mapping

import numpy as np

from core.exceptions import UnassignedVariable
from formulas.nodes import And, Const, Node, Not, Or, Var
from formulas.services import Choice, PropFormula
from language.arithmetic import ArithmeticEvaluator, SymbolTable, broadcast
from language.terms import Comparison, Literal, RandomVariableId

Values = Mapping[RandomVariableId, np.ndarray]


class WorldEvaluator:
    """
    Evaluates a completed formula on a block of worlds: comparison leaves
    from the sampled values, derived atoms from their definitions.
    """

    def __init__(self, formula: PropFormula, symbols: SymbolTable):
        self.formula = formula
        self.symbols = symbols

    def truth(self, values: Values, size: int) -> Dict[int, np.ndarray]:
        evaluator = ArithmeticEvaluator(self.symbols, values)
        truth: Dict[int, np.ndarray] = {}
        for var in self.formula.leaves:
            if isinstance(var.meta, Choice):
                raise UnassignedVariable(f'{var.meta} cannot be evaluated in a sampled world')
            truth[var.id] = self.compare(var.meta.comparison, evaluator, size)
        for id, body in self.formula.definitions:
            truth[id] = self.holds(body, truth, size)
        for var in self.formula.table:
            truth.setdefault(var.id, np.zeros(size, dtype=bool))
        return truth

    @staticmethod
    def compare(comparison: Comparison, evaluator: ArithmeticEvaluator, size: int) -> np.ndarray:
        return broadcast(evaluator.compare(comparison), size).astype(bool)

    def holds(self, node: Node, truth: Dict[int, np.ndarray], size: int) -> np.ndarray:
        if isinstance(node, Var):
            return truth[node.id]
        if isinstance(node, Not):
            return ~self.holds(node.child, truth, size)
        if isinstance(node, And):
            result = np.ones(size, dtype=bool)
            for child in node.children:
                result &= self.holds(child, truth, size)
            return result
        if isinstance(node, Or):
            result = np.zeros(size, dtype=bool)
            for child in node.children:
                result |= self.holds(child, truth, size)
            return result
        if isinstance(node, Const):
            return np.full(size, node.value)
        raise TypeError(f'Not a formula node: {node!r}')

    def evidence(self, truth: Dict[int, np.ndarray], size: int) -> np.ndarray:
        """Rows where every constraint of the formula holds"""
        result = np.ones(size, dtype=bool)
        for node in self.formula.constraints:
            result &= self.holds(node, truth, size)
        return result

    def literal(self, literal: Literal, truth: Dict[int, np.ndarray], values: Values, size: int) -> np.ndarray:
        """Truth of a body literal; atoms the formula does not define are false"""
        atom = literal.atom
        if isinstance(atom, Comparison):
            value = self.compare(atom, ArithmeticEvaluator(self.symbols, values), size)
        else:
            id = self.formula.id_of(atom)
            value = truth[id] if id is not None else np.zeros(size, dtype=bool)
        return value if literal.positive else ~value
