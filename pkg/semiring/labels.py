"""
Literal labels in the infinitesimal semiring.

A positive ``delta_interval`` on a continuous variable is labeled with the
density at the (forced) sample and order one; every other comparison with
its indicator at order zero. Derived atoms are neutral. The symbolic
labeler additionally labels choice selectors with their conditional
probability, which marginalizes the selected variable exactly.
"""
import logging
from typing import Dict, Tuple

import numpy as np

from core.exceptions import UnassignedVariable
from formulas.services import Choice, ComparisonLeaf, PropFormula, PropVar
from language.arithmetic import ArithmeticEvaluator, broadcast
from language.terms import Comparison, RandomVariableId
from sampling.services import AncestralSample, DistributionalDatabase

from .numbers import ONE, InfArray, InfNum

logger = logging.getLogger(__name__)

LabelPair = Tuple[InfArray, InfArray]


class IALWLabeler:
    """Labels of both polarities of every variable, one block of samples at a time"""

    name = 'ialw'

    def __init__(self, formula: PropFormula, database: DistributionalDatabase):
        self.formula = formula
        self.database = database

    def labels(self, sample: AncestralSample) -> Dict[int, LabelPair]:
        evaluator = ArithmeticEvaluator(self.database.symbols, sample.values)
        return {var.id: self.label(var, sample, evaluator) for var in self.formula.table}

    def label(self, var: PropVar, sample: AncestralSample, evaluator: ArithmeticEvaluator) -> LabelPair:
        size = sample.size
        if var.is_derived:
            neutral = InfArray.full(ONE, size)
            return neutral, neutral
        if isinstance(var.meta, Choice):
            return self.choice_label(var.meta, size)
        return self.comparison_label(var.meta.comparison, sample, evaluator)

    def choice_label(self, choice: Choice, size: int) -> LabelPair:
        raise UnassignedVariable(
            f'{choice} stands for an unsampled variable; it needs the symbolic labeler'
        )

    def comparison_label(self, comparison: Comparison, sample: AncestralSample,
                         evaluator: ArithmeticEvaluator) -> LabelPair:
        size = sample.size
        target = comparison.lhs
        if comparison.is_delta and isinstance(target, RandomVariableId) and self.database.is_continuous(target):
            if target not in sample.values:
                raise UnassignedVariable(f'Random variable {target} has no value in this sample')
            pdf = self.database.density(target, sample.values[target], sample.values, size)
            return InfArray.of(pdf, 1), InfArray.full(ONE, size)
        indicator = broadcast(evaluator.compare(comparison), size).astype(float)
        return InfArray.of(indicator, 0), InfArray.of(1.0 - indicator, 0)


class SIALWLabeler(IALWLabeler):
    """Choice selectors get their conditional probability; everything else as IALW"""

    name = 'sialw'

    def choice_label(self, choice: Choice, size: int) -> LabelPair:
        q = choice.probability
        return InfArray.full(InfNum(q, 0), size), InfArray.full(InfNum(1.0 - q, 0), size)


def labeler_for(formula: PropFormula, database: DistributionalDatabase, symbolic: bool = True) -> IALWLabeler:
    cls = SIALWLabeler if symbolic else IALWLabeler
    return cls(formula, database)


def label_literal(labeler: IALWLabeler, var: PropVar, positive: bool, sample: AncestralSample) -> InfArray:
    """Label of a single literal over a block"""
    evaluator = ArithmeticEvaluator(labeler.database.symbols, sample.values)
    pair = labeler.label(var, sample, evaluator)
    return pair[0] if positive else pair[1]
