import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from core.exceptions import ImpossibleObservation, MalformedObservation
from desugaring.graph import DependencyGraph
from desugaring.services import DistributionalFact
from formulas.services import ComparisonLeaf, PropFormula
from language.arithmetic import ArithmeticEvaluator, SymbolTable, broadcast, is_static
from language.terms import Constant, Distribution, Number, RandomVariableId, format_term

from .distributions import CONTINUOUS, COUNTABLE, FINITE, check_parameters, density, draw

logger = logging.getLogger(__name__)


class DistributionalDatabase:
    """Random variables of a ground program with their distributions and dependency graph"""

    def __init__(self, facts: Iterable[DistributionalFact], graph: DependencyGraph,
                 symbols: SymbolTable, symbolic: bool = True):
        self.facts = list(facts)
        self.graph = graph
        self.symbols = symbols
        self.symbolic = symbolic
        self.distributions: Dict[RandomVariableId, Distribution] = {fact.var: fact.dist for fact in self.facts}
        self.order: List[RandomVariableId] = graph.topological_order()
        self._codes: Dict[RandomVariableId, np.ndarray] = {}

    def __len__(self):
        return len(self.facts)

    def __contains__(self, var: RandomVariableId) -> bool:
        return var in self.distributions

    def kind(self, var: RandomVariableId) -> str:
        return self.distributions[var].kind

    def is_continuous(self, var: RandomVariableId) -> bool:
        return self.kind(var) in CONTINUOUS

    def is_countable(self, var: RandomVariableId) -> bool:
        return self.kind(var) in COUNTABLE

    def support(self, var: RandomVariableId) -> Optional[np.ndarray]:
        """Outcome codes of a finite-support variable, None otherwise"""
        kind = self.kind(var)
        if kind == 'flip':
            return np.array([1.0, 0.0])
        if kind in FINITE:
            return self.outcome_codes(var)
        return None

    def is_symbolic(self, var: RandomVariableId) -> bool:
        """Finite-support variables without children and with static parameters are marginalized exactly"""
        if not self.symbolic or self.kind(var) not in FINITE:
            return False
        if self.graph.children(var):
            return False
        return all(is_static(param) for param in self.distributions[var].parameter_expressions)

    @property
    def symbolic_variables(self) -> List[RandomVariableId]:
        return [var for var in self.order if self.is_symbolic(var)]

    def parents(self, var: RandomVariableId) -> List[RandomVariableId]:
        return self.graph.parents(var)

    def children(self, var: RandomVariableId) -> List[RandomVariableId]:
        return self.graph.children(var)

    def outcome_codes(self, var: RandomVariableId) -> np.ndarray:
        codes = self._codes.get(var)
        if codes is None:
            evaluator = ArithmeticEvaluator(self.symbols)
            codes = np.array([evaluator.evaluate(outcome) for outcome in self.distributions[var].outcomes],
                             dtype=float)
            self._codes[var] = codes
        return codes

    def parameters(self, var: RandomVariableId, values: Dict[RandomVariableId, np.ndarray],
                   size: int) -> List[np.ndarray]:
        """Parameter expressions evaluated row by row against sampled parent values"""
        evaluator = ArithmeticEvaluator(self.symbols, values)
        return [broadcast(evaluator.evaluate(param), size)
                for param in self.distributions[var].parameter_expressions]

    def density(self, var: RandomVariableId, x: np.ndarray, values: Dict[RandomVariableId, np.ndarray],
                size: int) -> np.ndarray:
        params = self.parameters(var, values, size)
        check_parameters(self.kind(var), params)
        return density(self.kind(var), params, broadcast(x, size), self.outcome_codes(var))


def forced_assignments(formula: PropFormula, database: DistributionalDatabase) -> Dict[RandomVariableId, float]:
    """
    Continuous variables observed through a ``delta_interval`` leaf take
    the observed value instead of being sampled.
    """
    forced: Dict[RandomVariableId, float] = {}
    evaluator = ArithmeticEvaluator(database.symbols)
    for var in formula.leaves:
        if not isinstance(var.meta, ComparisonLeaf) or not var.meta.comparison.is_delta:
            continue
        comparison = var.meta.comparison
        if not isinstance(comparison.lhs, RandomVariableId):
            raise MalformedObservation(
                f'{comparison}: only a random term can be observed, not {format_term(comparison.lhs)}'
            )
        if not isinstance(comparison.rhs, (Number, Constant)):
            raise MalformedObservation(f'{comparison}: the observed value must be a number')
        target = comparison.lhs
        if target not in database or not database.is_continuous(target):
            continue
        value = float(evaluator.evaluate(comparison.rhs))
        if target in forced and forced[target] != value:
            raise ImpossibleObservation(
                f'{target.name} ({format_term(target.origin)}) cannot be observed to be both '
                f'{forced[target]:g} and {value:g}'
            )
        forced[target] = value
    if forced:
        logger.info(f'Forcing {len(forced)} observed continuous variables')
    return forced


@dataclass
class AncestralSample:
    """A block of joint samples: ``values[var]`` holds one value per row"""

    values: Dict[RandomVariableId, np.ndarray]
    forced: FrozenSet[RandomVariableId]
    order: Tuple[RandomVariableId, ...]
    size: int
    block: int = 0

    def row(self, index: int) -> Dict[RandomVariableId, float]:
        return {var: float(self.values[var][index]) for var in self.order}


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one block; independent of how blocks are scheduled"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def draw_ancestral(database: DistributionalDatabase, forced: Dict[RandomVariableId, float],
                   rng: np.random.Generator, size: int, block: int = 0) -> AncestralSample:
    """Sample every variable parents first; forced variables consume no randomness"""
    values: Dict[RandomVariableId, np.ndarray] = {}
    for var in database.order:
        if var in forced:
            values[var] = np.full(size, forced[var])
            continue
        kind = database.kind(var)
        params = database.parameters(var, values, size)
        if kind != 'delta':
            check_parameters(kind, params)
        values[var] = draw(kind, params, database.outcome_codes(var), size, rng)
    return AncestralSample(values, frozenset(forced), tuple(database.order), size, block)


class AncestralSampler:
    def __init__(self, database: DistributionalDatabase, forced: Optional[Dict[RandomVariableId, float]] = None,
                 seed: int = 42):
        self.database = database
        self.forced = forced or {}
        self.seed = seed

    def block(self, index: int, size: int) -> AncestralSample:
        return draw_ancestral(self.database, self.forced, block_rng(self.seed, index), size, index)

    def blocks(self, samples: int, block_size: int):
        """Yield ``(index, size)`` pairs covering ``samples`` rows"""
        index = 0
        start = 0
        while start < samples:
            size = min(block_size, samples - start)
            yield index, size
            index += 1
            start += size


def trace_header(database: DistributionalDatabase) -> List[str]:
    return ['sample'] + [f'{var.name}:{format_term(var.origin)}' for var in database.order]


def write_trace(path: Union[str, Path], database: DistributionalDatabase,
                samples: Iterable[AncestralSample]) -> int:
    """Write one CSV row per sample; symbolic outcomes are written by name"""
    rows = 0
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(trace_header(database))
        for sample in samples:
            for index in range(sample.size):
                row = [rows]
                for var in database.order:
                    value = float(sample.values[var][index])
                    name = database.symbols.name(value) if database.kind(var) in FINITE else None
                    has_symbols = any(not isinstance(o, Number) for o in database.distributions[var].outcomes)
                    row.append(name if has_symbols and name is not None else repr(value))
                writer.writerow(row)
                rows += 1
    logger.info(f'Wrote {rows} samples to {path}')
    return rows
