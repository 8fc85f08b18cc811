"""
Independent answers used to cross-check the circuit-based engine: exact
enumeration for finite programs, rejection sampling for observation-free
tasks, and the sampled mutual-exclusivity check of distributional clauses.
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional

import numpy as np

from core.config import RunConfig
from core.exceptions import (
    Diagnostic, EnumerationBudgetExceeded, InferenceError, NoAcceptedSamples, NotFinitelyEnumerable,
    ZeroProbabilityEvidence,
)
from desugaring.services import GroundDfplpProgram, validate_core
from formulas.services import encode
from language.terms import RandomVariableId, format_term
from sampling.distributions import FINITE, check_parameters, outcome_weights
from sampling.services import AncestralSampler, DistributionalDatabase

from .worlds import WorldEvaluator

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass
class OracleResult:
    query: str
    probability: float
    method: str
    worlds: int = 0
    accepted: int = 0
    ci_halfwidth: Optional[float] = None

    def as_dict(self) -> Dict:
        result = {
            'query': self.query,
            'probability': self.probability,
            'method': self.method,
            'worlds': self.worlds,
        }
        if self.method == 'rejection':
            result['accepted'] = self.accepted
            result['ci_halfwidth'] = self.ci_halfwidth
        return result

    def __str__(self):
        text = f'{self.query}: {self.probability:.10g} ({self.method}'
        if self.ci_halfwidth is not None:
            text += f', ± {self.ci_halfwidth:.3g}, {self.accepted} of {self.worlds} accepted'
        return text + ')'


def _database(program: GroundDfplpProgram) -> DistributionalDatabase:
    return DistributionalDatabase(program.facts, validate_core(program), program.symbols, symbolic=False)


def enumerate_worlds(database: DistributionalDatabase, cap: int):
    """
    Every joint assignment of a finite program with its probability, as
    one block: ``(values, weights, size)``. Zero-probability worlds are
    dropped as soon as they appear.
    """
    values: Dict[RandomVariableId, np.ndarray] = {}
    weights = np.ones(1)
    size = 1
    for var in database.order:
        kind = database.kind(var)
        params = database.parameters(var, values, size)
        if kind == 'delta':
            values[var] = params[0].astype(float)
            continue
        if kind not in FINITE:
            raise NotFinitelyEnumerable(
                f'{var} ({format_term(var.origin)}) ~ {database.distributions[var]} has no finite support'
            )
        check_parameters(kind, params)
        branches = outcome_weights(kind, params, database.outcome_codes(var), size)
        if size * len(branches) > cap:
            raise EnumerationBudgetExceeded(
                f'Enumerating {var} would exceed {cap} worlds; raise DCPLP_ENUMERATION_CAP or sample instead'
            )
        keep = []
        new_weights = []
        outcome = []
        for value, branch in branches:
            mass = weights * branch
            rows = np.nonzero(mass > 0)[0]
            keep.append(rows)
            new_weights.append(mass[rows])
            outcome.append(np.full(len(rows), value))
        index = np.concatenate(keep)
        values = {known: column[index] for known, column in values.items()}
        values[var] = np.concatenate(outcome)
        weights = np.concatenate(new_weights)
        size = len(weights)
    return values, weights, size


def enumerate_oracle(program: GroundDfplpProgram, config: Optional[RunConfig] = None) -> List[OracleResult]:
    """Exact conditional probabilities by summing over all worlds"""
    config = config or RunConfig.from_settings()
    database = _database(program)
    formula = encode(program)
    values, weights, size = enumerate_worlds(database, config.enumeration_cap)
    evaluator = WorldEvaluator(formula, program.symbols)
    truth = evaluator.truth(values, size)
    accepted = weights * evaluator.evidence(truth, size)
    total = float(np.sum(accepted))
    if total == 0:
        raise ZeroProbabilityEvidence('The evidence holds in no world of positive probability')
    logger.info(f'Enumerated {size} worlds, evidence probability {total:.10g}')

    results = []
    for query in program.task.queries:
        hits = float(np.sum(accepted * truth[formula.id_of(query)]))
        results.append(OracleResult(program.task.label(query), hits / total, 'enumerate', size))
    return results


def rejection_oracle(program: GroundDfplpProgram, samples: int, seed: int = 42,
                     block_size: int = 1024) -> List[OracleResult]:
    """
    Fraction of sampled worlds satisfying the evidence in which the query
    holds. Draws the same stream as the engine with all variables sampled.
    """
    if program.task.observations:
        raise InferenceError('Observations have probability zero; rejection sampling cannot condition on them')
    database = _database(program)
    formula = encode(program)
    evaluator = WorldEvaluator(formula, program.symbols)
    sampler = AncestralSampler(database, {}, seed)
    ids = [formula.id_of(query) for query in program.task.queries]
    accepted = 0
    hits = np.zeros(len(ids), dtype=np.int64)
    for index, size in sampler.blocks(samples, block_size):
        sample = sampler.block(index, size)
        truth = evaluator.truth(sample.values, size)
        mask = evaluator.evidence(truth, size)
        accepted += int(np.sum(mask))
        for position, id in enumerate(ids):
            hits[position] += int(np.sum(mask & truth[id]))
    if accepted == 0:
        raise NoAcceptedSamples(f'None of the {samples} samples satisfies the evidence')
    logger.info(f'Rejection sampling accepted {accepted} of {samples} samples')

    results = []
    for position, query in enumerate(program.task.queries):
        p = hits[position] / accepted
        halfwidth = Z_95 * math.sqrt(p * (1 - p) / accepted)
        results.append(OracleResult(program.task.label(query), float(p), 'rejection', samples, accepted,
                                    halfwidth))
    return results


def dc1_check(program: GroundDfplpProgram, samples: int = 10000, seed: int = 42,
              block_size: int = 1024) -> List[Diagnostic]:
    """
    Sample worlds and report every pair of distributional clauses of one
    random term whose bodies hold in the same world.
    """
    contested = {term: entries for term, entries in program.contexts.items() if len(entries) > 1}
    if not contested:
        return []
    database = _database(program)
    formula = encode(program)
    evaluator = WorldEvaluator(formula, program.symbols)
    sampler = AncestralSampler(database, {}, seed)
    overlaps: Dict = {}
    for index, size in sampler.blocks(samples, block_size):
        sample = sampler.block(index, size)
        truth = evaluator.truth(sample.values, size)
        for term, entries in contested.items():
            holds = []
            for var, bodies in entries:
                active = np.zeros(size, dtype=bool)
                for body in bodies:
                    row = np.ones(size, dtype=bool)
                    for literal in body:
                        row &= evaluator.literal(literal, truth, sample.values, size)
                    active |= row
                holds.append((var, active))
            for (first, a), (second, b) in combinations(holds, 2):
                count = int(np.sum(a & b))
                if count:
                    key = (term, first, second)
                    overlaps[key] = overlaps.get(key, 0) + count

    diagnostics = []
    for (term, first, second), count in overlaps.items():
        diagnostics.append(Diagnostic(
            'dc1',
            f'Distributional clauses for {format_term(term)} overlap: the bodies defining {first} and '
            f'{second} hold together in {count} of {samples} sampled worlds',
            severity='error',
        ))
    for diagnostic in diagnostics:
        logger.warning(str(diagnostic))
    return diagnostics
