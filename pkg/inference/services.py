"""
Conditional probabilities by infinitesimal algebraic likelihood weighting.

For every query the evidence formula and its conjunction with the query are
compiled to circuits, evaluated in the infinitesimal semiring on one shared
set of ancestral samples, and divided. Sampling runs in blocks with one
counter-based random stream per block; blocks may be spread over worker
processes and are always combined in block order.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from circuits.services import Circuit, compile_smooth
from core.config import RunConfig
from core.exceptions import InvalidProgram, NonzeroResidualOrder, ZeroProbabilityEvidence
from desugaring.graph import DependencyGraph
from desugaring.services import GroundDfplpProgram, desugar, validate_core
from formulas.services import ComparisonLeaf, PropFormula, conjoin_query, encode, symbolize
from grounding.services import GroundProgram, relevant_ground_program
from language.services import validate_syntax
from language.terms import Program, QueryTask
from sampling.services import (
    AncestralSample, AncestralSampler, DistributionalDatabase, forced_assignments, write_trace,
)
from semiring.labels import IALWLabeler, LabelPair, labeler_for
from semiring.numbers import ONE, ZERO, InfArray, InfNum

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass
class InferenceResult:
    query: str
    probability: float
    numerator: InfNum
    denominator: InfNum
    stochastic_leaves: int
    samples: int
    seed: int
    exact: bool
    order: int = 0
    ci_halfwidth: Optional[float] = None

    def as_dict(self) -> Dict:
        result = {
            'query': self.query,
            'probability': self.probability,
            'exact': self.exact,
            'order': self.order,
            'samples': self.samples,
            'seed': self.seed,
        }
        if self.ci_halfwidth is not None:
            result['ci_halfwidth'] = self.ci_halfwidth
        result['numerator'] = [self.numerator.real, self.numerator.order]
        result['denominator'] = [self.denominator.real, self.denominator.order]
        result['stochastic_leaves'] = self.stochastic_leaves
        return result

    def __str__(self):
        text = f'{self.query}: {self.probability:.10g}'
        if self.exact:
            return f'{text} (exact)'
        if self.ci_halfwidth is not None:
            text += f' ± {self.ci_halfwidth:.3g}'
        return f'{text} ({self.samples} samples, seed {self.seed})'


def evaluate_nodes(circuit: Circuit, labels: Dict[int, LabelPair], size: int) -> Dict[int, InfArray]:
    """Value of every node below the root, each node evaluated once"""
    values: Dict[int, InfArray] = {}
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind == 'literal':
            values[id] = labels[node.var][0 if node.positive else 1]
        elif node.kind == 'and':
            result = values[node.children[0]]
            for child in node.children[1:]:
                result = result.mul(values[child])
            values[id] = result
        elif node.kind == 'or':
            result = values[node.children[0]]
            for child in node.children[1:]:
                result = result.add(values[child])
            values[id] = result
        else:
            values[id] = InfArray.full(ONE if node.kind == 'true' else ZERO, size)
    return values


def eval_circuit(circuit: Circuit, labels: Dict[int, LabelPair], size: int) -> InfArray:
    return evaluate_nodes(circuit, labels, size)[circuit.root]


def ialw_accumulate(circuit: Circuit, samples: Iterable[AncestralSample], labeler: IALWLabeler) -> InfNum:
    """Sum over all sample rows in the semiring"""
    folds = [eval_circuit(circuit, labeler.labels(sample), sample.size).fold() for sample in samples]
    return InfArray([f.real for f in folds], [f.order for f in folds]).fold()


@dataclass
class Moments:
    """Per-block sums of numerator and denominator weights at their lowest order"""

    numerator_order: int = 0
    denominator_order: int = 0
    sn: float = 0.0
    sd: float = 0.0
    snn: float = 0.0
    sdd: float = 0.0
    snd: float = 0.0

    @classmethod
    def of(cls, numerator: InfArray, denominator: InfArray) -> 'Moments':
        n_order = numerator.leading_order()
        d_order = denominator.leading_order()
        n = numerator.at_order(n_order)
        d = denominator.at_order(d_order)
        return cls(n_order, d_order, float(np.sum(n)), float(np.sum(d)),
                   float(np.dot(n, n)), float(np.dot(d, d)), float(np.dot(n, d)))


def _leading(moments: Sequence[Moments], order: str, total: str) -> int:
    weighted = [getattr(m, order) for m in moments if getattr(m, total) != 0]
    return min(weighted or [getattr(m, order) for m in moments])


def combine(moments: Sequence[Moments]) -> Moments:
    """Combine block moments in block order; blocks above the lowest order drop out"""
    n_order = _leading(moments, 'numerator_order', 'sn')
    d_order = _leading(moments, 'denominator_order', 'sd')
    total = Moments(n_order, d_order)
    for m in moments:
        n_ok = m.numerator_order == n_order
        d_ok = m.denominator_order == d_order
        if n_ok:
            total.sn += m.sn
            total.snn += m.snn
        if d_ok:
            total.sd += m.sd
            total.sdd += m.sdd
        if n_ok and d_ok:
            total.snd += m.snd
    return total


def finish(query: str, moments: Moments, stochastic_leaves: int, samples: int, seed: int,
           exact: bool) -> InferenceResult:
    """Divide the accumulated numerator by the denominator"""
    numerator = InfNum(moments.sn, moments.numerator_order)
    denominator = InfNum(moments.sd, moments.denominator_order)
    if denominator.real == 0:
        raise ZeroProbabilityEvidence(f'The evidence has probability zero (accumulated weight {denominator})')
    if numerator.real == 0:
        return InferenceResult(query, 0.0, numerator, denominator, stochastic_leaves, samples, seed, exact,
                               0, None if exact else 0.0)
    ratio = numerator / denominator
    if ratio.order != 0:
        raise NonzeroResidualOrder(
            f'P({query}) = {numerator} / {denominator} has order {ratio.order}; '
            f'the query and the observations interact in an impossible way'
        )
    probability = float(np.clip(ratio.real, 0.0, 1.0))
    halfwidth = None
    if not exact:
        spread = moments.snn - 2 * ratio.real * moments.snd + ratio.real ** 2 * moments.sdd
        halfwidth = Z_95 * math.sqrt(max(spread, 0.0)) / moments.sd
    return InferenceResult(query, probability, numerator, denominator, stochastic_leaves, samples, seed,
                           exact, ratio.order, halfwidth)


def prob_alw(denominator: Circuit, numerator: Circuit, samples: Sequence[AncestralSample],
             labeler: IALWLabeler, query: str = '', seed: int = 0, exact: bool = False,
             stochastic_leaves: int = 0) -> InferenceResult:
    """Ratio of the numerator and denominator circuits over the same samples"""
    moments = []
    for sample in samples:
        labels = labeler.labels(sample)
        moments.append(Moments.of(eval_circuit(numerator, labels, sample.size),
                                  eval_circuit(denominator, labels, sample.size)))
    count = sum(sample.size for sample in samples)
    return finish(query, combine(moments), stochastic_leaves, 0 if exact else count, seed, exact)


@dataclass
class PreparedTask:
    """Every pipeline stage of one task up to, not including, compilation"""

    ground: GroundProgram
    core: GroundDfplpProgram
    graph: DependencyGraph
    database: DistributionalDatabase
    completion: PropFormula
    formula: PropFormula
    forced: Dict
    queries: List[Tuple[str, object]]
    diagnostics: List = field(default_factory=list)

    @property
    def stochastic_leaves(self) -> List[int]:
        """Leaves whose label depends on a sampled variable"""
        database = self.database
        stochastic = {
            var for var in database.order
            if var not in self.forced and not database.is_symbolic(var) and database.kind(var) != 'delta'
        }
        leaves = []
        for var in self.formula.leaves:
            if not isinstance(var.meta, ComparisonLeaf):
                continue
            if stochastic.intersection(self.graph.closure(var.random_variables)):
                leaves.append(var.id)
        return leaves


@dataclass
class CompiledTask:
    prepared: PreparedTask
    denominator: Circuit
    numerators: List[Circuit]


class InferenceEngine:
    """Runs the pipeline stages for one program under one configuration"""

    def __init__(self, program: Program, config: Optional[RunConfig] = None):
        self.program = program
        self.config = config or RunConfig.from_settings()

    def validate(self) -> List:
        diagnostics = validate_syntax(self.program)
        errors = [d for d in diagnostics if d.severity == 'error']
        if errors:
            first = errors[0]
            raise InvalidProgram(
                f'{first.message} ({len(errors)} error(s) in total)', diagnostics, first.line
            )
        for diagnostic in diagnostics:
            logger.warning(str(diagnostic))
        return diagnostics

    def ground(self, task: Optional[QueryTask] = None) -> GroundProgram:
        return relevant_ground_program(self.program, task, self.config.memo_cap)

    def desugar(self, ground: GroundProgram) -> GroundDfplpProgram:
        return desugar(ground, self.config.expansion_cap)

    def prepare(self, task: Optional[QueryTask] = None, symbolic: Optional[bool] = None) -> PreparedTask:
        symbolic = self.config.symbolic if symbolic is None else symbolic
        diagnostics = self.validate()
        ground = self.ground(task)
        core = self.desugar(ground)
        graph = validate_core(core)
        diagnostics = diagnostics + graph.diagnostics
        database = DistributionalDatabase(core.facts, graph, core.symbols, symbolic)
        completion = encode(core)
        formula = symbolize(completion, database.distributions, database.symbolic_variables, core.symbols)
        forced = forced_assignments(formula, database)
        queries = [(core.task.label(query), query) for query in core.task.queries]
        return PreparedTask(ground, core, graph, database, completion, formula, forced, queries, diagnostics)

    def compile(self, prepared: PreparedTask) -> CompiledTask:
        formula = prepared.formula
        config = self.config
        denominator = compile_smooth(formula, None, config.node_cap, config.variable_cap)
        numerators = []
        for label, query in prepared.queries:
            root = conjoin_query(formula, query).root
            numerators.append(compile_smooth(formula, root, config.node_cap, config.variable_cap))
        return CompiledTask(prepared, denominator, numerators)

    def answer(self, task: Optional[QueryTask] = None, trace: Optional[str] = None) -> List[InferenceResult]:
        compiled = self.compile(self.prepare(task))
        return run_sampling(compiled, self.config, trace)


# Worker state, set once per process
_STATE: Dict = {}


def _init_worker(state: Dict):
    _STATE.clear()
    _STATE.update(state)


def _evaluate_block(index: int, size: int, state: Optional[Dict] = None):
    state = state or _STATE
    sampler: AncestralSampler = state['sampler']
    labeler: IALWLabeler = state['labeler']
    sample = sampler.block(index, size)
    labels = labeler.labels(sample)
    denominator = eval_circuit(state['denominator'], labels, size)
    moments = [Moments.of(eval_circuit(circuit, labels, size), denominator) for circuit in state['numerators']]
    return moments, (sample if state.get('trace') else None)


def _evaluate_block_job(job: Tuple[int, int]):
    return _evaluate_block(*job)


def run_sampling(compiled: CompiledTask, config: RunConfig, trace: Optional[str] = None) -> List[InferenceResult]:
    prepared = compiled.prepared
    stochastic = len(prepared.stochastic_leaves)
    exact = stochastic == 0
    samples = 1 if exact else config.samples
    sampler = AncestralSampler(prepared.database, prepared.forced, config.seed)
    labeler = labeler_for(prepared.formula, prepared.database, prepared.database.symbolic)
    state = {
        'sampler': sampler,
        'labeler': labeler,
        'denominator': compiled.denominator,
        'numerators': compiled.numerators,
        'trace': bool(trace),
    }
    jobs = list(sampler.blocks(samples, config.block_size))
    workers = min(config.workers, len(jobs))
    logger.info(
        f'Evaluating {len(compiled.numerators)} queries on {samples} samples '
        f'({len(jobs)} blocks, {workers} workers, {stochastic} stochastic leaves)'
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(state,)) as pool:
            outcomes = list(pool.map(_evaluate_block_job, jobs))
    else:
        outcomes = [_evaluate_block(index, size, state) for index, size in jobs]

    if trace:
        write_trace(trace, prepared.database, [sample for _, sample in outcomes])

    results = []
    for position, (label, _) in enumerate(prepared.queries):
        moments = combine([block[position] for block, _ in outcomes])
        result = finish(label, moments, stochastic, 0 if exact else samples, config.seed, exact)
        logger.info(f'P({label}) = {result.probability:.10g}')
        results.append(result)
    return results


def answer_task(program: Program, task: Optional[QueryTask] = None, config: Optional[RunConfig] = None,
                trace: Optional[str] = None) -> List[InferenceResult]:
    """Answer every query of the task (the program's own task by default)"""
    return InferenceEngine(program, config).answer(task, trace)
