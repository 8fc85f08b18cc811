import csv
import json
import math
import random
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from scipy.stats import norm, poisson

from circuits.services import Circuit
from core.config import RunConfig
from core.exceptions import (
    EnumerationBudgetExceeded, InferenceError, NoAcceptedSamples, NonzeroResidualOrder,
    NotFinitelyEnumerable, ZeroProbabilityEvidence,
)
from language.parser import parse_program
from language.services import load_program
from sampling.services import AncestralSampler
from semiring.labels import IALWLabeler, labeler_for
from semiring.numbers import InfArray, InfNum

from .oracles import dc1_check, enumerate_oracle, rejection_oracle
from .services import (
    InferenceEngine, Moments, combine, evaluate_nodes, finish, ialw_accumulate, prob_alw, run_sampling,
)

OVERLAPPING = """\
0.5::a.
0.5::b.
x ~ normal(0,1) :- a.
x ~ normal(5,1) :- b.
query(x > 2).
"""


def reference(name: str):
    return load_program(settings.PROGRAMS_DIR / name)


def config(**overrides) -> RunConfig:
    overrides.setdefault('jobs', 1)
    return RunConfig.from_settings(**overrides)


def answers(program, **overrides):
    return {result.query: result for result in InferenceEngine(program, config(**overrides)).answer()}


def core_of(program, **overrides):
    engine = InferenceEngine(program, config(**overrides))
    return engine.desugar(engine.ground())


MIXTURE_OBSERVATION = """\
19/20::isdensity.
17/20::perfect.
g ~ uniform(0,4) :- isdensity.
g ~ delta(4.0) :- not isdensity, perfect.
g ~ delta(0.0) :- not isdensity, not perfect.
query(isdensity).
observation(g, 2).
"""

COMPARISONS = ('{a} =:= {value}', '{a} >= {value}', '{a} < {value}', '{a} + {b} > {total}')


def finite(rng: random.Random) -> str:
    low = round(rng.uniform(0.1, 0.4), 2)
    mid = round(rng.uniform(0.1, 0.4), 2)
    return f'finite([{low}:1, {mid}:2, {round(1 - low - mid, 2)}:3])'


def random_literal(rng: random.Random, atoms, numbers) -> str:
    negation = 'not ' if rng.random() < 0.3 else ''
    if numbers and rng.random() < 0.4:
        comparison = rng.choice(COMPARISONS).format(
            a=rng.choice(numbers), b=rng.choice(numbers), value=rng.randint(1, 3), total=rng.randint(2, 5),
        )
        return negation + comparison
    return negation + rng.choice(atoms)


def random_structure(rng: random.Random) -> str:
    """A stratified discrete program over at most eight random variables"""
    facts = [f'f{index}' for index in range(1, rng.randint(2, 3) + 1)]
    lines = [f'{round(rng.uniform(0.1, 0.9), 2)}::{fact}.' for fact in facts]
    atoms = list(facts)
    if rng.random() < 0.7:
        body = f' :- {rng.choice(facts)}' if rng.random() < 0.5 else ''
        lines.append(f'{round(rng.uniform(0.1, 0.5), 2)}::c1; {round(rng.uniform(0.1, 0.45), 2)}::c2{body}.')
        atoms += ['c1', 'c2']
    numbers = ['k1', 'k2'][:rng.randint(1, 2)]
    for number in numbers:
        if rng.random() < 0.5:
            lines.append(f'{number} ~ {finite(rng)}.')
        else:
            guard = rng.choice(facts)
            lines.append(f'{number} ~ {finite(rng)} :- {guard}.')
            lines.append(f'{number} ~ {finite(rng)} :- not {guard}.')
    derived = []
    for index in range(1, rng.randint(2, 4) + 1):
        for _ in range(rng.randint(1, 2)):
            body = [random_literal(rng, atoms + derived, numbers) for _ in range(rng.randint(1, 3))]
            lines.append(f'd{index} :- {", ".join(body)}.')
        derived.append(f'd{index}')
    lines += [f'query({atom}).' for atom in derived + [rng.choice(facts)]]
    for _ in range(rng.randint(0, 2)):
        lines.append(f'evidence({rng.choice(derived + facts)}, {rng.choice(["true", "false"])}).')
    return '\n'.join(lines) + '\n'


def closed_form_hybrid_machines() -> float:
    cool = norm.cdf(25.0, loc=20.0, scale=5.0)
    return (cool + (1 - cool) * 0.99 * 0.95) / (cool + (1 - cool) * 0.95)


def closed_form_sweets() -> float:
    red = np.arange(16, 200)
    favorite = poisson.pmf(red, 10) * (0.5 * poisson.sf(4, red) + 0.5 * poisson.sf(4, 2 * red))
    return 0.5 * float(favorite.sum())


class RatioTests(SimpleTestCase):

    def test_moments_and_confidence_interval(self):
        numerator = InfArray.of([1.0, 0.0, 1.0, 1.0])
        denominator = InfArray.of([1.0, 1.0, 1.0, 1.0])
        result = finish('q', Moments.of(numerator, denominator), 1, 4, 42, exact=False)
        self.assertAlmostEqual(result.probability, 0.75)
        spread = 3 - 2 * 0.75 * 3 + 0.75 ** 2 * 4
        self.assertAlmostEqual(result.ci_halfwidth, 1.96 * math.sqrt(spread) / 4)
        self.assertEqual(result.order, 0)

    def test_blocks_without_weight_do_not_set_the_order(self):
        weighted = Moments.of(InfArray([0.5, 1.5], [1, 1]), InfArray([1.0, 3.0], [1, 1]))
        empty = Moments.of(InfArray([0.0], [0]), InfArray([0.0], [0]))
        total = combine([empty, weighted])
        self.assertEqual((total.numerator_order, total.denominator_order), (1, 1))
        self.assertEqual((total.sn, total.sd), (2.0, 4.0))
        self.assertAlmostEqual(finish('q', total, 1, 3, 0, exact=False).probability, 0.5)

    def test_lower_order_blocks_win(self):
        total = combine([
            Moments.of(InfArray([2.0], [1]), InfArray([4.0], [1])),
            Moments.of(InfArray([1.0], [0]), InfArray([2.0], [0])),
        ])
        self.assertEqual((total.sn, total.sd, total.numerator_order), (1.0, 2.0, 0))

    def test_degenerate_ratios(self):
        with self.assertRaises(ZeroProbabilityEvidence):
            finish('q', Moments(sn=0.0, sd=0.0), 0, 1, 0, exact=True)
        with self.assertRaises(NonzeroResidualOrder):
            finish('q', Moments(numerator_order=1, denominator_order=0, sn=1.0, sd=1.0), 1, 1, 0, exact=False)
        zero = finish('q', Moments(sn=0.0, sd=2.0), 0, 0, 0, exact=True)
        self.assertEqual(zero.probability, 0.0)

    def test_result_formatting(self):
        exact = finish('q', Moments(sn=1.0, sd=4.0), 0, 0, 42, exact=True)
        self.assertEqual(str(exact), 'q: 0.25 (exact)')
        self.assertNotIn('ci_halfwidth', exact.as_dict())
        self.assertEqual(exact.as_dict()['denominator'], [4.0, 0])
        sampled = finish('q', Moments.of(InfArray.of([1.0, 0.0]), InfArray.of([1.0, 1.0])), 1, 2, 7, exact=False)
        self.assertIn('± ', str(sampled))
        self.assertIn('(2 samples, seed 7)', str(sampled))


class ReferenceProgramTests(SimpleTestCase):

    def test_ball_is_exact(self):
        result = answers(reference('ball.pl'))['material(wood)']
        self.assertAlmostEqual(result.probability, 0.16)
        self.assertTrue(result.exact)
        self.assertEqual(result.samples, 0)
        self.assertEqual(result.stochastic_leaves, 0)

    def test_machines_is_exact(self):
        result = answers(reference('machines.pl'))['works(1)']
        self.assertAlmostEqual(result.probability, 0.9881 / 0.99, places=9)
        self.assertTrue(result.exact)

    def test_hybrid_machines(self):
        result = answers(reference('machines_hybrid.pl'), samples=100_000)['works(1)']
        self.assertFalse(result.exact)
        self.assertEqual(result.samples, 100_000)
        self.assertEqual(result.stochastic_leaves, 1)
        self.assertAlmostEqual(closed_form_hybrid_machines(), 0.998481, places=6)
        self.assertLess(abs(result.probability - closed_form_hybrid_machines()), 3 * result.ci_halfwidth)
        self.assertLess(result.ci_halfwidth, 0.001)

    def test_sweets_against_truncated_poisson_sums(self):
        (result,) = answers(reference('sweets.pl'), samples=100_000, seed=17).values()
        self.assertFalse(result.exact)
        self.assertLess(abs(result.probability - closed_form_sweets()), 3 * result.ci_halfwidth)

    def test_mixture_with_point_mass_components(self):
        program = parse_program(MIXTURE_OBSERVATION)
        exact = answers(program)['isdensity']
        self.assertTrue(exact.exact)
        self.assertAlmostEqual(exact.probability, 1.0, places=12)
        self.assertEqual(exact.denominator.order, 1)
        sampled = answers(program, samples=2000, symbolic=False)['isdensity']
        self.assertFalse(sampled.exact)
        self.assertAlmostEqual(sampled.probability, 1.0, places=12)

    def test_negated_comparison_matches_its_complement(self):
        program = parse_program('x ~ uniform(0,4).\na :- not x < 2.\nb :- x >= 2.\nquery(a).\nquery(b).\n')
        results = answers(program, samples=20000, seed=9)
        self.assertEqual(results['a'].probability, results['b'].probability)
        self.assertAlmostEqual(results['a'].probability, 0.5, delta=0.02)

    def test_gpa_point_masses(self):
        results = answers(reference('gpa.pl'), samples=2000)
        self.assertAlmostEqual(results['american'].probability, 1.0)
        self.assertEqual(results['indian'].probability, 0.0)

    def test_window_overlapping_disjunctions(self):
        results = answers(reference('window.pl'))
        self.assertAlmostEqual(results['effect(broken)'].probability, 0.76)
        self.assertAlmostEqual(results['effect(none)'].probability, 0.46)
        self.assertTrue(results['effect(none)'].exact)

    def test_color_of_a_missing_object(self):
        results = answers(reference('color.pl'))
        self.assertAlmostEqual(results['not_red'].probability, 4 / 9)
        self.assertAlmostEqual(results['not_red_either'].probability, 4 / 9)

    def test_temperature(self):
        result = answers(reference('temperature.pl'), samples=20000)['works(1)']
        below = 0.2 * 0.3445783 + 0.8 * 0.8413447
        self.assertAlmostEqual(result.probability, 1 - 0.01 * (1 - below), delta=0.003)

    def test_comparison_queries(self):
        results = answers(parse_program('x ~ uniform(0,4).\nquery(x > 3).'), samples=20000)
        self.assertAlmostEqual(results['x>3'].probability, 0.25, delta=0.02)


class CircuitValueTests(SimpleTestCase):

    def setUp(self):
        prepared = InferenceEngine(reference('ball.pl'), config(symbolic=False)).prepare()
        self.formula = prepared.formula
        self.sample = AncestralSampler(prepared.database, prepared.forced, seed=7).block(0, 64)
        self.labels = IALWLabeler(prepared.formula, prepared.database).labels(self.sample)
        (self.material,) = [var for var in prepared.database.order if var.name == 'v1']

    def leaf(self, name: str):
        for var in self.formula.leaves:
            comparison = var.meta.comparison
            if comparison.is_delta and comparison.lhs.name == name:
                return var.id
        raise AssertionError(f'no observation of {name}')

    def material_leaf(self, outcome: float):
        values = self.sample.values[self.material]
        for var in self.formula.leaves:
            comparison = var.meta.comparison
            if comparison.is_delta or [rv.name for rv in var.random_variables] != ['v1']:
                continue
            if np.array_equal(self.labels[var.id][0].reals == 1.0, values == outcome):
                return var.id
        raise AssertionError(f'no leaf selects v1={outcome}')

    def test_node_values_of_the_mixture_circuit(self):
        metal, wood = self.leaf('v2'), self.leaf('v3')
        circuit = Circuit(var.id for var in self.formula.table)
        first = circuit.literal(metal, False)
        second = circuit.conjunction([circuit.literal(wood), circuit.literal(self.material_leaf(1.0))])
        third = circuit.conjunction([first, second])
        fourth = circuit.disjunction([second, circuit.literal(self.material_leaf(2.0))])
        fifth = circuit.conjunction([circuit.literal(metal), fourth])
        circuit.root = sixth = circuit.disjunction([third, fifth])
        values = evaluate_nodes(circuit, self.labels, self.sample.size)

        expected = {
            2.0: [(1.0, 0), (0.0, 1), (0.0, 1), (1.0, 0), (1.728, 1), (1.728, 1)],
            1.0: [(1.0, 0), (0.768, 1), (0.768, 1), (0.768, 1), (1.728 * 0.768, 2), (0.768, 1)],
        }
        nodes = [first, second, third, fourth, fifth, sixth]
        outcomes = self.sample.values[self.material]
        for outcome, row_values in expected.items():
            rows = np.flatnonzero(outcomes == outcome)
            self.assertTrue(rows.size)
            for number, (node, (real, order)) in enumerate(zip(nodes, row_values), 1):
                for row in rows:
                    with self.subTest(node=number, material=outcome, row=int(row)):
                        self.assertTrue(values[node].item(row).isclose(InfNum(real, order)), values[node].item(row))


class ConvergenceTests(SimpleTestCase):

    def test_error_shrinks_with_the_square_root_of_the_samples(self):
        engine = InferenceEngine(reference('machines_hybrid.pl'), config())
        compiled = engine.compile(engine.prepare())
        truth = closed_form_hybrid_machines()
        sizes = [1_000, 10_000, 100_000]
        errors = []
        for size in sizes:
            estimates = [run_sampling(compiled, config(samples=size, seed=seed))[0].probability
                         for seed in range(100, 130)]
            errors.append(math.sqrt(np.mean((np.array(estimates) - truth) ** 2)))
        slope, _ = np.polyfit(np.log10(sizes), np.log10(errors), 1)
        self.assertAlmostEqual(slope, -0.5, delta=0.15)


class OracleAgreementTests(SimpleTestCase):

    def test_exact_answers_match_enumeration(self):
        for name in ('machines.pl', 'window.pl', 'color.pl'):
            with self.subTest(program=name):
                program = reference(name)
                engine = answers(program)
                for oracle in enumerate_oracle(core_of(program), config()):
                    self.assertTrue(engine[oracle.query].exact)
                    self.assertAlmostEqual(engine[oracle.query].probability, oracle.probability, places=9)

    def test_random_discrete_programs_match_enumeration(self):
        checked = 0
        for seed in range(50):
            text = random_structure(random.Random(seed))
            program = parse_program(text)
            with self.subTest(seed=seed, program=text):
                try:
                    oracle = enumerate_oracle(core_of(program), config())
                except ZeroProbabilityEvidence:
                    with self.assertRaises(ZeroProbabilityEvidence):
                        answers(program)
                    continue
                self.assertLessEqual(len(core_of(program).facts), 8)
                engine = answers(program)
                self.assertEqual(sorted(engine), sorted(result.query for result in oracle))
                for result in oracle:
                    self.assertTrue(engine[result.query].exact)
                    self.assertAlmostEqual(engine[result.query].probability, result.probability, places=9)
                checked += 1
        self.assertGreater(checked, 25)

    def test_rejection_matches_sampling_without_marginalization(self):
        for name in ('sweets.pl', 'machines_hybrid.pl'):
            with self.subTest(program=name):
                program = reference(name)
                engine = answers(program, samples=3000, seed=11, block_size=512, symbolic=False)
                for oracle in rejection_oracle(core_of(program), 3000, seed=11, block_size=512):
                    self.assertAlmostEqual(engine[oracle.query].probability, oracle.probability, places=12)

    def test_marginalization_agrees_with_rejection(self):
        program = reference('sweets.pl')
        (engine,) = answers(program, samples=20000, seed=3).values()
        (oracle,) = rejection_oracle(core_of(program), 20000, seed=4)
        self.assertLess(abs(engine.probability - oracle.probability),
                        3 * (engine.ci_halfwidth + oracle.ci_halfwidth))

    def test_interval_shrinks_with_more_samples(self):
        program = reference('machines_hybrid.pl')
        few = answers(program, samples=2000)['works(1)']
        many = answers(program, samples=32000)['works(1)']
        self.assertLess(many.ci_halfwidth, few.ci_halfwidth)

    def test_enumeration_limits(self):
        with self.assertRaises(NotFinitelyEnumerable):
            enumerate_oracle(core_of(reference('machines_hybrid.pl')), config())
        with self.assertRaises(EnumerationBudgetExceeded):
            enumerate_oracle(core_of(reference('machines.pl')), config(enumeration_cap=2))

    def test_rejection_refuses_observations(self):
        with self.assertRaises(InferenceError):
            rejection_oracle(core_of(reference('ball.pl')), 100)


class EvidenceTests(SimpleTestCase):
    IMPOSSIBLE = '0.3::a.\nb :- a.\nquery(a).\nevidence(a, true).\nevidence(b, false).\n'

    def test_impossible_evidence(self):
        with self.assertRaises(ZeroProbabilityEvidence):
            answers(parse_program(self.IMPOSSIBLE))
        with self.assertRaises(ZeroProbabilityEvidence):
            enumerate_oracle(core_of(parse_program(self.IMPOSSIBLE)), config())
        with self.assertRaises(NoAcceptedSamples):
            rejection_oracle(core_of(parse_program(self.IMPOSSIBLE)), 100)

    def test_impossible_query(self):
        (result,) = answers(parse_program('0.3::a.\nb :- a, not a.\nquery(b).')).values()
        self.assertEqual(result.probability, 0.0)
        self.assertTrue(result.exact)


class SamplingRunTests(SimpleTestCase):

    def test_answers_do_not_depend_on_workers(self):
        program = reference('machines_hybrid.pl')
        serial = answers(program, samples=4096, block_size=1024, jobs=1)['works(1)']
        parallel = answers(program, samples=4096, block_size=1024, jobs=2)['works(1)']
        self.assertEqual(serial.probability, parallel.probability)
        self.assertEqual(serial.ci_halfwidth, parallel.ci_halfwidth)

    def test_seed_changes_the_estimate(self):
        program = reference('machines_hybrid.pl')
        first = answers(program, samples=1000, seed=1)['works(1)']
        second = answers(program, samples=1000, seed=2)['works(1)']
        self.assertNotEqual(first.numerator, second.numerator)

    def test_ratio_over_explicit_samples(self):
        run = config(samples=2048, block_size=1024, seed=5)
        engine = InferenceEngine(reference('machines_hybrid.pl'), run)
        prepared = engine.prepare()
        compiled = engine.compile(prepared)
        sampler = AncestralSampler(prepared.database, prepared.forced, run.seed)
        samples = [sampler.block(index, size) for index, size in sampler.blocks(run.samples, run.block_size)]
        labeler = labeler_for(prepared.formula, prepared.database)
        result = prob_alw(compiled.denominator, compiled.numerators[0], samples, labeler, 'works(1)', run.seed,
                          stochastic_leaves=len(prepared.stochastic_leaves))
        (expected,) = engine.answer()
        self.assertAlmostEqual(result.probability, expected.probability, places=12)
        self.assertEqual(result.samples, 2048)
        denominator = ialw_accumulate(compiled.denominator, samples, labeler)
        self.assertAlmostEqual(denominator.real, expected.denominator.real)

    def test_stochastic_leaves(self):
        engine = InferenceEngine(reference('machines_hybrid.pl'), config())
        prepared = engine.prepare()
        (leaf,) = prepared.stochastic_leaves
        self.assertEqual(str(prepared.formula.var(leaf)), 'v1<25.0')
        self.assertEqual(InferenceEngine(reference('ball.pl'), config()).prepare().stochastic_leaves, [])


class DcCheckTests(SimpleTestCase):

    def test_overlapping_clauses_are_reported(self):
        (diagnostic,) = dc1_check(core_of(parse_program(OVERLAPPING)), samples=2000)
        self.assertEqual(diagnostic.code, 'dc1')
        self.assertEqual(diagnostic.severity, 'error')

    def test_exclusive_clauses_pass(self):
        self.assertEqual(dc1_check(core_of(reference('sweets.pl')), samples=2000), [])
        self.assertEqual(dc1_check(core_of(reference('ball.pl')), samples=2000), [])


class CommandTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name: str) -> str:
        return str(settings.PROGRAMS_DIR / name)

    def write(self, text: str) -> str:
        path = Path(self.directory.name) / 'program.pl'
        path.write_text(text, encoding='utf-8')
        return str(path)

    def call(self, *args) -> str:
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_infer_json(self):
        (result,) = json.loads(self.call('infer', self.path('ball.pl'), '--format', 'json'))
        self.assertEqual(result['query'], 'material(wood)')
        self.assertAlmostEqual(result['probability'], 0.16)
        self.assertTrue(result['exact'])
        self.assertEqual(result['samples'], 0)

    def test_infer_text(self):
        output = self.call('infer', self.path('machines.pl'))
        self.assertIn('works(1): 0.998080808', output)
        self.assertIn('(exact)', output)

    def test_infer_with_observation_flag(self):
        path = self.write('3/10::wood; 7/10::metal.\nsize ~ beta(2,3) :- metal.\nsize ~ beta(4,2) :- wood.\n')
        (result,) = json.loads(self.call('infer', path, '--query', 'wood', '--observe', 'size=0.4',
                                         '--format', 'json'))
        self.assertAlmostEqual(result['probability'], 0.16)

    def test_trace_samples(self):
        trace = Path(self.directory.name) / 'trace.csv'
        self.call('infer', self.path('machines_hybrid.pl'), '--samples', '100', '--trace-samples', str(trace))
        with open(trace, newline='', encoding='utf-8') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(len(rows), 101)
        self.assertEqual(rows[0][0], 'sample')

    def test_no_symbolic_flag(self):
        (result,) = json.loads(self.call('infer', self.path('ball.pl'), '--no-symbolic', '--samples', '500',
                                         '--format', 'json'))
        self.assertFalse(result['exact'])
        self.assertEqual(result['samples'], 500)

    def test_oracles(self):
        results = json.loads(self.call('oracle', self.path('window.pl'), '--format', 'json'))
        self.assertEqual([result['method'] for result in results], ['enumerate', 'enumerate'])
        self.assertAlmostEqual(results[0]['probability'], 0.76)
        output = self.call('oracle', self.path('sweets.pl'), '--method', 'rejection', '--samples', '500')
        self.assertIn('of 500 accepted', output)
        with self.assertRaises(CommandError) as caught:
            self.call('oracle', self.path('ball.pl'), '--method', 'rejection')
        self.assertEqual(caught.exception.returncode, 1)

    def test_ground(self):
        data = json.loads(self.call('ground', self.path('machines.pl'), '--format', 'json'))
        self.assertEqual(data['queries'], ['works(1)'])
        self.assertIn('works(1) :- machine(1), cooling(1).', data['clauses'])
        self.assertIn('0.8::temperature(low).', self.call('ground', self.path('machines.pl')))

    def test_desugar_stages(self):
        self.assertIn('x1 ~ flip(0.5).', self.call('desugar', self.path('sweets.pl'), '--stage', 'facts'))
        self.assertIn('rv(red,v3) :- large.', self.call('desugar', self.path('sweets.pl'), '--stage', 'encoding'))
        core = self.call('desugar', self.path('sweets.pl'))
        self.assertIn('v5 ~ poisson(v3).', core)
        self.assertNotIn('rv(', core)

    def test_formula(self):
        data = json.loads(self.call('formula', self.path('machines_hybrid.pl'), '--format', 'json'))
        self.assertTrue(data['formula'][0].startswith('p formula'))
        self.assertEqual(len(data['stochastic_leaves']), 1)
        kinds = {variable['kind'] for variable in data['variables']}
        self.assertEqual(kinds, {'derived', 'comparison', 'choice'})
        plain = self.call('formula', self.path('machines_hybrid.pl'), '--no-symbolic')
        self.assertNotIn('choice', plain)

    def test_compile(self):
        dot = Path(self.directory.name) / 'circuits.dot'
        summary = json.loads(self.call('compile', self.path('machines.pl'), '--dot', str(dot), '--format', 'json'))
        self.assertEqual([entry['circuit'] for entry in summary], ['evidence', 'works(1)'])
        self.assertTrue(all(entry.get('deterministic', True) for entry in summary))
        text = dot.read_text(encoding='utf-8')
        self.assertTrue(text.startswith('digraph c0 {'))
        self.assertIn('digraph c1 {', text)

    def test_validate(self):
        self.assertIn('ok with 0 diagnostics', self.call('validate', self.path('window.pl')))
        out = StringIO()
        with self.assertRaises(CommandError) as caught:
            call_command('validate', self.write(OVERLAPPING), stdout=out, stderr=StringIO())
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('[dc1]', out.getvalue())
