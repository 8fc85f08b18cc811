import csv
import tempfile
from pathlib import Path

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from scipy import integrate

from core.exceptions import ImpossibleObservation, InvalidParameter
from desugaring.services import desugar, validate_core
from formulas.services import encode
from grounding.services import relevant_ground_program
from language.parser import parse_program
from language.services import load_program

from .distributions import check_parameters, density, draw, outcome_weights
from .services import (
    AncestralSampler, DistributionalDatabase, block_rng, forced_assignments, trace_header, write_trace,
)

NO_OUTCOMES = np.array([])


def database_of(program, symbolic: bool = True):
    core = desugar(relevant_ground_program(program))
    return core, DistributionalDatabase(core.facts, validate_core(core), core.symbols, symbolic)


def by_name(database, name: str):
    (var,) = [var for var in database.order if var.name == name]
    return var


class DistributionTests(SimpleTestCase):

    def test_beta_densities(self):
        x = np.array([0.4])
        self.assertAlmostEqual(density('beta', [np.array([2.0]), np.array([3.0])], x, NO_OUTCOMES)[0], 1.728)
        self.assertAlmostEqual(density('beta', [np.array([4.0]), np.array([2.0])], x, NO_OUTCOMES)[0], 0.768)

    def test_normal_takes_the_standard_deviation(self):
        value = density('normal', [np.array([0.0]), np.array([2.0])], np.array([0.0]), NO_OUTCOMES)[0]
        self.assertAlmostEqual(value, 1 / (2.0 * np.sqrt(2 * np.pi)))

    def test_discrete_masses(self):
        flip = density('flip', [np.array([0.3, 0.3, 0.3])], np.array([1.0, 0.0, 2.0]), NO_OUTCOMES)
        np.testing.assert_allclose(flip, [0.3, 0.7, 0.0])
        finite = density('finite', [np.array(0.2), np.array(0.8)], np.array([2.0, 5.0]), np.array([1.0, 2.0]))
        np.testing.assert_allclose(finite, [0.8, 0.0])
        self.assertAlmostEqual(density('poisson', [np.array([0.0])], np.array([0.0]), NO_OUTCOMES)[0], 1.0)

    def test_parameter_domains(self):
        with self.assertRaises(InvalidParameter):
            check_parameters('normal', [np.array([0.0]), np.array([0.0])])
        with self.assertRaises(InvalidParameter):
            check_parameters('beta', [np.array([-1.0]), np.array([1.0])])
        with self.assertRaises(InvalidParameter):
            check_parameters('uniform', [np.array([2.0]), np.array([1.0])])
        with self.assertRaises(InvalidParameter):
            check_parameters('finite', [np.array([0.7]), np.array([0.6])])
        with self.assertRaises(InvalidParameter):
            check_parameters('poisson', [np.array([np.nan])])
        check_parameters('poisson', [np.array([0.0])])

    def test_missing_mass_draws_no_outcome(self):
        size = 4000
        values = draw('finite', [np.full(size, 0.2), np.full(size, 0.3)], np.array([1.0, 2.0]), size,
                      block_rng(1, 0))
        missing = np.isnan(values)
        self.assertAlmostEqual(missing.mean(), 0.5, delta=0.05)
        self.assertTrue(set(values[~missing]) <= {1.0, 2.0})

    def test_outcome_weights(self):
        pairs = outcome_weights('flip', [np.array(0.25)], NO_OUTCOMES, 1)
        self.assertEqual([value for value, _ in pairs], [1.0, 0.0])
        self.assertAlmostEqual(float(pairs[1][1][0]), 0.75)
        pairs = outcome_weights('finite', [np.array(0.2), np.array(0.3)], np.array([1.0, 2.0]), 1)
        self.assertTrue(np.isnan(pairs[-1][0]))
        self.assertAlmostEqual(float(pairs[-1][1][0]), 0.5)


# kind, parameters, outcomes, mean, variance
MOMENTS = [
    ('normal', [2.0, 3.0], [], 2.0, 9.0),
    ('beta', [2.0, 3.0], [], 0.4, 0.04),
    ('uniform', [1.0, 4.0], [], 2.5, 0.75),
    ('poisson', [7.0], [], 7.0, 7.0),
    ('flip', [0.3], [], 0.3, 0.21),
    ('finite', [0.2, 0.5, 0.3], [1.0, 2.0, 5.0], 2.7, 2.41),
    ('uniform_list', [], [1.0, 2.0, 3.0], 2.0, 2 / 3),
    ('delta', [4.0], [], 4.0, 0.0),
]


class SamplerMomentTests(SimpleTestCase):
    size = 200_000

    def test_sample_means_lie_within_five_standard_errors(self):
        for block, (kind, params, outcomes, mean, variance) in enumerate(MOMENTS):
            with self.subTest(kind=kind):
                values = draw(kind, [np.array([p]) for p in params], np.array(outcomes), self.size,
                              block_rng(2024, block))
                self.assertEqual(values.shape, (self.size,))
                self.assertLessEqual(abs(values.mean() - mean), 5 * np.sqrt(variance / self.size))

    def test_continuous_densities_integrate_to_one(self):
        for kind, params, _, mean, _ in MOMENTS[:3]:
            params = [np.array([p]) for p in params]
            low, high = {'normal': (-np.inf, np.inf), 'beta': (0.0, 1.0), 'uniform': (1.0, 4.0)}[kind]

            def pdf(x):
                return float(density(kind, params, np.array([x]), NO_OUTCOMES)[0])

            with self.subTest(kind=kind):
                self.assertAlmostEqual(integrate.quad(pdf, low, high)[0], 1.0, places=6)
                self.assertAlmostEqual(integrate.quad(lambda x: x * pdf(x), low, high)[0], mean, places=6)

    def test_masses_sum_to_one(self):
        for kind, params, outcomes, mean, _ in MOMENTS[3:7]:
            support = np.arange(0.0, 200.0) if kind == 'poisson' else np.array(outcomes or [0.0, 1.0])
            masses = density(kind, [np.array(p) for p in params], support, np.array(outcomes))
            with self.subTest(kind=kind):
                self.assertAlmostEqual(float(masses.sum()), 1.0, places=9)
                self.assertAlmostEqual(float(np.dot(support, masses)), mean, places=9)


class DatabaseTests(SimpleTestCase):

    def test_sweets_order_and_symbolic_variables(self):
        _, database = database_of(load_program(settings.PROGRAMS_DIR / 'sweets.pl'))
        order = [var.name for var in database.order]
        self.assertLess(order.index('v3'), order.index('v5'))
        self.assertLess(order.index('v4'), order.index('v8'))
        self.assertEqual([var.name for var in database.symbolic_variables], ['v1', 'v2'])
        self.assertFalse(database.is_continuous(by_name(database, 'v3')))
        self.assertTrue(database.is_countable(by_name(database, 'v3')))
        np.testing.assert_array_equal(database.support(by_name(database, 'v1')), [1.0, 0.0])
        self.assertIsNone(database.support(by_name(database, 'v3')))

    def test_symbolic_marginalization_can_be_turned_off(self):
        _, database = database_of(load_program(settings.PROGRAMS_DIR / 'sweets.pl'), symbolic=False)
        self.assertEqual(database.symbolic_variables, [])

    def test_parents_with_children_are_sampled(self):
        _, database = database_of(parse_program('x ~ finite([0.5:1, 0.5:2]).\ny ~ normal(x, 1).\nquery(y > 0).'))
        self.assertEqual(database.symbolic_variables, [])

    def test_symbolic_outcome_codes(self):
        _, database = database_of(parse_program('c ~ uniform([r,g,b]).\np :- c =:= g.\nquery(p).'))
        np.testing.assert_array_equal(database.outcome_codes(by_name(database, 'v1')), [1.0, 2.0, 3.0])


class SamplerTests(SimpleTestCase):

    def test_blocks_are_reproducible(self):
        _, database = database_of(load_program(settings.PROGRAMS_DIR / 'sweets.pl'))
        sampler = AncestralSampler(database, seed=5)
        first, again, other = sampler.block(2, 50), sampler.block(2, 50), sampler.block(3, 50)
        yellow = by_name(database, 'v5')
        np.testing.assert_array_equal(first.values[yellow], again.values[yellow])
        self.assertFalse(np.array_equal(first.values[yellow], other.values[yellow]))
        self.assertEqual(first.block, 2)
        self.assertEqual(set(first.row(0)), set(database.order))

    def test_block_partition(self):
        _, database = database_of(parse_program('x ~ normal(0,1).\nquery(x > 0).'))
        blocks = list(AncestralSampler(database).blocks(2500, 1024))
        self.assertEqual(blocks, [(0, 1024), (1, 1024), (2, 452)])

    def test_children_use_their_parents_values(self):
        _, database = database_of(parse_program('x ~ normal(0,1).\ny ~ delta(2*x).\nquery(y > 0).'))
        sample = AncestralSampler(database, seed=3).block(0, 20)
        x, y = by_name(database, 'v1'), by_name(database, 'v2')
        np.testing.assert_allclose(sample.values[y], 2 * sample.values[x])

    def test_observed_variables_are_forced(self):
        core, database = database_of(load_program(settings.PROGRAMS_DIR / 'ball.pl'))
        forced = forced_assignments(encode(core), database)
        self.assertEqual({var.name: value for var, value in forced.items()}, {'v2': 0.4, 'v3': 0.4})
        sample = AncestralSampler(database, forced, seed=1).block(0, 10)
        np.testing.assert_array_equal(sample.values[by_name(database, 'v2')], 0.4)
        self.assertEqual(sample.forced, frozenset(forced))

    def test_conflicting_observations(self):
        core, database = database_of(parse_program(
            'x ~ normal(0,1).\n0.5::a.\nquery(a).\nobservation(x, 1).\nobservation(x, 2).'
        ))
        with self.assertRaises(ImpossibleObservation):
            forced_assignments(encode(core), database)


class TraceTests(SimpleTestCase):

    def test_trace_has_one_row_per_sample(self):
        _, database = database_of(parse_program('c ~ uniform([r,g,b]).\nx ~ normal(0,1).\np :- c =:= g, x > 0.\nquery(p).'))
        sampler = AncestralSampler(database, seed=9)
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'trace.csv'
            rows = write_trace(path, database, [sampler.block(0, 3), sampler.block(1, 2)])
            with open(path, newline='', encoding='utf-8') as handle:
                table = list(csv.reader(handle))
        self.assertEqual(rows, 5)
        self.assertEqual(table[0], trace_header(database))
        self.assertEqual(table[0], ['sample', 'v1:c', 'v2:x'])
        self.assertEqual([row[0] for row in table[1:]], ['0', '1', '2', '3', '4'])
        self.assertTrue({row[1] for row in table[1:]} <= {'r', 'g', 'b'})
        float(table[1][2])
