import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from core.exceptions import DivisionByZeroInfNum, UnassignedVariable
from desugaring.services import desugar, validate_core
from formulas.services import Choice, encode, symbolize
from grounding.services import relevant_ground_program
from language.services import load_program
from sampling.services import AncestralSampler, DistributionalDatabase, forced_assignments

from .labels import IALWLabeler, SIALWLabeler, labeler_for
from .numbers import ONE, ZERO, InfArray, InfNum, inf_sum, reciprocal


def ball(symbolic: bool):
    program = desugar(relevant_ground_program(load_program(settings.PROGRAMS_DIR / 'ball.pl')))
    database = DistributionalDatabase(program.facts, validate_core(program), program.symbols, symbolic)
    formula = encode(program)
    if symbolic:
        formula = symbolize(formula, database.distributions, database.symbolic_variables, database.symbols)
    sampler = AncestralSampler(database, forced_assignments(formula, database), seed=7)
    return formula, database, sampler.block(0, 5)


def observed_leaf(formula, name: str):
    for var in formula.leaves:
        meta = var.meta
        if not isinstance(meta, Choice) and meta.comparison.is_delta and meta.comparison.lhs.name == name:
            return var
    raise AssertionError(f'no observation of {name}')


class InfNumTests(SimpleTestCase):

    def test_addition_keeps_the_lower_order(self):
        self.assertEqual(InfNum(2.0, 0) + InfNum(3.0, 1), InfNum(2.0, 0))
        self.assertEqual(InfNum(2.0, 1) + InfNum(3.0, 1), InfNum(5.0, 1))
        self.assertEqual(InfNum(0.0, 1) + InfNum(0.0, 2), InfNum(0.0, 1))

    def test_multiplication_adds_orders(self):
        self.assertEqual(InfNum(2.0, 1) * InfNum(3.0, 1), InfNum(6.0, 2))
        self.assertEqual(ONE * InfNum(0.5, 1), InfNum(0.5, 1))

    def test_subtraction_and_division(self):
        self.assertEqual(InfNum(5.0, 0) - InfNum(2.0, 0), InfNum(3.0, 0))
        self.assertTrue((InfNum(6.0, 2) / InfNum(3.0, 1)).isclose(InfNum(2.0, 1)))
        self.assertEqual(reciprocal(InfNum(4.0, 1)), InfNum(0.25, -1))

    def test_division_by_zero(self):
        with self.assertRaises(DivisionByZeroInfNum):
            InfNum(1.0, 0) / InfNum(0.0, 1)

    def test_sum(self):
        self.assertEqual(inf_sum([]), ZERO)
        self.assertEqual(inf_sum([InfNum(1.0, 1), InfNum(2.0, 0), InfNum(3.0, 0)]), InfNum(5.0, 0))
        self.assertEqual(str(InfNum(1.5, 1)), '(1.5,1)')

    def test_zero_operand_is_absorbed_whatever_its_order(self):
        self.assertEqual(InfNum(0.0, 0) + InfNum(0.5, 1), InfNum(0.5, 1))
        self.assertEqual(InfNum(0.25, 1) + InfNum(0.0, 0), InfNum(0.25, 1))
        self.assertEqual(InfNum(0.768, 1) * InfNum(0.0, 0) + InfNum(0.25, 1), InfNum(0.25, 1))
        self.assertEqual(inf_sum([InfNum(0.0, 0), InfNum(0.0, -1), InfNum(2.0, 2)]), InfNum(2.0, 2))


class InfArrayTests(SimpleTestCase):

    def test_fold_of_mixture_densities(self):
        weights = InfArray([1.728] * 7 + [0.768] * 3, [1] * 10)
        total = weights.fold()
        self.assertEqual(total.order, 1)
        self.assertAlmostEqual(total.real, 14.4)

    def test_fold_keeps_the_leading_order(self):
        self.assertEqual(InfArray([1.0, 5.0], [0, 1]).fold(), InfNum(1.0, 0))

    def test_rows_of_weight_zero_never_dominate(self):
        weights = InfArray([0.0, 2.0, 3.0], [0, 1, 1])
        self.assertEqual(weights.leading_order(), 1)
        self.assertEqual(weights.fold(), InfNum(5.0, 1))
        self.assertEqual(InfArray([0.0, 0.0], [1, 2]).fold(), InfNum(0.0, 1))
        self.assertEqual(InfArray([], []).fold(), ZERO)

    def test_elementwise_operations(self):
        left = InfArray([1.0, 2.0], [0, 1])
        right = InfArray([3.0, 4.0], [1, 1])
        total = left + right
        np.testing.assert_array_equal(total.reals, [1.0, 6.0])
        np.testing.assert_array_equal(total.orders, [0, 1])
        product = left * right
        np.testing.assert_array_equal(product.reals, [3.0, 8.0])
        np.testing.assert_array_equal(product.orders, [1, 2])
        self.assertEqual(product.item(1), InfNum(8.0, 2))
        np.testing.assert_array_equal(product.at_order(2), [0.0, 8.0])

    def test_constructors(self):
        full = InfArray.full(InfNum(0.5, 1), 3)
        self.assertEqual(len(full), 3)
        self.assertEqual(full.item(2), InfNum(0.5, 1))
        np.testing.assert_array_equal(InfArray.of([1, 0]).orders, [0, 0])

    def test_zero_rows_are_absorbed_elementwise(self):
        left = InfArray([0.0, 0.5, 0.0, 0.0], [0, 1, 2, 1])
        right = InfArray([0.5, 0.0, 0.0, 3.0], [1, 0, 1, 1])
        total = left + right
        np.testing.assert_array_equal(total.reals, [0.5, 0.5, 0.0, 3.0])
        np.testing.assert_array_equal(total.orders, [1, 1, 1, 1])


class LabelTests(SimpleTestCase):

    def test_observed_variables_are_labeled_with_their_density(self):
        formula, database, sample = ball(symbolic=False)
        labels = IALWLabeler(formula, database).labels(sample)
        metal = labels[observed_leaf(formula, 'v2').id]
        wood = labels[observed_leaf(formula, 'v3').id]
        np.testing.assert_allclose(metal[0].reals, 1.728)
        np.testing.assert_array_equal(metal[0].orders, 1)
        np.testing.assert_allclose(wood[0].reals, 0.768)
        np.testing.assert_array_equal(wood[1].reals, 1.0)
        np.testing.assert_array_equal(wood[1].orders, 0)

    def test_comparisons_are_indicators(self):
        formula, database, sample = ball(symbolic=False)
        labels = IALWLabeler(formula, database).labels(sample)
        for var in formula.leaves:
            if var.meta.comparison.is_delta:
                continue
            positive, negative = labels[var.id]
            np.testing.assert_array_equal(positive.reals + negative.reals, 1.0)
            self.assertTrue(set(positive.reals) <= {0.0, 1.0})

    def test_derived_atoms_are_neutral(self):
        formula, database, sample = ball(symbolic=True)
        labels = SIALWLabeler(formula, database).labels(sample)
        for var in formula.table:
            if var.is_derived:
                self.assertEqual(labels[var.id][0].item(0), ONE)
                self.assertEqual(labels[var.id][1].item(0), ONE)

    def test_choices_carry_their_probability(self):
        formula, database, sample = ball(symbolic=True)
        (choice,) = [var for var in formula.table if isinstance(var.meta, Choice)]
        positive, negative = labeler_for(formula, database, symbolic=True).labels(sample)[choice.id]
        np.testing.assert_allclose(positive.reals, 0.3)
        np.testing.assert_allclose(negative.reals, 0.7)
        self.assertIsInstance(labeler_for(formula, database, symbolic=False), IALWLabeler)
        with self.assertRaises(UnassignedVariable):
            IALWLabeler(formula, database).labels(sample)


def random_infarray(rng, size):
    reals = np.where(rng.random(size) < 0.1, 0.0, rng.uniform(0.1, 2.0, size))
    return InfArray(reals, rng.integers(-3, 4, size))


def same_value(left: InfArray, right: InfArray) -> np.ndarray:
    """Rows equal as semiring values: both zero, or same order and close real parts"""
    both_zero = (left.reals == 0) & (right.reals == 0)
    close = (left.orders == right.orders) & np.isclose(left.reals, right.reals, rtol=1e-12, atol=0)
    return both_zero | close


class SemiringLawTests(SimpleTestCase):
    size = 100_000

    def setUp(self):
        rng = np.random.default_rng(20240611)
        self.a, self.b, self.c = (random_infarray(rng, self.size) for _ in range(3))

    def assertSameValues(self, left, right):
        mismatched = np.flatnonzero(~same_value(left, right))
        self.assertEqual(mismatched.size, 0, f'{mismatched.size} rows differ, first {mismatched[:5]}')

    def test_addition_is_associative_and_commutative(self):
        a, b, c = self.a, self.b, self.c
        self.assertSameValues((a + b) + c, a + (b + c))
        self.assertSameValues(a + b, b + a)

    def test_multiplication_is_associative_and_commutative(self):
        a, b, c = self.a, self.b, self.c
        self.assertSameValues((a * b) * c, a * (b * c))
        self.assertSameValues(a * b, b * a)

    def test_multiplication_distributes_over_addition(self):
        a, b, c = self.a, self.b, self.c
        self.assertSameValues(a * (b + c), a * b + a * c)
        self.assertSameValues((b + c) * a, b * a + c * a)

    def test_neutral_elements(self):
        zero, one = InfArray.full(ZERO, self.size), InfArray.full(ONE, self.size)
        self.assertSameValues(zero + self.a, self.a)
        self.assertSameValues(self.a + zero, self.a)
        np.testing.assert_array_equal((one * self.a).reals, self.a.reals)
        np.testing.assert_array_equal((one * self.a).orders, self.a.orders)

    def test_zero_annihilates_and_is_then_absorbed(self):
        zero = InfArray.full(ZERO, self.size)
        annihilated = zero * self.b
        np.testing.assert_array_equal(annihilated.reals, 0.0)
        self.assertSameValues(annihilated + self.a, self.a)

    def test_lower_order_dominates(self):
        a, b = self.a, self.b
        dominant = (a.reals != 0) & (a.orders < b.orders)
        self.assertTrue(dominant.any())
        total = a + b
        np.testing.assert_array_equal(total.reals[dominant], a.reals[dominant])
        np.testing.assert_array_equal(total.orders[dominant], a.orders[dominant])

    def test_scalar_and_vector_addition_agree(self):
        total = self.a + self.b
        for index in range(1000):
            self.assertEqual(self.a.item(index) + self.b.item(index), total.item(index))


class LabelWitnessTests(SimpleTestCase):

    def test_addition_is_not_idempotent(self):
        self.assertEqual(ONE + ONE, InfNum(2.0, 0))
        self.assertNotEqual(ONE + ONE, ONE)

    def test_derived_atom_labels_are_not_neutral(self):
        formula, database, sample = ball(symbolic=True)
        labels = SIALWLabeler(formula, database).labels(sample)
        derived = [var for var in formula.table if var.is_derived]
        self.assertTrue(derived)
        for var in derived:
            positive, negative = labels[var.id]
            self.assertEqual((positive + negative).item(0), InfNum(2.0, 0))
            self.assertNotEqual((positive + negative).item(0), ONE)

    def test_observation_labels_are_not_consistency_preserving(self):
        formula, database, sample = ball(symbolic=False)
        labels = IALWLabeler(formula, database).labels(sample)
        positive, negative = labels[observed_leaf(formula, 'v2').id]
        both = (positive * negative).item(0)
        self.assertTrue(both.isclose(InfNum(1.728, 1)))
        self.assertNotEqual(both.real, 0.0)
