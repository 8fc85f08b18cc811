import random
from itertools import product
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import CompilationBudgetExceeded, CompilationError
from desugaring.services import desugar
from formulas.nodes import And, Not, Or, Var, conj, disj, evaluate, neg
from formulas.services import Choice, PropFormula, PropVar, conjoin_query, encode
from grounding.services import relevant_ground_program
from language.parser import parse_program
from language.terms import Constant, RandomVariableId

from .bdd import BDD, FALSE, TRUE
from .services import (
    DETERMINISM_CHECK_LIMIT, Circuit, compile_formula, compile_smooth, is_decomposable, is_deterministic,
    is_smooth, model_count, property_checks, smooth, to_dot, variable_order, verify,
)

NOISY_OR = '0.3::a.\n0.4::b.\nc :- a.\nc :- b.\nquery(c).\n'

SWEETS = """\
0.5::large.
0.5::balanced.
red ~ poisson(20) :- large.
red ~ poisson(10) :- not large.
yellow ~ poisson(red) :- balanced.
yellow ~ poisson(2*red) :- not balanced.
favorite :- red > 15, not yellow < 5.
query(favorite).
"""


def formula_of(text: str):
    return encode(desugar(relevant_ground_program(parse_program(text))))


def assignments(size: int):
    for values in product((False, True), repeat=size):
        yield dict(enumerate(values, 1))


def brute_force_count(formula, root) -> int:
    return sum(evaluate(root, assignment) for assignment in assignments(formula.size))


def random_formula(rng: random.Random, size: int, depth: int = 4):
    if depth == 0 or rng.random() < 0.25:
        node = Var(rng.randint(1, size))
    else:
        children = [random_formula(rng, size, depth - 1) for _ in range(rng.randint(2, 3))]
        node = conj(children) if rng.random() < 0.5 else disj(children)
    return neg(node) if rng.random() < 0.3 else node


def choice_formula(size: int, node) -> PropFormula:
    table = tuple(PropVar(id, Choice(RandomVariableId(id, f'v{id}'), 1, 0.5)) for id in range(1, size + 1))
    return PropFormula(table, (), (node,))


def columns(size: int):
    rows = np.arange(2 ** size)
    return {id: ((rows >> (id - 1)) & 1).astype(bool) for id in range(1, size + 1)}


def formula_table(node, values, rows: int) -> np.ndarray:
    if isinstance(node, Var):
        return values[node.id]
    if isinstance(node, Not):
        return ~formula_table(node.child, values, rows)
    if isinstance(node, And):
        return np.logical_and.reduce([formula_table(child, values, rows) for child in node.children])
    if isinstance(node, Or):
        return np.logical_or.reduce([formula_table(child, values, rows) for child in node.children])
    return np.full(rows, node.value)


def circuit_table(circuit: Circuit, values, rows: int) -> np.ndarray:
    tables = {}
    for id in circuit.reachable():
        node = circuit[id]
        if node.kind == 'literal':
            tables[id] = values[node.var] if node.positive else ~values[node.var]
        elif node.kind == 'and':
            tables[id] = np.logical_and.reduce([tables[child] for child in node.children])
        elif node.kind == 'or':
            tables[id] = np.logical_or.reduce([tables[child] for child in node.children])
        else:
            tables[id] = np.full(rows, node.kind == 'true')
    return tables[circuit.root]


class BDDTests(SimpleTestCase):

    def test_terminals_and_reduction(self):
        bdd = BDD([1, 2])
        x, y = bdd.var(1), bdd.var(2)
        self.assertEqual(bdd.disjoin(x, bdd.negate(x)), TRUE)
        self.assertEqual(bdd.conjoin(x, bdd.negate(x)), FALSE)
        self.assertEqual(bdd.negate(bdd.negate(y)), y)
        self.assertEqual(bdd.conjoin(x, y), bdd.conjoin(y, x))

    def test_node_cap(self):
        bdd = BDD([1, 2, 3], node_cap=3)
        with self.assertRaises(CompilationBudgetExceeded):
            bdd.conjoin(bdd.var(1), bdd.var(2))


class CircuitTests(SimpleTestCase):

    def test_nodes_are_shared_and_constants_fold(self):
        circuit = Circuit([1, 2])
        literal = circuit.literal(1)
        self.assertEqual(circuit.literal(1), literal)
        self.assertEqual(circuit.conjunction([literal, Circuit.TRUE]), literal)
        self.assertEqual(circuit.conjunction([literal, Circuit.FALSE]), Circuit.FALSE)
        self.assertEqual(circuit.disjunction([]), Circuit.FALSE)

    def test_property_checks_catch_bad_circuits(self):
        circuit = Circuit([1])
        circuit.root = circuit.conjunction([circuit.literal(1), circuit.literal(1, False)])
        self.assertFalse(is_decomposable(circuit))

        circuit = Circuit([1, 2])
        circuit.root = circuit.disjunction([circuit.literal(1), circuit.literal(2)])
        self.assertFalse(is_deterministic(circuit))
        self.assertFalse(is_smooth(circuit))
        smoothed = smooth(circuit)
        self.assertTrue(is_smooth(smoothed))
        self.assertFalse(is_deterministic(smoothed))

    def test_model_count_of_a_hand_built_circuit(self):
        circuit = Circuit([1, 2, 3])
        circuit.root = circuit.disjunction([
            circuit.conjunction([circuit.literal(1), circuit.literal(2)]),
            circuit.literal(1, False),
        ])
        self.assertEqual(model_count(circuit), 6)


class CompilationTests(SimpleTestCase):

    def test_variable_order(self):
        formula = formula_of(NOISY_OR)
        self.assertEqual(formula.derived_order, [1, 3, 5])
        self.assertEqual(variable_order(formula), [2, 4, 5, 3, 1])

    def test_model_count_matches_brute_force(self):
        for text in (NOISY_OR, SWEETS):
            formula = formula_of(text)
            with self.subTest(program=text.splitlines()[0]):
                circuit = compile_smooth(formula)
                self.assertEqual(model_count(circuit), brute_force_count(formula, formula.root))
        formula = formula_of(NOISY_OR)
        query = conjoin_query(formula, Constant('c')).root
        self.assertEqual(model_count(compile_smooth(formula, query)), 3)
        self.assertEqual(model_count(compile_smooth(formula)), 4)

    def test_circuit_is_equivalent_to_formula(self):
        formula = formula_of(SWEETS)
        circuit = compile_smooth(formula)
        for assignment in assignments(formula.size):
            self.assertEqual(circuit.evaluate(assignment), evaluate(formula.root, assignment))

    def test_compiled_circuits_have_the_properties(self):
        for text in (NOISY_OR, SWEETS, NOISY_OR + 'evidence(a, false).\n'):
            with self.subTest(program=text):
                self.assertEqual(set(verify(compile_smooth(formula_of(text))).values()), {True})

    def test_unsatisfiable_evidence_compiles_to_false(self):
        formula = formula_of('0.3::a.\nb :- a.\nquery(a).\nevidence(a, true).\nevidence(b, false).\n')
        self.assertEqual(compile_formula(formula).root, Circuit.FALSE)
        self.assertEqual(model_count(compile_smooth(formula)), 0)

    def test_caps(self):
        formula = formula_of(SWEETS)
        with self.assertRaises(CompilationBudgetExceeded):
            compile_formula(formula, node_cap=3)
        with self.assertRaises(CompilationBudgetExceeded):
            compile_formula(formula, variable_cap=2)

    def test_dot_output(self):
        formula = formula_of(NOISY_OR)
        dot = to_dot(compile_smooth(formula), formula, name='c0')
        self.assertTrue(dot.startswith('digraph c0 {'))
        self.assertIn('label="v1=:=1"', dot)
        self.assertIn('label="¬v2=:=1"', dot)
        self.assertIn('⊕', dot)
        self.assertTrue(dot.rstrip().endswith('}'))

    def test_smoothing_failure_is_an_error(self):
        with mock.patch('circuits.services.smooth', side_effect=lambda circuit: circuit):
            with self.assertRaises(CompilationError) as caught:
                compile_smooth(choice_formula(2, disj([Var(1), Var(2)])))
        self.assertIn('smooth', str(caught.exception))
        self.assertEqual(caught.exception.stage, 'compile')

    def test_determinism_is_checked_on_small_circuits_only(self):
        small = compile_smooth(formula_of(NOISY_OR))
        self.assertEqual(property_checks(small), {'decomposable': True, 'smooth': True, 'deterministic': True})

        size = DETERMINISM_CHECK_LIMIT + 1
        large = Circuit(range(1, size + 1))
        large.root = large.conjunction([large.literal(id) for id in range(1, size + 1)])
        self.assertEqual(property_checks(large), {'decomposable': True, 'smooth': True})


class RandomFormulaTests(SimpleTestCase):
    formulas = 200

    def test_compiled_random_formulas_match_their_truth_tables(self):
        rng = random.Random(1234)
        for index in range(self.formulas):
            size = rng.randint(1, 16)
            node = random_formula(rng, size)
            formula = choice_formula(size, node)
            rows = 2 ** size
            values = columns(size)
            with self.subTest(formula=index, variables=size):
                expected = formula_table(node, values, rows)
                circuit = compile_smooth(formula)
                np.testing.assert_array_equal(circuit_table(circuit, values, rows), expected)
                self.assertEqual(model_count(circuit), int(expected.sum()))
                self.assertEqual(set(property_checks(circuit).values()), {True})
