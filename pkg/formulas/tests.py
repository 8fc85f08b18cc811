from django.test import SimpleTestCase

from core.exceptions import CyclicRuleDependency, UnknownEvidenceAtom
from desugaring.services import desugar
from grounding.services import GroundTask, relevant_ground_program
from language.parser import parse_program
from language.terms import Constant

from .nodes import FALSE, TRUE, And, Not, Or, Var, conj, disj, evaluate, neg, to_text, variables
from .services import (
    Choice, ComparisonLeaf, Derived, assert_evidence, clark_completion, conjoin_query, encode,
    stick_breaking, symbolize,
)

NOISY_OR = '0.3::a.\n0.4::b.\nc :- a.\nc :- b.\nquery(c).\n'


def core(text: str):
    return desugar(relevant_ground_program(parse_program(text)))


def symbolic(text: str):
    program = core(text)
    formula = clark_completion(program)
    return symbolize(formula, program.distributions, program.distributions, program.symbols)


class NodeTests(SimpleTestCase):

    def test_constants_fold(self):
        a, b = Var(1), Var(2)
        self.assertEqual(conj([a, TRUE, b]), And((a, b)))
        self.assertEqual(conj([a, FALSE]), FALSE)
        self.assertEqual(conj([]), TRUE)
        self.assertEqual(disj([a, TRUE]), TRUE)
        self.assertEqual(disj([FALSE, a]), a)

    def test_nested_connectives_flatten(self):
        a, b, c = Var(1), Var(2), Var(3)
        self.assertEqual(conj([a, conj([b, c]), a]), And((a, b, c)))
        self.assertEqual(disj([disj([a, b]), c]), Or((a, b, c)))

    def test_negation(self):
        self.assertEqual(neg(neg(Var(1))), Var(1))
        self.assertEqual(neg(TRUE), FALSE)
        self.assertEqual(neg(Var(1)), Not(Var(1)))

    def test_variables_and_text(self):
        node = disj([conj([Var(3), neg(Var(1))]), Var(2)])
        self.assertEqual(list(variables(node)), [3, 1, 2])
        self.assertEqual(to_text(node), '((3 & -1) | 2)')

    def test_evaluate(self):
        node = conj([Var(1), neg(Var(2))])
        self.assertTrue(evaluate(node, {1: True, 2: False}))
        self.assertFalse(evaluate(node, lambda id: True))


class CompletionTests(SimpleTestCase):

    def test_ids_follow_first_appearance(self):
        formula = clark_completion(core(NOISY_OR))
        self.assertEqual([str(var) for var in formula.table], ['a', 'v1=:=1', 'b', 'v2=:=1', 'c'])
        self.assertEqual(formula.var(2).kind, 'comparison')
        self.assertEqual(formula.id_of(Constant('c')), 5)
        self.assertEqual(formula.derived_order, [1, 3, 5])
        self.assertEqual(formula.definitions[-1], (5, Or((Var(1), Var(3)))))

    def test_text_listing(self):
        text = clark_completion(core(NOISY_OR)).to_text()
        self.assertEqual(text.splitlines()[0], 'p formula 5 3')
        self.assertIn('c 2 comparison v1=:=1', text)
        self.assertIn('5 <-> (1 | 3)', text)

    def test_undefined_atoms_are_false(self):
        formula = clark_completion(core('p :- q.\nq :- r.\nquery(p).'))
        self.assertEqual(formula.definitions, ((1, FALSE),))

    def test_cyclic_programs_are_rejected(self):
        with self.assertRaises(CyclicRuleDependency):
            clark_completion(core('0.5::a.\np :- a.\np :- q.\nq :- p.\nquery(p).'))

    def test_evidence_is_conjoined(self):
        formula = encode(core(NOISY_OR + 'evidence(a, false).\n'))
        self.assertEqual(formula.constraints, (neg(Var(1)),))

    def test_unknown_evidence_and_query_atoms(self):
        formula = clark_completion(core(NOISY_OR))
        with self.assertRaises(UnknownEvidenceAtom):
            assert_evidence(formula, GroundTask(evidence=((Constant('zzz'), True),)))
        with self.assertRaises(UnknownEvidenceAtom):
            conjoin_query(formula, Constant('zzz'))

    def test_query_conjunct(self):
        formula = conjoin_query(clark_completion(core(NOISY_OR)), Constant('c'))
        self.assertEqual(formula.constraints, (Var(5),))
        self.assertEqual(formula.root.children[-1], Var(5))


class SymbolizationTests(SimpleTestCase):

    def test_stick_breaking(self):
        for got, expected in zip(stick_breaking([0.2, 0.3, 0.5]), [0.2, 0.375, 1.0]):
            self.assertAlmostEqual(got, expected)
        self.assertEqual(stick_breaking([1.0, 0.0]), [1.0, 0.0])

    def test_flip_becomes_one_choice(self):
        formula = symbolic('0.3::a.\nquery(a).')
        self.assertEqual([str(var) for var in formula.table], ['a', 'choice(v1,1)'])
        self.assertAlmostEqual(formula.var(2).meta.probability, 0.3)
        self.assertEqual(formula.definitions, ((1, Var(2)),))

    def test_symbolic_outcomes(self):
        formula = symbolic('color ~ uniform([r,g,b]).\nred :- color =:= r.\nquery(red).')
        self.assertEqual(formula.definitions, ((1, Var(2)),))
        choice = formula.var(2).meta
        self.assertIsInstance(choice, Choice)
        self.assertAlmostEqual(choice.probability, 1 / 3)

    def test_last_outcome_needs_no_selector(self):
        formula = symbolic('color ~ uniform([r,g,b]).\nblue :- color =:= b.\nquery(blue).')
        ((_, body),) = formula.definitions
        self.assertEqual(body, conj([neg(Var(2)), neg(Var(3))]))
        self.assertAlmostEqual(formula.var(3).meta.probability, 0.5)

    def test_missing_mass_is_no_outcome(self):
        formula = symbolic('x ~ finite([0.2:1, 0.3:2]).\np :- x =\\= 1.\nquery(p).')
        ((_, body),) = formula.definitions
        self.assertFalse(evaluate(body, {2: True, 3: False}))
        self.assertTrue(evaluate(body, {2: False, 3: True}))
        self.assertTrue(evaluate(body, {2: False, 3: False}))
        self.assertAlmostEqual(formula.var(3).meta.probability, 0.375)

    def test_comparison_between_finite_variables(self):
        formula = symbolic(
            'x ~ finite([0.5:1, 0.5:2]).\ny ~ finite([0.5:1, 0.5:2]).\np :- x < y.\nquery(p).'
        )
        ((_, body),) = formula.definitions
        self.assertTrue(evaluate(body, {2: True, 3: False}))
        self.assertFalse(evaluate(body, {2: True, 3: True}))
        self.assertFalse(evaluate(body, {2: False, 3: False}))

    def test_continuous_leaves_stay(self):
        program = core('0.5::a.\nx ~ normal(0,1).\np :- a, x > 0.\nquery(p).')
        formula = clark_completion(program)
        symbolic_vars = [var for var, dist in program.distributions.items() if dist.kind == 'flip']
        result = symbolize(formula, program.distributions, symbolic_vars, program.symbols)
        metas = [var.meta for var in result.table]
        self.assertIn(Derived(Constant('p')), metas)
        self.assertTrue(any(isinstance(meta, ComparisonLeaf) for meta in metas))
        self.assertTrue(any(isinstance(meta, Choice) for meta in metas))
        self.assertFalse(any(isinstance(meta, ComparisonLeaf) and str(meta) == 'v1=:=1' for meta in metas))
