from fractions import Fraction

from django.test import SimpleTestCase

from core.exceptions import (
    CyclicRandomTermDependency, CyclicRandomVariableDependency, InvalidProbability, RvCycle,
    UnboundedExpansion,
)
from grounding.services import relevant_ground_program
from language.parser import parse_program
from language.terms import (
    Comparison, Constant, Distribution, Literal, NormalClause, Number, RandomVariableId,
)

from .graph import DependencyGraph
from .services import (
    DistributionalFact, FreshNames, RvUnfolder, desugar, eliminate_ads, eliminate_dcs, rv_atom,
    simplify_body, unfold_rv, validate_core,
)

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


def ground(text: str):
    return relevant_ground_program(parse_program(text))


def rv(index: int, origin=None) -> RandomVariableId:
    return RandomVariableId(index, f'v{index}', origin)


class FreshNameTests(SimpleTestCase):

    def test_names_count_up(self):
        names = FreshNames({'a', 'b'}, 'x')
        self.assertEqual(names.next(), (1, 'x1'))
        self.assertEqual(names.next(), (2, 'x2'))

    def test_prefix_avoids_program_symbols(self):
        self.assertEqual(FreshNames({'x12'}, 'x').next(), (1, 'x_1'))
        self.assertEqual(FreshNames({'x', 'xy'}, 'x').next(), (1, 'x1'))


class AdEliminationTests(SimpleTestCase):

    def test_facts_and_disjunctions_become_choices(self):
        program = eliminate_ads(ground('0.3::a.\n0.2::b; 0.5::c :- a.\nquery(b).'))
        self.assertEqual(str(program), (
            'x1 ~ flip(0.3).\n'
            'a :- x1=:=1.\n'
            'x2 ~ finite([0.2:1,0.5:2]).\n'
            'b :- a, x2=:=1.\n'
            'c :- a, x2=:=2.\n'
        ))
        self.assertEqual(program.random_terms, frozenset({Constant('x1'), Constant('x2')}))

    def test_single_choice_disjunction_is_a_flip(self):
        program = eliminate_ads(ground('0.4::b :- c.\nc.\nquery(b).'))
        self.assertIn('x1 ~ flip(0.4).', str(program))
        self.assertIn('b :- c, x1=:=1.', str(program))

    def test_fresh_terms_do_not_clash(self):
        program = eliminate_ads(ground('0.5::x1.\nquery(x1).'))
        self.assertEqual(str(program), "x_1 ~ flip(0.5).\nx1 :- x_1=:=1.\n")

    def test_probabilities_are_checked(self):
        with self.assertRaises(InvalidProbability):
            eliminate_ads(ground('0.7::a; 0.6::b.\nquery(a).'))
        with self.assertRaises(InvalidProbability):
            eliminate_ads(ground('1.5::a.\nquery(a).'))


class DcEliminationTests(SimpleTestCase):

    def setUp(self):
        self.encoding = eliminate_dcs(eliminate_ads(ground(SWEETS)))

    def test_one_variable_per_clause_and_parent(self):
        facts = [str(fact) for fact in self.encoding.facts]
        self.assertEqual(facts, [
            'v1 ~ flip(0.5).',
            'v2 ~ flip(0.5).',
            'v3 ~ poisson(20).',
            'v4 ~ poisson(10).',
            'v5 ~ poisson(v3).',
            'v6 ~ poisson(v4).',
            'v7 ~ poisson(2*v3).',
            'v8 ~ poisson(2*v4).',
        ])
        self.assertEqual(self.encoding.variables[Constant('yellow')], [rv(5), rv(6), rv(7), rv(8)])
        self.assertEqual(self.encoding.facts[4].var.origin, Constant('yellow'))

    def test_context_rules_guard_on_parents(self):
        rules = [str(rule) for rule in self.encoding.context_rules]
        self.assertIn('rv(red,v3) :- large.', rules)
        self.assertIn('rv(yellow,v5) :- rv(red,v3), balanced.', rules)
        self.assertIn('rv(yellow,v8) :- rv(red,v4), not balanced.', rules)

    def test_cyclic_random_terms(self):
        with self.assertRaises(CyclicRandomTermDependency):
            eliminate_dcs(eliminate_ads(ground('x ~ normal(y,1).\ny ~ normal(x,1).\nquery(x > 0).')))

    def test_expansion_cap(self):
        with self.assertRaises(UnboundedExpansion):
            eliminate_dcs(eliminate_ads(ground(SWEETS)), expansion_cap=3)


class RvUnfoldingTests(SimpleTestCase):

    def test_inconsistent_contexts_are_pruned(self):
        program = unfold_rv(eliminate_dcs(eliminate_ads(ground(SWEETS))))
        rules = [str(rule) for rule in program.rules]
        self.assertEqual(rules, [
            'large :- v1=:=1.',
            'balanced :- v2=:=1.',
            'favorite :- large, balanced, v3>15, not v5<5.',
            'favorite :- large, not balanced, v3>15, not v7<5.',
            'favorite :- not large, balanced, v4>15, not v6<5.',
            'favorite :- not large, not balanced, v4>15, not v8<5.',
        ])

    def test_contexts_of_random_terms(self):
        program = desugar(ground(SWEETS))
        large, balanced = Literal(Constant('large')), Literal(Constant('balanced'))
        self.assertEqual(program.contexts[Constant('red')], [(rv(3), [(large,)]), (rv(4), [(large.negate(),)])])
        self.assertEqual(program.contexts[Constant('yellow')][0], (rv(5), [(large, balanced)]))
        self.assertEqual(len(program.distributions), 8)

    def test_body_simplification(self):
        a, b = Literal(Constant('a')), Literal(Constant('b'))
        self.assertEqual(simplify_body([a, b, a]), (a, b))
        self.assertIsNone(simplify_body([a, b, a.negate()]))

    def test_cyclic_context_rules(self):
        head = rv_atom(Constant('x'), rv(1))
        unfolder = RvUnfolder([NormalClause(head, (Literal(head),))])
        with self.assertRaises(RvCycle):
            unfolder.unfold_atom(head)

    def test_terms_without_variables_drop_their_rules(self):
        program = desugar(ground('x ~ normal(0,1) :- a.\na :- b.\np :- x > 0.\nquery(p).'))
        self.assertEqual(program.facts, [])
        self.assertEqual(program.rules, [])


class DependencyGraphTests(SimpleTestCase):

    def test_sweets_graph(self):
        graph = validate_core(desugar(ground(SWEETS)))
        self.assertEqual(len(graph), 8)
        self.assertEqual(graph.parents(rv(7)), [rv(3)])
        self.assertEqual(graph.children(rv(4)), [rv(6), rv(8)])
        self.assertEqual(graph.closure([rv(5), rv(1)]), [rv(1), rv(3), rv(5)])
        order = graph.topological_order()
        self.assertLess(order.index(rv(3)), order.index(rv(5)))
        self.assertEqual(order[0], rv(1))
        self.assertEqual(graph.diagnostics, [])

    def test_cycles_are_rejected(self):
        facts = [
            DistributionalFact(rv(1), Distribution('normal', (rv(2), Number(Fraction(1))))),
            DistributionalFact(rv(2), Distribution('normal', (rv(1), Number(Fraction(1))))),
        ]
        with self.assertRaises(CyclicRandomVariableDependency):
            DependencyGraph(facts).check_acyclic()

    def test_parameter_domains_are_warned_about(self):
        graph = validate_core(desugar(ground('x ~ normal(0,1).\ny ~ poisson(x).\nquery(y > 1).')))
        (diagnostic,) = graph.diagnostics
        self.assertEqual(diagnostic.code, 'domain')
        self.assertEqual(diagnostic.severity, 'warning')
        self.assertIn('must be positive', diagnostic.message)

    def test_comparisons_keep_their_variables(self):
        program = desugar(ground('x ~ normal(0,1).\np :- x > 0.\nquery(p).'))
        (rule,) = program.rules
        self.assertEqual(rule.body, (Literal(Comparison('>', rv(1), Number(Fraction(0)))),))
