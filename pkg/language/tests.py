import random
from fractions import Fraction

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from core.exceptions import DCProbLogError, NonNumericTerm, ProgramSyntaxError, ReservedHeadError

from .arithmetic import ArithmeticEvaluator, SymbolTable, compare_static, evaluate_static, random_variables
from .parser import parse_evidence, parse_goal, parse_observation, parse_program, parse_term
from .services import load_program, validate_syntax
from .terms import (
    AnnotatedDisjunction, Comparison, Compound, Constant, DistClause, Distribution, Literal,
    NormalClause, Number, ProbFact, RandomVariableId, Variable, format_term,
)

SWEETS = """\
0.5::large.
0.5::balanced.

red ~ poisson(20) :- large.
red ~ poisson(10) :- not large.

yellow ~ poisson(red) :- balanced.
yellow ~ poisson(2*red) :- not balanced.

favorite :- red > 15, not yellow < 5.
"""


ROUND_TRIPS = [
    'x ~ normal(-1, 2.5).\ny ~ normal(x*2-1, 1) :- a.\nquery(y > 3).\n',
    'a :- b, not c, x =\\= 2, x =< 1.5, not y >= 3/4.\n',
    'r ~ poisson(2*(a+b)) :- not q(1, foo).\ns ~ uniform(0, 10-3-2).\n',
    '0.2::p(1); 0.3::p(2) :- q(X).\nwins(X) :- p(X), X > 1.\n',
    'z ~ finite([1/3:1, 2/3:2]).\nc ~ uniform([red,green]).\nd ~ delta(4.0).\n',
    'evidence(a, false).\nevidence(b).\nquery(c(1, foo)).\nobservation(size, 0.25).\n',
]

LEAVES = ['1', '2', '7', '1.5', 'a', 'b', 'c', '-a']


def random_expression(rng: random.Random, depth: int) -> str:
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(LEAVES)
    left, right = random_expression(rng, depth - 1), random_expression(rng, depth - 1)
    return f'({left}{rng.choice("+-*/")}{right})'


def codes(diagnostics):
    return [diagnostic.code for diagnostic in diagnostics]


class ParserTests(SimpleTestCase):

    def test_probabilistic_fact(self):
        program = parse_program('0.5::large.')
        self.assertEqual(program.statements, (ProbFact(Number(0.5), Constant('large')),))

    def test_distributional_clause_with_body(self):
        (clause,) = parse_program('red ~ poisson(20) :- large.').statements
        self.assertIsInstance(clause, DistClause)
        self.assertEqual(clause.head, Constant('red'))
        self.assertEqual(clause.dist, Distribution('poisson', (Number(Fraction(20)),)))
        self.assertEqual(clause.body, (Literal(Constant('large')),))

    def test_negated_comparison_in_body(self):
        (rule,) = parse_program('favorite :- red > 15, not yellow < 5.').statements
        self.assertIsInstance(rule, NormalClause)
        self.assertEqual(rule.body, (
            Literal(Comparison('>', Constant('red'), Number(Fraction(15)))),
            Literal(Comparison('<', Constant('yellow'), Number(Fraction(5))), False),
        ))

    def test_annotated_disjunction_keeps_fractions(self):
        (ad,) = parse_program('3/10::material(wood); 7/10::material(metal).').statements
        self.assertIsInstance(ad, AnnotatedDisjunction)
        self.assertEqual([prob for prob, _ in ad.choices], [Number(Fraction(3, 10)), Number(Fraction(7, 10))])
        self.assertEqual(ad.choices[0][1], Compound('material', (Constant('wood'),)))

    def test_list_distributions(self):
        (finite,) = parse_program('x ~ finite([0.2:1, 0.8:2]).').statements
        self.assertEqual(finite.dist.kind, 'finite')
        self.assertEqual(finite.dist.outcomes, (Number(Fraction(1)), Number(Fraction(2))))
        self.assertEqual(finite.dist.parameter_expressions, (Number(0.2), Number(0.8)))
        (uniform,) = parse_program('color ~ uniform([r,g,b]).').statements
        self.assertEqual(uniform.dist.kind, 'uniform_list')
        self.assertEqual(uniform.dist.outcomes, (Constant('r'), Constant('g'), Constant('b')))
        (interval,) = parse_program('y ~ uniform(0,4).').statements
        self.assertEqual(interval.dist.kind, 'uniform')

    def test_directives(self):
        program = parse_program(
            'a. query(a). query(x > 2). evidence(b, false). evidence(c). observation(size, 0.4).'
        )
        self.assertEqual(program.statements, (NormalClause(Constant('a')),))
        self.assertEqual(program.task.queries, (
            Constant('a'), Comparison('>', Constant('x'), Number(Fraction(2))),
        ))
        self.assertEqual(program.task.evidence, ((Constant('b'), False), (Constant('c'), True)))
        self.assertEqual(program.task.observations, ((Constant('size'), Number(0.4)),))

    def test_lines_are_recorded(self):
        program = parse_program('a.\n\nb :- a.\n')
        self.assertEqual([statement.line for statement in program.statements], [1, 3])

    def test_printed_program_parses_back(self):
        program = parse_program(SWEETS)
        self.assertEqual(parse_program(str(program)), program)
        self.assertIn('yellow ~ poisson(2*red) :- not balanced.', str(program))

    def test_every_reference_program_prints_back_to_itself(self):
        for path in sorted(settings.PROGRAMS_DIR.glob('*.pl')):
            with self.subTest(program=path.name):
                program = load_program(path)
                printed = str(program)
                self.assertEqual(parse_program(printed), program)
                self.assertEqual(str(parse_program(printed)), printed)

    def test_printed_constructs_parse_back(self):
        for text in ROUND_TRIPS:
            with self.subTest(text=text):
                program = parse_program(text)
                self.assertEqual(parse_program(str(program)), program)

    def test_printed_expressions_parse_back(self):
        rng = random.Random(99)
        for _ in range(300):
            text = random_expression(rng, 4)
            with self.subTest(expression=text):
                term = parse_term(text)
                self.assertEqual(parse_term(format_term(term)), term)

    def test_negated_comparisons_flip_the_operator(self):
        x, two = Constant('x'), Number(Fraction(2))
        self.assertEqual(Comparison('<', x, two).negated(), Comparison('>=', x, two))
        self.assertEqual(Comparison('>=', x, two).negated().negated(), Comparison('>=', x, two))
        (rule,) = parse_program('a :- not x < 2.').statements
        self.assertEqual(rule.body[0].atom.negated(), Comparison('>=', x, two))

    def test_syntax_error_position(self):
        with self.assertRaises(ProgramSyntaxError) as caught:
            parse_program('a.\nb :- .\n')
        self.assertEqual(caught.exception.line, 2)
        self.assertIn('line 2', str(caught.exception))

    def test_builtins_cannot_be_defined(self):
        with self.assertRaises(ReservedHeadError):
            parse_program('normal(a,b) :- c.')
        with self.assertRaises(ReservedHeadError):
            parse_program('delta(a) :- c.')

    def test_anonymous_variables_are_distinct(self):
        (rule,) = parse_program('p :- q(_, _).').statements
        first, second = rule.body[0].atom.args
        self.assertNotEqual(first, second)

    def test_command_line_goals(self):
        self.assertEqual(parse_goal('works(1)'), Compound('works', (Number(Fraction(1)),)))
        self.assertEqual(parse_evidence('works(2)=true'), (Compound('works', (Number(Fraction(2)),)), True))
        self.assertEqual(parse_evidence('works(2)=false')[1], False)
        self.assertEqual(parse_evidence('a')[1], True)
        self.assertEqual(parse_evidence('x=:=1')[0], Comparison('=:=', Constant('x'), Number(Fraction(1))))
        self.assertEqual(parse_observation('size=0.4'), (Constant('size'), Number(0.4)))
        with self.assertRaises(ProgramSyntaxError):
            parse_observation('size')
        with self.assertRaises(ProgramSyntaxError):
            parse_goal('1+2')

    def test_reference_programs_parse(self):
        for path in sorted(settings.PROGRAMS_DIR.glob('*.pl')):
            with self.subTest(program=path.name):
                program = load_program(path)
                self.assertTrue(program.statements)
                self.assertFalse([d for d in validate_syntax(program) if d.severity == 'error'])


class SyntaxValidatorTests(SimpleTestCase):

    def test_well_formed_program(self):
        self.assertEqual(validate_syntax(parse_program(SWEETS)), [])

    def test_range_restriction(self):
        diagnostics = validate_syntax(parse_program('p(X) :- q.\nq.'))
        self.assertEqual(codes(diagnostics), ['range-restriction'])
        self.assertEqual(diagnostics[0].line, 1)

    def test_variables_bound_by_comparisons(self):
        self.assertEqual(validate_syntax(parse_program('works(N) :- temp(N) < 25.0.')), [])

    def test_probabilities(self):
        self.assertEqual(codes(validate_syntax(parse_program('0.7::a; 0.6::b.'))), ['malformed-probability'])
        self.assertIn('malformed-probability', codes(validate_syntax(parse_program('1.5::a.'))))
        self.assertEqual(codes(validate_syntax(parse_program('x ~ finite([0.7:1, 0.6:2]).'))),
                         ['malformed-probability'])
        self.assertEqual(validate_syntax(parse_program('0.3::a; 0.6::b.')), [])

    def test_distribution_arity(self):
        self.assertEqual(codes(validate_syntax(parse_program('x ~ normal(1).'))), ['unknown-distribution'])
        self.assertEqual(codes(validate_syntax(parse_program('x ~ gamma(1,2).'))), ['unknown-distribution'])

    def test_engine_predicates_are_reserved(self):
        self.assertEqual(codes(validate_syntax(parse_program('rv(a,b).'))), ['reserved-head'])

    def test_observation_of_expression(self):
        diagnostics = validate_syntax(parse_program('x ~ normal(0,1).\nobservation(2*x, 1).'))
        self.assertEqual(codes(diagnostics), ['malformed-delta-interval'])

    def test_mixed_sample_space_is_a_warning(self):
        (diagnostic,) = validate_syntax(parse_program('x ~ uniform([1, a]).'))
        self.assertEqual(diagnostic.code, 'mixed-sample-space')
        self.assertEqual(diagnostic.severity, 'warning')


class ArithmeticTests(SimpleTestCase):

    def test_static_evaluation(self):
        self.assertEqual(evaluate_static(parse_term('2*(3+4)')), 14.0)
        self.assertEqual(evaluate_static(parse_term('3/10')), 0.3)
        self.assertEqual(evaluate_static(parse_term('max(1,abs(-5))')), 5.0)
        self.assertTrue(compare_static(Comparison('=<', Number(Fraction(2)), Number(Fraction(2)))))

    def test_symbols_are_numbered_in_order(self):
        table = SymbolTable(['red', 'green'])
        self.assertEqual(table.intern('red'), 1)
        self.assertEqual(table.intern('blue'), 3)
        self.assertEqual(table.name(2.0), 'green')
        self.assertIsNone(table.name(float('nan')))
        self.assertEqual(evaluate_static(Constant('green'), table), 2.0)

    def test_vectorized_over_samples(self):
        x = RandomVariableId(1, 'v1', Constant('x'))
        evaluator = ArithmeticEvaluator(SymbolTable(), {x: np.array([1.0, 2.0, 3.0])})
        np.testing.assert_array_equal(evaluator.evaluate(Compound('*', (Number(Fraction(2)), x))), [2.0, 4.0, 6.0])
        np.testing.assert_array_equal(
            evaluator.compare(Comparison('>', x, Number(Fraction(1)))), [False, True, True]
        )

    def test_nan_compares_false_except_inequality(self):
        x = RandomVariableId(1, 'v1')
        evaluator = ArithmeticEvaluator(SymbolTable(), {x: np.array([np.nan])})
        for op in ('<', '>', '=<', '>=', '=:='):
            self.assertFalse(evaluator.compare(Comparison(op, x, Number(Fraction(1))))[0])
        self.assertTrue(evaluator.compare(Comparison('=\\=', x, Number(Fraction(1))))[0])

    def test_random_variables_in_order(self):
        x, y = RandomVariableId(1, 'v1'), RandomVariableId(2, 'v2')
        expression = Compound('+', (y, Compound('*', (x, y))))
        self.assertEqual(random_variables(expression), [y, x])
        self.assertEqual(random_variables(Variable('X')), [])

    def test_unbound_logic_variables_are_not_numbers(self):
        with self.assertRaises(NonNumericTerm) as caught:
            ArithmeticEvaluator(SymbolTable()).evaluate(Compound('+', (Variable('X'), Number(Fraction(1)))))
        self.assertIsInstance(caught.exception, DCProbLogError)
        self.assertIn('X', str(caught.exception))
