from fractions import Fraction

from django.test import SimpleTestCase

from core.exceptions import GroundingError, NonTerminatingGrounding, UnknownPredicate
from language.parser import parse_program, parse_term
from language.terms import Comparison, Compound, Constant, Number, QueryTask, Variable

from .services import relevant_ground_program, synthetic_atom
from .unification import is_ground, rename, substitute, unify, variant_key

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


def ground(text: str, memo_cap: int = 1_000_000):
    return relevant_ground_program(parse_program(text), memo_cap=memo_cap)


def clause_texts(program):
    return [str(clause) for clause in program.clauses]


class UnificationTests(SimpleTestCase):

    def test_unify_and_substitute(self):
        left, right = parse_term('f(X, b)'), parse_term('f(a, Y)')
        subst = unify(left, right)
        self.assertEqual(substitute(left, subst), parse_term('f(a, b)'))
        self.assertEqual(substitute(right, subst), parse_term('f(a, b)'))

    def test_clash_and_occurs_check(self):
        self.assertIsNone(unify(parse_term('f(a)'), parse_term('f(b)')))
        self.assertIsNone(unify(parse_term('f(a)'), parse_term('g(a)')))
        self.assertIsNone(unify(Variable('X'), parse_term('f(X)')))

    def test_identical_terms_unify_without_bindings(self):
        self.assertEqual(unify(parse_term('f(a)'), parse_term('f(a)')), {})

    def test_variants(self):
        self.assertEqual(variant_key(parse_term('p(X, Y)')), variant_key(parse_term('p(A, B)')))
        self.assertNotEqual(variant_key(parse_term('p(X, X)')), variant_key(parse_term('p(A, B)')))

    def test_rename_apart(self):
        (clause,) = parse_program('p(X) :- q(X, Y).').statements
        renamed = rename(clause, '#1')
        self.assertEqual(renamed.head, Compound('p', (Variable('X#1'),)))
        self.assertFalse(is_ground(renamed.head))
        self.assertTrue(is_ground(parse_term('p(a, 1)')))


class RelevantGroundingTests(SimpleTestCase):

    def test_irrelevant_clauses_are_dropped(self):
        program = ground('0.3::a.\n0.4::b.\nc :- a.\nd :- b.\nquery(c).')
        self.assertEqual(clause_texts(program), ['0.3::a.', 'c :- a.'])
        self.assertEqual(program.task.queries, (Constant('c'),))
        self.assertEqual(program.atom_index[Constant('c')], [1])

    def test_static_comparisons_are_decided(self):
        program = ground('p(N) :- n(N), N > 2.\nn(1).\nn(3).\nquery(p(X)).')
        self.assertEqual(clause_texts(program), ['p(3) :- n(3).', 'n(1).', 'n(3).'])
        self.assertEqual(program.task.queries, (parse_term('p(3)'),))

    def test_random_terms_and_their_clauses(self):
        program = ground(SWEETS)
        self.assertEqual(program.random_terms, frozenset({Constant('red'), Constant('yellow')}))
        self.assertEqual(len(program.clauses), 7)
        self.assertIn('favorite :- red>15, not yellow<5.', clause_texts(program))

    def test_recursive_program(self):
        program = ground(
            'edge(1,2).\nedge(2,3).\n'
            'path(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).\n'
            'query(path(1,3)).'
        )
        texts = clause_texts(program)
        self.assertIn('path(1,3) :- edge(1,2), path(2,3).', texts)
        self.assertIn('path(2,3) :- edge(2,3).', texts)
        self.assertNotIn('path(1,2) :- edge(1,2).', texts)

    def test_comparison_query_gets_a_synthetic_atom(self):
        program = ground('x ~ normal(0,1).\nquery(x > 2).')
        (query,) = program.task.queries
        self.assertEqual(query, synthetic_atom('query', 1))
        self.assertEqual(program.task.label(query), 'x>2')
        self.assertIn("'$query'(1) :- x>2.", clause_texts(program))

    def test_observations_become_evidence(self):
        program = ground('x ~ normal(0,1).\n0.5::a.\nquery(a).\nobservation(x, 0.5).')
        observed = synthetic_atom('observed', 1)
        self.assertEqual(program.task.evidence, ((observed, True),))
        self.assertEqual(program.task.observations, ((Constant('x'), Number(0.5)),))
        self.assertIn('x ~ normal(0,1).', clause_texts(program))

    def test_explicit_task_overrides_program_task(self):
        program = relevant_ground_program(
            parse_program('0.3::a.\n0.4::b.\nquery(a).'),
            QueryTask((Constant('b'),)),
        )
        self.assertEqual(clause_texts(program), ['0.4::b.'])

    def test_without_task_every_ground_head_is_relevant(self):
        program = ground('0.3::a.\nb :- a.\nx ~ normal(0,1).')
        self.assertEqual(clause_texts(program), ['0.3::a.', 'b :- a.', 'x ~ normal(0,1).'])

    def test_symbols_of_sample_spaces(self):
        program = ground('color ~ uniform([r,g,b]).\nred :- color =:= r.\nquery(red).')
        self.assertEqual(program.symbols.intern('r'), 1)
        self.assertEqual(program.symbols.intern('b'), 3)

    def test_unknown_query_predicate(self):
        with self.assertRaises(UnknownPredicate):
            ground('a.\nquery(b).')

    def test_floundering_negation(self):
        with self.assertRaises(GroundingError):
            ground('p :- not q(X).\nq(1).\nquery(p).')

    def test_infinite_grounding_hits_the_cap(self):
        with self.assertRaises(NonTerminatingGrounding):
            ground('nat(0).\nnat(s(X)) :- nat(X).\nquery(nat(X)).', memo_cap=50)

    def test_ground_comparisons_keep_numbers(self):
        program = ground('x ~ normal(0,1).\np :- x < 1/2.\nquery(p).')
        rule = program.clauses[program.atom_index[Constant('p')][0]]
        self.assertEqual(rule.body[0].atom, Comparison('<', Constant('x'), Number(Fraction(1, 2))))
