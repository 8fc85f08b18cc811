import json
import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from .config import RunConfig
from .exceptions import (
    BudgetExceeded, CompilationBudgetExceeded, CompilationError, ConfigurationError, DCProbLogError, Diagnostic,
    InvalidProgram, NonNumericTerm, ProgramSyntaxError, ZeroProbabilityEvidence,
)


class RunConfigTests(SimpleTestCase):

    def test_defaults_come_from_settings(self):
        config = RunConfig.from_settings()
        self.assertEqual(config.samples, settings.DCPLP['SAMPLES'])
        self.assertEqual(config.seed, settings.DCPLP['SEED'])
        self.assertTrue(config.symbolic)

    def test_overrides_win_and_none_is_ignored(self):
        config = RunConfig.from_settings(samples=500, seed=None)
        self.assertEqual(config.samples, 500)
        self.assertEqual(config.seed, settings.DCPLP['SEED'])

    @override_settings(DCPLP={'SAMPLES': 77, 'BLOCK_SIZE': 8})
    def test_reads_overridden_settings(self):
        config = RunConfig.from_settings()
        self.assertEqual(config.samples, 77)
        self.assertEqual(config.block_size, 8)

    def test_rejects_invalid_values(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_settings(samples=0)
        with self.assertRaises(ConfigurationError):
            RunConfig.from_settings(node_cap=-1)
        with self.assertRaises(ConfigurationError):
            RunConfig().with_overrides(block_size=0)

    def test_unknown_keys_are_rejected(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_settings(colour='red')

    def test_workers(self):
        self.assertEqual(RunConfig(jobs=3).workers, 3)
        self.assertGreaterEqual(RunConfig(jobs=0).workers, 1)


class ExceptionTests(SimpleTestCase):

    def test_stage_and_exit_code(self):
        self.assertEqual(ProgramSyntaxError('x').stage, 'parse')
        self.assertEqual(ProgramSyntaxError('x').exit_code, 1)
        self.assertEqual(CompilationBudgetExceeded('x').stage, 'compile')
        self.assertEqual(CompilationBudgetExceeded('x').exit_code, 2)
        self.assertTrue(issubclass(CompilationBudgetExceeded, BudgetExceeded))
        self.assertEqual(ZeroProbabilityEvidence('x').stage, 'infer')

    def test_compilation_and_evaluation_errors(self):
        self.assertEqual(CompilationError('x').stage, 'compile')
        self.assertEqual(CompilationError('x').exit_code, 1)
        self.assertFalse(issubclass(CompilationError, BudgetExceeded))
        self.assertEqual(NonNumericTerm('x').stage, 'infer')
        self.assertTrue(issubclass(NonNumericTerm, DCProbLogError))

    def test_invalid_program_keeps_diagnostics(self):
        diagnostic = Diagnostic('range-restriction', 'X is unbound', 3)
        exc = InvalidProgram('bad', [diagnostic], 3)
        self.assertEqual(exc.diagnostics, [diagnostic])
        self.assertEqual(exc.line, 3)
        self.assertEqual(str(diagnostic), 'error [range-restriction] line 3: X is unbound')


class ProgramCommandTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def write(self, text: str) -> str:
        path = Path(self.directory.name) / 'program.pl'
        path.write_text(text, encoding='utf-8')
        return str(path)

    def call(self, *args) -> str:
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_syntax_error_names_stage_file_and_line(self):
        path = self.write('a.\nb :- .\n')
        with self.assertRaises(CommandError) as caught:
            self.call('infer', path)
        self.assertIn('[parse]', str(caught.exception))
        self.assertIn(f'{path}:2', str(caught.exception))
        self.assertEqual(caught.exception.returncode, 1)

    def test_validation_errors_are_listed(self):
        path = self.write('p(X) :- q.\nq.\nquery(p(1)).\n')
        with self.assertRaises(CommandError) as caught:
            self.call('infer', path)
        self.assertIn('[validate]', str(caught.exception))
        self.assertIn('range-restriction', str(caught.exception))

    def test_missing_file(self):
        with self.assertRaises(CommandError):
            self.call('infer', str(Path(self.directory.name) / 'missing.pl'))

    def test_budget_exhaustion_exits_with_two(self):
        path = str(settings.PROGRAMS_DIR / 'machines.pl')
        with self.assertRaises(CommandError) as caught:
            self.call('infer', path, '--node-cap', '2')
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn('[compile]', str(caught.exception))

    def test_query_flag_replaces_program_queries(self):
        path = self.write('0.3::a.\n0.6::b.\nquery(a).\n')
        results = json.loads(self.call('infer', path, '--query', 'b', '--format', 'json'))
        self.assertEqual([result['query'] for result in results], ['b'])
        self.assertAlmostEqual(results[0]['probability'], 0.6)

    def test_evidence_flag_adds_evidence(self):
        path = self.write('0.5::a.\n0.5::b.\nc :- a.\nc :- b.\nquery(a).\n')
        results = json.loads(self.call('infer', path, '--evidence', 'c=true', '--format', 'json'))
        self.assertAlmostEqual(results[0]['probability'], 2 / 3)
        self.assertTrue(results[0]['exact'])
