"""
Base class of the management commands that read a program file.

Handles the flags every stage shares, merges command-line queries and
evidence into the program's task, and turns engine errors into
``CommandError`` with the stage, file and line in the message.
"""
import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.core.serializers.json import DjangoJSONEncoder

from language.parser import parse_evidence, parse_goal, parse_observation
from language.services import load_program
from language.terms import Program, QueryTask

from .config import RunConfig
from .exceptions import DCProbLogError


class ProgramCommand(BaseCommand):
    requires_system_checks = []
    # Stage commands turn off the flags they have no use for
    sampling_options = True
    task_options = True

    def add_arguments(self, parser):
        parser.add_argument('program', help='Path to a DC-ProbLog program file')
        if self.task_options:
            parser.add_argument(
                '--query',
                action='append',
                default=[],
                help='Query atom or comparison; replaces the queries of the program (repeatable)',
            )
            parser.add_argument(
                '--evidence',
                action='append',
                default=[],
                help='Evidence as atom=true or atom=false, added to the program evidence (repeatable)',
            )
            parser.add_argument(
                '--observe',
                action='append',
                default=[],
                help='Observation as term=value, added to the program observations (repeatable)',
            )
        if self.sampling_options:
            parser.add_argument('--samples', type=int, help='Number of samples (default: 10000)')
            parser.add_argument('--seed', type=int, help='Random seed (default: 42)')
            parser.add_argument('--jobs', type=int, help='Worker processes, 0 for one per core (default: 0)')
            parser.add_argument('--block-size', type=int, help='Samples drawn per block (default: 1024)')
            parser.add_argument(
                '--no-symbolic',
                action='store_true',
                help='Sample finite variables instead of marginalizing them exactly',
            )
        parser.add_argument('--node-cap', type=int, help='Maximum number of circuit nodes')
        parser.add_argument('--variable-cap', type=int, help='Maximum number of formula variables')
        parser.add_argument('--expansion-cap', type=int, help='Maximum number of expanded rules')
        parser.add_argument('--memo-cap', type=int, help='Maximum number of grounding table entries')
        parser.add_argument(
            '--format',
            choices=['text', 'json'],
            default='text',
            help='Output format (default: text)',
        )

    def execute(self, *args, **options):
        self.path = options.get('program')
        try:
            return super().execute(*args, **options)
        except DCProbLogError as exc:
            raise self.command_error(exc) from exc

    def command_error(self, exc: DCProbLogError) -> CommandError:
        where = self.path or ''
        if exc.line is not None:
            where += f':{exc.line}'
        prefix = f'[{exc.stage}] {where}: ' if where else f'[{exc.stage}] '
        message = f'{prefix}{exc.message}'
        for diagnostic in getattr(exc, 'diagnostics', ()):
            message += f'\n  {diagnostic}'
        return CommandError(message, returncode=exc.exit_code)

    def configure_logging(self, options):
        if options.get('verbosity', 1) >= 2:
            for app in settings.LOCAL_APPS:
                logging.getLogger(app).setLevel(logging.DEBUG)
        elif options.get('verbosity', 1) == 0:
            for app in settings.LOCAL_APPS:
                logging.getLogger(app).setLevel(logging.ERROR)

    def load(self, options) -> Program:
        self.configure_logging(options)
        path = Path(options['program'])
        if not path.is_file():
            raise CommandError(f'[parse] {path}: no such file')
        return load_program(path)

    def task(self, program: Program, options) -> QueryTask:
        """The program's task with command-line queries, evidence and observations applied"""
        if not self.task_options:
            return program.task
        queries = tuple(parse_goal(text) for text in options['query'])
        extra = QueryTask(
            (),
            tuple(parse_evidence(text) for text in options['evidence']),
            tuple(parse_observation(text) for text in options['observe']),
        )
        task = program.task.merge(extra)
        if queries:
            task = QueryTask(queries, task.evidence, task.observations)
        return task

    def run_config(self, options) -> RunConfig:
        overrides = {
            'node_cap': options.get('node_cap'),
            'variable_cap': options.get('variable_cap'),
            'expansion_cap': options.get('expansion_cap'),
            'memo_cap': options.get('memo_cap'),
        }
        if self.sampling_options:
            overrides.update(
                samples=options.get('samples'),
                seed=options.get('seed'),
                jobs=options.get('jobs'),
                block_size=options.get('block_size'),
                symbolic=False if options.get('no_symbolic') else None,
            )
        return RunConfig.from_settings(**overrides)

    def write_json(self, data):
        self.stdout.write(json.dumps(data, cls=DjangoJSONEncoder, indent=2))
