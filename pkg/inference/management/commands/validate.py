from dataclasses import asdict

from django.core.management.base import CommandError

from core.commands import ProgramCommand
from inference.oracles import dc1_check
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Check a program: syntax, well-formedness and mutually exclusive distributional clauses'

    def handle(self, *args, **options):
        program = self.load(options)
        config = self.run_config(options)
        engine = InferenceEngine(program, config)
        prepared = engine.prepare(self.task(program, options))
        diagnostics = prepared.diagnostics + dc1_check(
            prepared.core, config.validation_samples, config.seed, config.block_size
        )
        errors = [d for d in diagnostics if d.severity == 'error']

        if options['format'] == 'json':
            self.write_json({'ok': not errors, 'diagnostics': [asdict(d) for d in diagnostics]})
        else:
            for diagnostic in diagnostics:
                self.stdout.write(str(diagnostic))
            if not errors:
                self.stdout.write(self.style.SUCCESS(f'ok with {len(diagnostics)} diagnostics'))
        if errors:
            raise CommandError(f'[validate] {self.path}: {len(errors)} error(s)', returncode=1)
