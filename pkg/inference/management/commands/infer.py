from core.commands import ProgramCommand
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Answer the queries of a program, conditioned on its evidence and observations'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--trace-samples',
            metavar='FILE',
            help='Write every sample to FILE as CSV, one column per random variable',
        )

    def handle(self, *args, **options):
        program = self.load(options)
        task = self.task(program, options)
        engine = InferenceEngine(program, self.run_config(options))
        results = engine.answer(task, options['trace_samples'])

        if options['format'] == 'json':
            self.write_json([result.as_dict() for result in results])
            return
        if not results:
            self.stdout.write(self.style.WARNING('The task has no queries'))
        for result in results:
            self.stdout.write(str(result))
