from core.commands import ProgramCommand
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Print the propositional formula of the task: completion plus evidence'
    sampling_options = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--no-symbolic',
            action='store_true',
            help='Keep comparisons over finite variables instead of expanding them into choices',
        )

    def handle(self, *args, **options):
        program = self.load(options)
        engine = InferenceEngine(program, self.run_config(options))
        prepared = engine.prepare(self.task(program, options), symbolic=not options['no_symbolic'])
        formula = prepared.formula

        if options['format'] == 'json':
            self.write_json({
                'variables': [
                    {'id': var.id, 'kind': var.kind, 'label': str(var)} for var in formula.table
                ],
                'formula': formula.to_text().splitlines(),
                'stochastic_leaves': prepared.stochastic_leaves,
            })
            return
        self.stdout.write(formula.to_text(), ending='')
