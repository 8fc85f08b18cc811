from core.commands import ProgramCommand
from desugaring.services import eliminate_ads, eliminate_dcs, unfold_rv
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Print the program after eliminating its syntactic sugar'
    sampling_options = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--stage',
            choices=['facts', 'encoding', 'core'],
            default='core',
            help='Stop after eliminating probabilistic facts and ADs, after encoding the '
                 'distributional clauses, or after unfolding them (default: core)',
        )

    def handle(self, *args, **options):
        program = self.load(options)
        config = self.run_config(options)
        engine = InferenceEngine(program, config)
        engine.validate()
        result = eliminate_ads(engine.ground(self.task(program, options)))
        if options['stage'] != 'facts':
            result = eliminate_dcs(result, config.expansion_cap)
        if options['stage'] == 'core':
            result = unfold_rv(result, config.expansion_cap)

        text = str(result)
        if options['format'] == 'json':
            self.write_json({'stage': options['stage'], 'statements': text.splitlines()})
            return
        self.stdout.write(text, ending='')
