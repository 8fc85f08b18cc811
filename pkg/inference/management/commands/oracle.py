from core.commands import ProgramCommand
from inference.oracles import enumerate_oracle, rejection_oracle
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Answer the queries with an independent oracle: exact enumeration or rejection sampling'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--method',
            choices=['enumerate', 'rejection'],
            default='enumerate',
            help='Enumerate all worlds of a finite program, or sample and reject (default: enumerate)',
        )

    def handle(self, *args, **options):
        program = self.load(options)
        config = self.run_config(options)
        engine = InferenceEngine(program, config)
        engine.validate()
        core = engine.desugar(engine.ground(self.task(program, options)))

        if options['method'] == 'enumerate':
            results = enumerate_oracle(core, config)
        else:
            results = rejection_oracle(core, config.samples, config.seed, config.block_size)

        if options['format'] == 'json':
            self.write_json([result.as_dict() for result in results])
            return
        for result in results:
            self.stdout.write(str(result))
