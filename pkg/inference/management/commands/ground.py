from core.commands import ProgramCommand
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Print the relevant ground program of the task'
    sampling_options = False

    def handle(self, *args, **options):
        program = self.load(options)
        engine = InferenceEngine(program, self.run_config(options))
        engine.validate()
        ground = engine.ground(self.task(program, options))

        if options['format'] == 'json':
            self.write_json({
                'clauses': [str(clause) for clause in ground.clauses],
                'queries': [ground.task.label(query) for query in ground.task.queries],
            })
            return
        self.stdout.write(str(ground), ending='')
