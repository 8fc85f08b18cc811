from pathlib import Path

from circuits.services import model_count, property_checks, to_dot
from core.commands import ProgramCommand
from inference.services import InferenceEngine


class Command(ProgramCommand):
    help = 'Compile the evidence and query formulas to smooth deterministic decomposable circuits'
    sampling_options = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--dot',
            metavar='FILE',
            help='Write the circuits to FILE in Graphviz DOT format',
        )

    def handle(self, *args, **options):
        program = self.load(options)
        engine = InferenceEngine(program, self.run_config(options))
        compiled = engine.compile(engine.prepare(self.task(program, options)))
        formula = compiled.prepared.formula

        circuits = [('evidence', compiled.denominator)]
        circuits += [(label, circuit) for (label, _), circuit in zip(compiled.prepared.queries, compiled.numerators)]
        summary = []
        for label, circuit in circuits:
            entry = {
                'circuit': label,
                'nodes': circuit.size,
                'variables': len(circuit.variables),
                'models': model_count(circuit),
            }
            entry.update(property_checks(circuit))
            summary.append(entry)

        if options['dot']:
            graphs = [to_dot(circuit, formula, f'c{index}') for index, (_, circuit) in enumerate(circuits)]
            Path(options['dot']).write_text(''.join(graphs), encoding='utf-8')

        if options['format'] == 'json':
            self.write_json(summary)
            return
        for entry in summary:
            self.stdout.write(
                f"{entry['circuit']}: {entry['nodes']} nodes, {entry['variables']} variables, "
                f"{entry['models']} models"
            )
        if options['dot']:
            self.stdout.write(self.style.SUCCESS(f"Wrote {len(circuits)} circuits to {options['dot']}"))
