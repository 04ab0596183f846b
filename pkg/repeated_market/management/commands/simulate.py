"""
Run one scenario and write its per-round trace as CSV.
"""

from repeated_market.exceptions import MarketError
from repeated_market.engine import run
from repeated_market.reports import write_trace_csv

from ._base import PARSE_ERROR, MarketCommand, comma_list


class Command(MarketCommand):
    help = 'Simulate a scenario and write one CSV row per round'

    def add_arguments(self, parser):
        self.add_scenario_arguments(parser)
        parser.add_argument('--out', type=str, help='CSV path; without one the CSV goes to stdout')
        parser.add_argument('--columns', type=comma_list, help='Comma-separated subset of the CSV columns')

    def handle(self, *args, **options):
        scenario = self.load(options)
        config = scenario.config
        columns = options.get('columns') or scenario.columns or None
        path = self.output_path(options.get('out'), scenario.output_path)

        try:
            trace = run(config)
        except MarketError as exc:
            self.runtime_failure(exc)

        try:
            text = write_trace_csv(trace, path, columns)
        except KeyError as exc:
            self.fail(f'{exc.args[0]}', PARSE_ERROR)

        if path is None:
            self.stdout.write(text, ending='')
            return

        self.banner(f'SIMULATION: {config.name or options["scenario"]}')
        self.stdout.write(f'  variant:   {config.variant.value}')
        self.stdout.write(f'  mechanism: {config.mechanism.label}')
        self.stdout.write(f'  rounds:    {len(trace)}')
        self.stdout.write(f'  price:     {trace.prices[-1]:.6f}')
        self.stdout.write(f'  expected frustration: {trace.expected_frustration_path[-1]:.6f}')
        zero = trace.first_zero_frustration_round()
        if zero is not None:
            self.stdout.write(f'  frustration zero from round {zero}')
        degenerate = [record.round for record in trace.records if record.degenerate]
        if degenerate:
            self.stdout.write(self.style.WARNING(f'  degenerate rounds: {degenerate}'))
        self.stdout.write(self.style.SUCCESS(f'\n✓ Trace written to {path}'))
