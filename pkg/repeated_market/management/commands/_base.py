"""
Shared plumbing for the market commands: exit codes, banners and scenario loading.
"""
from dataclasses import replace
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from repeated_market.conf import market_settings
from repeated_market.core import Variant
from repeated_market.exceptions import RoundFailure, ScenarioError
from repeated_market.serializers import load_scenario

PARSE_ERROR = 2
DEVIATION_FOUND = 3
RUNTIME_FAILURE = 4


def comma_list(value):
    return [item.strip() for item in value.split(',') if item.strip()]


def int_range(value):
    """'3-10' or '3,5,8' to a list of ints."""
    try:
        if '-' in value and ',' not in value:
            low, high = (int(part) for part in value.split('-', 1))
            return list(range(low, high + 1))
        return [int(item) for item in comma_list(value)]
    except ValueError:
        raise CommandError(f'expected a range like 3-10 or a list like 3,5,8, got {value!r}', returncode=PARSE_ERROR)


class MarketCommand(BaseCommand):
    def add_scenario_arguments(self, parser):
        parser.add_argument(
            '--scenario',
            type=str,
            required=True,
            help='Scenario JSON file, or the name of a preset (e.g. scenario-a-proportional)',
        )
        parser.add_argument('--seed', type=int, help='Seed for generated scenarios; overrides the file')
        parser.add_argument('--horizon', type=int, help='Number of rounds; overrides the file')
        parser.add_argument(
            '--variant',
            type=str,
            choices=[variant.value for variant in Variant],
            help='Market variant; overrides the file',
        )

    def banner(self, title):
        self.stdout.write('\n' + '=' * 60)
        self.stdout.write(self.style.SUCCESS(title))
        self.stdout.write('=' * 60 + '\n')

    def fail(self, message, returncode):
        self.stderr.write(self.style.ERROR(message))
        raise CommandError(message, returncode=returncode)

    def load(self, options):
        """Scenario with the command-line overrides applied."""
        try:
            scenario = load_scenario(options['scenario'], seed=options.get('seed'))
        except ScenarioError as exc:
            self.fail(str(exc), PARSE_ERROR)
        changes = {}
        if options.get('horizon') is not None:
            if options['horizon'] < 1:
                self.fail('--horizon must be a positive integer', PARSE_ERROR)
            changes['horizon'] = options['horizon']
        if options.get('variant'):
            changes['variant'] = Variant(options['variant'])
        if changes:
            scenario = replace(scenario, config=scenario.config.with_changes(**changes))
        return scenario

    def output_path(self, explicit, scenario_path=None):
        """--out as given; a relative path from the scenario file lands under OUTPUT_DIR."""
        if explicit:
            return Path(explicit)
        if scenario_path:
            path = Path(scenario_path)
            return path if path.is_absolute() else market_settings.OUTPUT_DIR / path
        return None

    def runtime_failure(self, exc):
        if isinstance(exc, RoundFailure):
            self.fail(f'simulation aborted at round {exc.round_index}: {exc.cause}', RUNTIME_FAILURE)
        self.fail(f'simulation failed: {exc}', RUNTIME_FAILURE)
