"""
Search for profitable deviations from greedy play.
"""

from repeated_market.analysis import (
    audit_coalition,
    audit_unilateral,
    default_coalitions,
    parse_trader,
)
from repeated_market.conf import market_settings
from repeated_market.exceptions import AuditError, RoundFailure
from repeated_market.reports import write_json_report

from ._base import DEVIATION_FOUND, PARSE_ERROR, MarketCommand


class Command(MarketCommand):
    help = 'Audit a scenario for profitable unilateral and coalition deviations; exits 3 if one is found'

    def add_arguments(self, parser):
        self.add_scenario_arguments(parser)
        parser.add_argument('--report', type=str, help='Write the full JSON report here')
        parser.add_argument(
            '--coalition',
            action='append',
            default=[],
            help='Coalition to scan, e.g. "buyer:0,buyer:1"; repeat for more',
        )
        parser.add_argument(
            '--no-coalitions',
            action='store_true',
            help='Only run the unilateral audit',
        )
        parser.add_argument('--tolerance', type=float, help='Gain above which a deviation counts as profitable')

    def coalitions(self, config, options):
        if options['no_coalitions']:
            return []
        if not options['coalition']:
            return default_coalitions(config)
        try:
            return [tuple(parse_trader(item) for item in text.split(',')) for text in options['coalition']]
        except AuditError as exc:
            self.fail(str(exc), PARSE_ERROR)

    def handle(self, *args, **options):
        scenario = self.load(options)
        config = scenario.config
        tolerance = options.get('tolerance')
        if tolerance is None:
            tolerance = market_settings.AUDIT_TOLERANCE
        coalitions = self.coalitions(config, options)

        try:
            unilateral = audit_unilateral(config, tolerance=tolerance)
            joint = [audit_coalition(config, coalition=members, tolerance=tolerance) for members in coalitions]
        except AuditError as exc:
            self.fail(str(exc), PARSE_ERROR)
        except RoundFailure as exc:
            self.runtime_failure(exc)

        reports = [unilateral] + joint
        profitable = [report for report in reports if report.profitable]
        data = {
            'scenario': config.name or options['scenario'],
            'horizon': config.horizon,
            'tolerance': tolerance,
            'profitable': bool(profitable),
            'unilateral': unilateral.to_dict(),
            'coalitions': [report.to_dict() for report in joint],
        }
        if options.get('report'):
            write_json_report(data, options['report'])

        self.banner(f'AUDIT: {data["scenario"]}')
        self.stdout.write(f'  unilateral trials: {len(unilateral.trials)}')
        self.stdout.write(f'  unilateral max gain: {unilateral.max_gain:.3e}')
        for report in joint:
            members = ', '.join(str(trader) for trader in report.coalition)
            self.stdout.write(f'  coalition [{members}]: {len(report.trials)} trials, max gain {report.max_gain:.3e}')
        notes = sum(len(report.notes) for report in reports)
        if notes:
            self.stdout.write(f'  notes: {notes} (see the JSON report)')

        if profitable:
            for report in profitable:
                for trial in report.witnesses[:5]:
                    labels = '; '.join(deviation.label for deviation in trial.deviations)
                    self.stderr.write(self.style.ERROR(f'  gain {trial.gain:.3e}: {labels}'))
            self.fail('profitable deviation found', DEVIATION_FOUND)
        self.stdout.write(self.style.SUCCESS('\n✓ No profitable deviation found'))
