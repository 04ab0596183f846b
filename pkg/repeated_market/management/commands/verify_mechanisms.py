"""
Sample the three mechanism conditions and cross-check the implicit price solver.
"""

from repeated_market.analysis import cross_validate_price_solver
from repeated_market.reports import write_json_report
from repeated_market.rights import DistributionMechanism, verify_axioms

from ._base import DEVIATION_FOUND, MarketCommand

# canonical(2) and the increasing weights are expected to fail condition 2
MECHANISMS = (
    DistributionMechanism.proportional(),
    DistributionMechanism.contested_garment(),
    DistributionMechanism.canonical(1),
    DistributionMechanism.canonical(2),
    DistributionMechanism.weighted([(0.5, 1), (0.3, 2), (0.2, 3)]),
    DistributionMechanism.weighted([(0.2, 1), (0.8, 2)]),
)


class Command(MarketCommand):
    help = 'Check the distribution mechanisms on sampled instances and cross-validate the price solver'

    def add_arguments(self, parser):
        parser.add_argument('--samples', type=int, default=1000, help='Sampled instances per mechanism')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--instances', type=int, default=1000, help='Price solver instances')
        parser.add_argument('--report', type=str, help='Write the JSON report here')
        parser.add_argument(
            '--strict',
            action='store_true',
            help='Exit 3 when the price solvers disagree or a mechanism fails any condition',
        )

    def handle(self, *args, **options):
        self.banner('MECHANISM CONDITIONS')
        reports = []
        for mechanism in MECHANISMS:
            report = verify_axioms(mechanism, samples=options['samples'], rng_seed=options['seed'])
            reports.append(report)
            marks = '  '.join(
                f'{axiom}:{"ok" if report.axiom_passed(axiom) else "FAIL"}' for axiom in (1, 2, 3)
            )
            style = self.style.SUCCESS if report.passed else self.style.WARNING
            self.stdout.write(style(f'  {report.mechanism:<32} {marks}'))

        solver = cross_validate_price_solver(options['instances'], rng_seed=options['seed'])
        self.stdout.write(f'\n  price solver: {solver.instances} instances, max discrepancy {solver.max_discrepancy:.3e}')

        if options.get('report'):
            write_json_report(
                {'mechanisms': [report.to_dict() for report in reports], 'price_solver': solver.to_dict()},
                options['report'],
            )

        failed = not solver.passed() or (options['strict'] and not all(report.passed for report in reports))
        if failed:
            self.fail('verification failed', DEVIATION_FOUND)
        self.stdout.write(self.style.SUCCESS('\n✓ Verification finished'))
