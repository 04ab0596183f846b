"""
Asymptotic frustration and prices of generated markets as the number of buyers grows.
"""

from repeated_market.analysis import run_sweep
from repeated_market.conf import market_settings
from repeated_market.exceptions import InvalidMechanism, MarketError
from repeated_market.reports import frame_to_csv, sweep_frame
from repeated_market.rights import DistributionMechanism, MechanismKind
from repeated_market.scenarios import ClaimScale

from ._base import PARSE_ERROR, MarketCommand, int_range

SWEEP_MECHANISMS = (
    MechanismKind.PROPORTIONAL.value,
    MechanismKind.CONTESTED_GARMENT.value,
    MechanismKind.CANONICAL.value,
)


class Command(MarketCommand):
    help = 'Sweep Dirichlet-generated markets over buyer counts, rights against free market'

    def add_arguments(self, parser):
        parser.add_argument('--sizes', type=int_range, default=list(range(3, 11)), help='Buyer counts, e.g. 3-10')
        parser.add_argument('--seeds', type=int, help='Seeds 0..N-1 per size (default SWEEP_SEEDS)')
        parser.add_argument('--claim-scale', type=str, choices=ClaimScale.choices, default=ClaimScale.UNIT)
        parser.add_argument(
            '--concentration',
            type=float,
            default=1.0,
            help='Dirichlet concentration; inf gives the deterministic means',
        )
        parser.add_argument(
            '--mechanism',
            type=str,
            choices=SWEEP_MECHANISMS,
            default=MechanismKind.PROPORTIONAL.value,
            help='Distribution mechanism of the rights runs',
        )
        parser.add_argument('--rank', type=int, help='Claim rank of the canonical mechanism')
        parser.add_argument('--workers', type=int, help='Worker processes (default SWEEP_WORKERS)')
        parser.add_argument('--horizon', type=int, help='Rounds per run (default 10 per buyer)')
        parser.add_argument('--out', type=str, help='CSV path; without one the CSV goes to stdout')

    def mechanism(self, options, sizes):
        try:
            mechanism = DistributionMechanism(options['mechanism'], rank=options.get('rank'))
        except InvalidMechanism as exc:
            self.fail(f'--mechanism: {exc}', PARSE_ERROR)
        if mechanism.max_rank > min(sizes):
            self.fail(f'{mechanism.label} needs at least {mechanism.max_rank} buyers per market', PARSE_ERROR)
        return mechanism

    def handle(self, *args, **options):
        sizes = options['sizes']
        seeds = options.get('seeds') or market_settings.SWEEP_SEEDS
        workers = options.get('workers') or market_settings.SWEEP_WORKERS
        concentration = options['concentration']
        if not sizes or min(sizes) < 2:
            self.fail('every size needs at least two buyers', PARSE_ERROR)
        if seeds < 1 or workers < 1:
            self.fail('--seeds and --workers must be positive', PARSE_ERROR)
        if not concentration > 0:
            self.fail('--concentration must be positive', PARSE_ERROR)
        mechanism = self.mechanism(options, sizes)

        try:
            rows = run_sweep(
                sizes,
                range(seeds),
                claim_scale=options['claim_scale'],
                concentration=concentration,
                workers=workers,
                horizon=options.get('horizon'),
                mechanism=mechanism,
            )
        except MarketError as exc:
            self.runtime_failure(exc)

        frame = sweep_frame(rows)
        path = options.get('out')
        text = frame_to_csv(frame, path)
        if path is None:
            self.stdout.write(text, ending='')
            return

        self.banner('SWEEP')
        self.stdout.write(f'  sizes:     {sizes[0]}..{sizes[-1]}')
        self.stdout.write(f'  seeds:     {seeds}')
        self.stdout.write(f'  mechanism: {mechanism.label}')
        self.stdout.write(f'  runs:      {len(rows)}')
        self.stdout.write(self.style.SUCCESS(f'\n✓ Summary written to {path}'))
