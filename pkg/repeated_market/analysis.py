"""
Empirical checks of the greedy equilibrium and its dynamics.

Nothing here proves anything: the audits replay traces with short bid
changes and report whether any of them paid off, the other checks scan a
trace or a batch of random instances for the first counterexample.
"""
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .core import Variant
from .engine import run
from .exceptions import AuditError, RoundFailure
from .mechanism import SellerOffer
from .pricing import (
    bisect_implicit_price,
    canonical_lower_bound,
    buyer_indexed_lower_bound,
    greedy_seller_bid,
    rank_weights,
    solve_implicit_price,
)
from .scenarios import ClaimScale, generate_dirichlet_scenario

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.05, 0.1, 0.25, 0.5)
DEFAULT_PRICE_DELTAS = (-0.5, -0.25, -0.1, -0.05, 0.05, 0.1, 0.25, 0.5)
COALITION_FRACTIONS = (0.1, 0.5)
COALITION_PRICE_DELTAS = (-0.1, 0.1)
GAIN_TOLERANCE = 1e-9
DEFAULT_COALITION_SCANS = 3


class DeviationKind(str, Enum):
    SELLER_WITHHOLD = 'seller_withhold'
    SELLER_PRICE = 'seller_price'
    BUYER_SELL_LESS_RIGHT = 'buyer_sell_less_right'
    BUYER_BUY_LESS_RIGHT = 'buyer_buy_less_right'
    BUYER_PRICE = 'buyer_price'

    @property
    def side(self):
        return 'seller' if self.value.startswith('seller') else 'buyer'

    @property
    def is_price(self):
        return self in (DeviationKind.SELLER_PRICE, DeviationKind.BUYER_PRICE)


@dataclass(frozen=True)
class TraderRef:
    side: str
    index: int

    def __post_init__(self):
        if self.side not in ('seller', 'buyer'):
            raise AuditError(f'unknown trader side {self.side!r}')
        if self.index < 0:
            raise AuditError('trader index must be non-negative')

    @classmethod
    def seller(cls, index):
        return cls('seller', index)

    @classmethod
    def buyer(cls, index):
        return cls('buyer', index)

    def __iter__(self):
        return iter((self.side, self.index))

    def __str__(self):
        return f'{self.side} {self.index}'


@dataclass(frozen=True)
class Deviation:
    """
    Change to one trader's greedy bid in one round.

    A withholding seller also offers its whole stock in the round after, so
    the withheld Good is sold late rather than stored.

    Volume kinds take a fraction in (0, 1] removed from the offered or bid
    volume. Price kinds take a relative change greater than -1.
    """

    trader: TraderRef
    kind: DeviationKind
    magnitude: float
    round: int

    def __post_init__(self):
        kind = DeviationKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind.side != self.trader.side:
            raise AuditError(f'{kind.value} cannot be applied to a {self.trader.side}')
        if self.round < 1:
            raise AuditError('deviation rounds are 1-based')
        if kind.is_price and self.magnitude <= -1:
            raise AuditError(f'price change {self.magnitude} would make the price negative')
        if not kind.is_price and not 0 < self.magnitude <= 1:
            raise AuditError(f'volume fraction {self.magnitude} outside (0, 1]')

    @property
    def rounds(self):
        """Rounds the deviation acts in; withheld Good is released the round after."""
        if self.kind is DeviationKind.SELLER_WITHHOLD:
            return (self.round, self.round + 1)
        return (self.round,)

    def adjust_offer(self, offer, state=None, config=None):
        if self.kind is DeviationKind.SELLER_WITHHOLD:
            if state is not None and state.round > self.round:
                stock = state.sellers[self.trader.index].good
                return greedy_seller_bid(self.trader.index, state, config, volume=stock)
            return SellerOffer(offer.volume * (1.0 - self.magnitude), offer.price)
        return SellerOffer(offer.volume, offer.price * (1.0 + self.magnitude))

    def adjust_bid(self, bid):
        if self.kind is DeviationKind.BUYER_SELL_LESS_RIGHT:
            return replace(bid, right_offer_volume=bid.right_offer_volume * (1.0 - self.magnitude))
        if self.kind is DeviationKind.BUYER_BUY_LESS_RIGHT:
            dropped = bid.max_right_volume * self.magnitude
            return replace(
                bid,
                max_right_volume=bid.max_right_volume - dropped,
                max_good_volume=max(0.0, bid.max_good_volume - dropped),
            )
        factor = 1.0 + self.magnitude
        if bid.right_offer_volume > 0:
            return replace(bid, right_offer_price=bid.right_offer_price * factor)
        return replace(
            bid,
            max_good_price=bid.max_good_price * factor,
            max_right_price=bid.max_right_price * factor,
        )

    def skip_reason(self, record):
        """Why this deviation would not change the baseline round, or None."""
        if self.trader.side == 'seller':
            if self.trader.index >= len(record.offers):
                return f'no seller {self.trader.index}'
            if record.offers[self.trader.index].volume <= 0:
                return 'seller offers nothing'
            return None
        if self.trader.index >= len(record.bids):
            return f'no bid from buyer {self.trader.index}'
        bid = record.bids[self.trader.index]
        if self.kind is DeviationKind.BUYER_SELL_LESS_RIGHT and bid.right_offer_volume <= 0:
            return 'buyer offers no Right'
        if self.kind is DeviationKind.BUYER_BUY_LESS_RIGHT and bid.max_right_volume <= 0:
            return 'buyer bids for no Right'
        return None

    @property
    def label(self):
        return f'{self.trader} {self.kind.value}({self.magnitude:+g}) at round {self.round}'

    def to_dict(self):
        return {
            'trader': {'side': self.trader.side, 'index': self.trader.index},
            'kind': self.kind.value,
            'magnitude': self.magnitude,
            'round': self.round,
        }


@dataclass
class AuditTrial:
    deviations: tuple
    gains: dict

    @property
    def gain(self):
        """Gain of the deviator; for a coalition, the gain of its worst-off member."""
        return min(self.gains.values())

    def to_dict(self):
        return {
            'deviations': [deviation.to_dict() for deviation in self.deviations],
            'gains': {str(trader): gain for trader, gain in self.gains.items()},
            'gain': self.gain,
        }


@dataclass
class AuditReport:
    scenario: str
    horizon: int
    baseline_utilities: object
    coalition: tuple = ()
    trials: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    tolerance: float = GAIN_TOLERANCE

    @property
    def max_gain(self):
        if not self.trials:
            return float('-inf')
        return max(trial.gain for trial in self.trials)

    @property
    def witnesses(self):
        return [trial for trial in self.trials if trial.gain > self.tolerance]

    @property
    def profitable(self):
        return bool(self.witnesses)

    def to_dict(self):
        return {
            'scenario': self.scenario,
            'horizon': self.horizon,
            'coalition': [str(trader) for trader in self.coalition],
            'baseline_utilities': self.baseline_utilities.to_dict(),
            'trials': len(self.trials),
            'max_gain': self.max_gain if self.trials else None,
            'profitable': self.profitable,
            'witnesses': [trial.to_dict() for trial in self.witnesses],
            'deviation_utilities': [trial.to_dict() for trial in self.trials],
            'notes': self.notes,
        }


def audit_rounds(horizon):
    return sorted({tau for tau in (1, horizon // 2, horizon) if tau >= 1})


def _kinds_for(side):
    return [kind for kind in DeviationKind if kind.side == side]


def _magnitudes(kind, fractions, price_deltas):
    return price_deltas if kind.is_price else fractions


def default_deviation_grid(
    config, horizon=None, traders=None, fractions=DEFAULT_FRACTIONS, price_deltas=DEFAULT_PRICE_DELTAS
):
    """Every single-trader deviation kind and magnitude at rounds 1, horizon // 2 and horizon."""
    horizon = config.horizon if horizon is None else horizon
    if traders is None:
        traders = [TraderRef.seller(s) for s in range(config.num_sellers)]
        traders += [TraderRef.buyer(b) for b in range(config.num_buyers)]
    return [
        Deviation(trader, kind, magnitude, tau)
        for tau in audit_rounds(horizon)
        for trader in traders
        for kind in _kinds_for(trader.side)
        for magnitude in _magnitudes(kind, fractions, price_deltas)
    ]


def default_joint_grid(config, coalition, horizon=None, kinds=None, max_trials=200):
    """Products of a coarse per-member grid, one joint deviation per round."""
    horizon = config.horizon if horizon is None else horizon
    grid = []
    for tau in audit_rounds(horizon):
        options = [
            [
                Deviation(trader, kind, magnitude, tau)
                for kind in _kinds_for(trader.side)
                if kinds is None or kind in kinds
                for magnitude in _magnitudes(kind, COALITION_FRACTIONS, COALITION_PRICE_DELTAS)
            ]
            for trader in coalition
        ]
        grid.extend(itertools.product(*options))
    return grid[:max_trials]


def default_coalitions(config, limit=DEFAULT_COALITION_SCANS):
    """Pairs of buyers in index order, then seller-buyer pairs, at most `limit` of them."""
    buyers = [TraderRef.buyer(b) for b in range(config.num_buyers)]
    pairs = list(itertools.combinations(buyers, 2))
    pairs += [(TraderRef.seller(s), buyer) for s in range(config.num_sellers) for buyer in buyers]
    return pairs[:limit]


def parse_trader(text):
    """'buyer:0' or 'seller:1' to a TraderRef."""
    side, _, index = text.strip().partition(':')
    if not index.strip().isdigit():
        raise AuditError(f'expected side:index, got {text!r}')
    return TraderRef(side.strip(), int(index))


def _check_regime(config, report):
    if not config.has_constant_supply() or not config.is_normalized():
        report.notes.append('market is outside the constant normalized regime; gains are informative only')
    if config.variant is not Variant.RIGHTS:
        report.notes.append(f'auditing the {config.variant.value} variant')


def _replay(config, horizon, deviations, baseline, report):
    for deviation in deviations:
        reason = deviation.skip_reason(baseline.records[deviation.round - 1])
        if reason:
            report.notes.append(f'skipped {deviation.label}: {reason}')
            return None
    try:
        return run(config, horizon, deviations)
    except RoundFailure as exc:
        labels = ', '.join(deviation.label for deviation in deviations)
        report.notes.append(f'skipped {labels}: infeasible ({exc})')
        return None


def _gains(trace, baseline_utilities, traders):
    utilities = trace.total_utilities()
    return {trader: utilities.of(trader) - baseline_utilities.of(trader) for trader in traders}


def _validate_deviation(config, horizon, deviation):
    limit = config.num_sellers if deviation.trader.side == 'seller' else config.num_buyers
    if deviation.trader.index >= limit:
        raise AuditError(f'no {deviation.trader} in {config.name or "this market"}')
    if deviation.round > horizon:
        raise AuditError(f'{deviation.label} is beyond the horizon {horizon}')


def audit_unilateral(config, horizon=None, deviation_grid=None, tolerance=GAIN_TOLERANCE):
    """
    Replay the market once per deviation with every other trader greedy.

    A deviation is a witness when the deviator's utility summed over the
    horizon beats the all-greedy baseline by more than `tolerance`.
    Deviations that would not change the baseline round are skipped with a note.
    """
    horizon = int(config.horizon if horizon is None else horizon)
    grid = default_deviation_grid(config, horizon) if deviation_grid is None else list(deviation_grid)
    for deviation in grid:
        _validate_deviation(config, horizon, deviation)

    baseline = run(config, horizon)
    report = AuditReport(
        scenario=config.name,
        horizon=horizon,
        baseline_utilities=baseline.total_utilities(),
        tolerance=tolerance,
    )
    _check_regime(config, report)
    for deviation in grid:
        trace = _replay(config, horizon, (deviation,), baseline, report)
        if trace is None:
            continue
        gains = _gains(trace, report.baseline_utilities, [deviation.trader])
        report.trials.append(AuditTrial(deviations=(deviation,), gains=gains))

    logger.info(
        f'unilateral audit of {config.name or "market"}: {len(report.trials)} trials, '
        f'max gain {report.max_gain:.3e}, {len(report.witnesses)} witnesses'
    )
    return report


def audit_coalition(config, horizon=None, coalition=(), joint_grid=None, tolerance=GAIN_TOLERANCE):
    """
    Replay joint deviations of a coalition of at least two traders.

    A joint deviation wins only when every member gains strictly more than
    `tolerance`; the trial's gain is that of its worst-off member.
    """
    coalition = tuple(coalition)
    if len(coalition) < 2:
        raise AuditError('a coalition needs at least two traders')
    if len(set(coalition)) != len(coalition):
        raise AuditError('coalition members must be distinct')
    horizon = int(config.horizon if horizon is None else horizon)
    grid = default_joint_grid(config, coalition, horizon) if joint_grid is None else list(joint_grid)
    for joint in grid:
        if {deviation.trader for deviation in joint} - set(coalition):
            raise AuditError('joint deviations may only involve coalition members')
        for deviation in joint:
            _validate_deviation(config, horizon, deviation)

    baseline = run(config, horizon)
    report = AuditReport(
        scenario=config.name,
        horizon=horizon,
        baseline_utilities=baseline.total_utilities(),
        coalition=coalition,
        tolerance=tolerance,
    )
    _check_regime(config, report)
    for joint in grid:
        trace = _replay(config, horizon, tuple(joint), baseline, report)
        if trace is None:
            continue
        report.trials.append(AuditTrial(deviations=tuple(joint), gains=_gains(trace, report.baseline_utilities, coalition)))

    logger.info(
        f'coalition audit of {", ".join(str(t) for t in coalition)}: {len(report.trials)} trials, '
        f'{len(report.witnesses)} winners'
    )
    return report


@dataclass
class NonExpansiveReport:
    passed: bool
    first_violation: int | None
    oscillation_passed: bool
    first_oscillation_violation: int | None
    distances: list

    def to_dict(self):
        return {
            'passed': self.passed,
            'first_violation': self.first_violation,
            'oscillation_passed': self.oscillation_passed,
            'first_oscillation_violation': self.first_oscillation_violation,
            'distances': self.distances,
        }


def check_nonexpansive(trace, tolerance=1e-12, settled=1e-9):
    """
    Check that |p - 1| never grows and that prices alternate around 1.

    A price below one must be followed by a higher price, a price above one
    by a lower price. Prices within `settled` of one only need to stay there.
    """
    prices = trace.prices
    distances = np.abs(prices - 1.0)
    first_violation = None
    first_oscillation = None
    for index in range(1, prices.size):
        tau = int(trace.records[index].round)
        if first_violation is None and distances[index] > distances[index - 1] + tolerance:
            first_violation = tau
        previous, current = prices[index - 1], prices[index]
        if distances[index - 1] <= settled:
            swings = distances[index] <= settled + tolerance
        elif previous < 1.0:
            swings = current > previous
        else:
            swings = current < previous
        if first_oscillation is None and not swings:
            first_oscillation = tau
    if first_violation is not None:
        logger.warning(f'|p - 1| grew at round {first_violation}')
    return NonExpansiveReport(
        passed=first_violation is None,
        first_violation=first_violation,
        oscillation_passed=first_oscillation is None,
        first_oscillation_violation=first_oscillation,
        distances=distances.tolist(),
    )


@dataclass
class CrossValidationReport:
    instances: int
    max_discrepancy: float
    worst_instance: dict | None
    degenerate_agree: bool
    single_buyer_max_error: float

    def passed(self, tolerance=1e-10):
        return (
            self.max_discrepancy < tolerance
            and self.degenerate_agree
            and self.single_buyer_max_error < tolerance
        )

    def to_dict(self):
        return {
            'instances': self.instances,
            'max_discrepancy': self.max_discrepancy,
            'worst_instance': self.worst_instance,
            'degenerate_agree': self.degenerate_agree,
            'single_buyer_max_error': self.single_buyer_max_error,
        }


def _random_instance(rng):
    size = int(rng.integers(1, 9))
    rights = rng.uniform(0.0, 1.0, size)
    rights[rng.random(size) < 0.2] = 0.0
    if rights.sum() <= 0:
        rights[int(rng.integers(size))] = 1.0
    rights *= rng.uniform(0.05, 10.0) / rights.sum()
    money = rng.uniform(0.0, 2.0, size)
    money[rng.random(size) < 0.2] = 0.0
    return money, rights


def cross_validate_price_solver(instances=1000, rng_seed=0):
    """Compare the interval scan with bracketing on random instances, relative to max(1, p)."""
    if instances < 1:
        raise AuditError('instances must be >= 1')
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    worst_instance = None
    for _ in range(instances):
        money, rights = _random_instance(rng)
        scanned = solve_implicit_price(money, rights).price
        bracketed = bisect_implicit_price(money, rights).price
        discrepancy = abs(scanned - bracketed) / max(1.0, bracketed)
        if discrepancy > worst:
            worst = discrepancy
            worst_instance = {'money': money.tolist(), 'rights': rights.tolist(), 'price': scanned}

    degenerate_agree = True
    single_error = 0.0
    for _ in range(max(1, instances // 10)):
        money, rights = _random_instance(rng)
        zero = np.zeros_like(money)
        degenerate_agree &= (
            solve_implicit_price(zero, rights).price == 0.0 and bisect_implicit_price(zero, rights).price == 0.0
        )
        m, r = float(rng.uniform(0.0, 2.0)), float(rng.uniform(0.05, 10.0))
        single_error = max(single_error, abs(solve_implicit_price([m], [r]).price - m / r) / max(1.0, m / r))

    logger.info(f'price solver cross-validation: {instances} instances, max discrepancy {worst:.3e}')
    return CrossValidationReport(
        instances=instances,
        max_discrepancy=worst,
        worst_instance=worst_instance,
        degenerate_agree=bool(degenerate_agree),
        single_buyer_max_error=single_error,
    )


@dataclass
class LowerBoundReport:
    applicable: bool
    rows: list = field(default_factory=list)

    @property
    def violations(self):
        return [row['round'] for row in self.rows if row['canonical_violated']]

    @property
    def buyer_indexed_violations(self):
        return [row['round'] for row in self.rows if row['buyer_indexed_violated']]

    def to_dict(self):
        return {
            'applicable': self.applicable,
            'violations': self.violations,
            'buyer_indexed_violations': self.buyer_indexed_violations,
            'rows': self.rows,
        }


def check_price_lower_bound(trace, tolerance=1e-12):
    """
    Compare every round's price with both forms of the canonical lower bound.

    Violations are flagged in the report, never raised. Mechanisms without
    rank weights are reported as not applicable.
    """
    config = trace.config
    weights = rank_weights(config.mechanism, config.num_buyers)
    if weights is None:
        return LowerBoundReport(applicable=False)
    claims = config.claims
    report = LowerBoundReport(applicable=True)
    for record in trace.records:
        canonical = canonical_lower_bound(weights, record.money_start, claims)
        buyer_indexed = buyer_indexed_lower_bound(weights, record.money_start)
        report.rows.append({
            'round': record.round,
            'price': record.price_good,
            'canonical_bound': canonical,
            'buyer_indexed_bound': buyer_indexed,
            'canonical_violated': record.price_good < canonical - tolerance,
            'buyer_indexed_violated': record.price_good < buyer_indexed - tolerance,
        })
    if report.violations:
        logger.warning(f'price below the canonical bound at rounds {report.violations}')
    return report


def sweep_point(
    num_buyers,
    seed,
    variant,
    concentration=1.0,
    claim_scale=ClaimScale.UNIT,
    horizon=None,
    tail_fraction=0.1,
    mechanism=None,
):
    """Asymptotic frustration and Good and Right prices of one generated market."""
    config = generate_dirichlet_scenario(
        num_buyers,
        concentration,
        seed,
        claim_scale=claim_scale,
        mechanism=mechanism,
        variant=variant,
        horizon=horizon,
    )
    trace = run(config)
    window = trace.tail_window(tail_fraction)
    return {
        'size': num_buyers,
        'seed': seed,
        'variant': Variant(variant).value,
        'frustration': float(trace.tail_mean(trace.mean_frustration_path, window)),
        'expected_frustration': float(trace.expected_frustration_path[-1]),
        'price': float(trace.tail_mean(trace.prices, window)),
        'price_right': float(trace.tail_mean(trace.right_prices, window)),
    }


def run_sweep(
    sizes,
    seeds,
    claim_scale=ClaimScale.UNIT,
    concentration=1.0,
    variants=(Variant.RIGHTS, Variant.FREE_MARKET),
    workers=1,
    horizon=None,
    mechanism=None,
):
    """
    Run sweep_point for every (size, seed, variant) and return rows in key order.

    `mechanism` distributes the Right in the rights variants, proportional by
    default. With more than one worker the points run in a process pool; the
    result does not depend on the number of workers.
    """
    jobs = [
        (size, seed, Variant(variant).value, concentration, claim_scale, horizon, mechanism)
        for size in sizes
        for seed in seeds
        for variant in variants
    ]
    logger.info(f'sweep: {len(jobs)} runs on {workers} worker(s)')
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(job) for job in jobs]
    return sorted(rows, key=lambda row: (row['size'], row['variant'], row['seed']))


def _sweep_job(job):
    size, seed, variant, concentration, claim_scale, horizon, mechanism = job
    return sweep_point(size, seed, variant, concentration, claim_scale, horizon, mechanism=mechanism)
