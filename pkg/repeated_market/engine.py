"""
The repeated market loop: distribution, trading and transition for every round.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    TraderUtilities,
    Variant,
    apply_transition,
    check_conservation,
    consumed_utility,
    initial_state,
)
from .exceptions import MarketError, RoundFailure
from .mechanism import (
    ClearingResult,
    SellerOffer,
    apply_clearing,
    clear,
    clear_free_market,
    useful_useless_split,
)
from .pricing import (
    average_posted_price,
    greedy_buyer_bid,
    greedy_price,
    greedy_seller_bid,
    myopic_buyer_bid,
)
from .rights import allocate

logger = logging.getLogger(__name__)


def frustration(right_assigned, good_end):
    """Share of the assigned Right the buyer could not turn into Good; 0 without Right."""
    if right_assigned <= 0:
        return 0.0
    return min(1.0, max(0.0, (right_assigned - good_end) / right_assigned))


@dataclass(frozen=True)
class RoundRecord:
    round: int
    price_good: float
    price_right: float
    money_start: np.ndarray
    good_end: np.ndarray
    right_assigned: np.ndarray
    frustration: np.ndarray
    useful_money: float
    useless_money: float
    volume_offered: float
    volume_sold: float
    offers: tuple = ()
    bids: tuple = ()
    utilities: TraderUtilities = field(default_factory=TraderUtilities)
    poor_set: frozenset = field(default_factory=frozenset)
    degenerate: bool = False
    diagnostics: tuple = ()

    @property
    def mean_frustration(self):
        return float(np.mean(self.frustration))


@dataclass(frozen=True)
class Trace:
    config: object
    records: tuple

    def __len__(self):
        return len(self.records)

    @property
    def rounds(self):
        return np.array([record.round for record in self.records], dtype=int)

    @property
    def prices(self):
        return np.array([record.price_good for record in self.records], dtype=float)

    @property
    def right_prices(self):
        return np.array([record.price_right for record in self.records], dtype=float)

    @property
    def frustration_matrix(self):
        return np.vstack([record.frustration for record in self.records])

    @property
    def money_matrix(self):
        return np.vstack([record.money_start for record in self.records])

    @property
    def mean_frustration_path(self):
        """Per-round mean frustration over buyers."""
        return self.frustration_matrix.mean(axis=1)

    @property
    def expected_frustration_path(self):
        """Cumulative expected frustration: mean over buyers and over rounds 1..tau."""
        per_round = self.mean_frustration_path
        return np.cumsum(per_round) / np.arange(1, per_round.size + 1)

    def first_zero_frustration_round(self, tolerance=1e-12):
        """First round from which every buyer's frustration stays zero, or None."""
        clean = np.all(self.frustration_matrix <= tolerance, axis=1)
        if not clean[-1]:
            return None
        dirty = np.flatnonzero(~clean)
        start = 0 if dirty.size == 0 else dirty[-1] + 1
        return int(self.records[start].round)

    def tail_window(self, fraction=0.1, minimum=2):
        """Even number of trailing rounds, so period-two oscillations average out."""
        window = max(minimum, int(len(self.records) * fraction))
        window -= window % 2
        return max(2, min(window, len(self.records) - len(self.records) % 2))

    def tail_mean(self, values, window=None):
        values = np.asarray(values, dtype=float)
        window = window or self.tail_window()
        return values[-window:].mean(axis=0)

    def total_utilities(self):
        total = self.records[0].utilities
        for record in self.records[1:]:
            total = total + record.utilities
        return total


def _empty_round(state, config):
    offers = tuple(SellerOffer(0.0, 0.0) for _ in state.sellers)
    result = ClearingResult.empty(config.num_sellers, config.num_buyers)
    return offers, (), result


def _seller_offers(state, config):
    if config.variant is Variant.RIGHTS:
        solution = greedy_price(state, config)
        offers = [greedy_seller_bid(s, state, config, solution) for s in range(config.num_sellers)]
        return offers, solution.poor_set
    return [greedy_seller_bid(s, state, config) for s in range(config.num_sellers)], frozenset()


def _apply_deviations(items, deviations, side, adjust):
    items = list(items)
    for deviation in deviations:
        if deviation.trader.side == side:
            items[deviation.trader.index] = adjust(deviation, items[deviation.trader.index])
    return items


def _traded_price(spent, volume, fallback):
    if volume > 1e-12:
        return float(spent / volume)
    return float(fallback)


def play_round(state, config, deviations=()):
    """Run one round from its start state; return the record and the post-clearing state."""
    claims = config.claims
    on_offer = float(state.seller_greedy_volume().sum())
    money_start = state.buyer_money()
    degenerate = False
    poor_set = frozenset()

    if on_offer <= config.tolerance:
        logger.warning(f'round {state.round}: sellers have no resupply to offer, nothing trades')
        rights = np.zeros(config.num_buyers)
        offers, bids, result = _empty_round(state, config)
        assigned = state.with_rights(rights)
        degenerate = True
    else:
        offers, poor_set = _seller_offers(state, config)
        offers = _apply_deviations(
            offers, deviations, 'seller', lambda d, offer: d.adjust_offer(offer, state, config)
        )
        volume = float(sum(offer.volume for offer in offers))
        rights = allocate(config.mechanism, volume, claims)

        if config.variant is Variant.FREE_MARKET:
            assigned = state
            bids = ()
            result = clear_free_market(offers, state)
        else:
            assigned = state.with_rights(rights)
            bid_for = myopic_buyer_bid if config.variant is Variant.MYOPIC_RIGHTS else greedy_buyer_bid
            bids = [bid_for(b, offers, assigned, config) for b in range(config.num_buyers)]
            bids = _apply_deviations(bids, deviations, 'buyer', lambda d, bid: d.adjust_bid(bid))
            result = clear(offers, bids, assigned, config.variant)
        posted = average_posted_price(offers)
        if posted <= 0 and np.any(money_start > config.tolerance):
            logger.warning(f'round {state.round}: Good posted for free while buyers hold money')
            degenerate = True

    after = apply_clearing(assigned, result)
    check_conservation(
        assigned,
        after,
        result.good_bought,
        result.right_bought,
        result.right_sold,
        config.tolerance,
        rights_backed=result.rights_backed,
    )

    good_end = after.buyer_good()
    useful, useless = useful_useless_split(result)
    posted_price = average_posted_price(offers) if offers else 0.0
    posted_right = np.mean([bid.right_offer_price for bid in bids]) if bids else 0.0
    record = RoundRecord(
        round=state.round,
        price_good=_traded_price(result.money_spent_good.sum(), result.good_bought.sum(), posted_price),
        price_right=_traded_price(result.money_spent_right.sum(), result.right_bought.sum(), posted_right),
        money_start=money_start,
        good_end=good_end,
        right_assigned=np.asarray(rights, dtype=float),
        frustration=np.array([frustration(r, g) for r, g in zip(rights, good_end)]),
        useful_money=useful,
        useless_money=useless,
        volume_offered=float(sum(offer.volume for offer in offers)),
        volume_sold=result.volume_sold,
        offers=tuple(offers),
        bids=tuple(bids),
        utilities=consumed_utility(after, config),
        poor_set=poor_set,
        degenerate=degenerate,
        diagnostics=tuple(result.diagnostics),
    )
    logger.debug(
        f'round {record.round}: price {record.price_good:.6f}, '
        f'sold {record.volume_sold:.6f} of {record.volume_offered:.6f}'
    )
    return record, after


def run(config, horizon=None, deviations=()):
    """
    Simulate the repeated market for `horizon` rounds (the config's by default).

    `deviations` are bid changes, each with the `rounds` it acts in, a `trader`
    and adjust_offer/adjust_bid hooks; everything else plays greedy.
    A failing round raises RoundFailure carrying its index.
    """
    horizon = int(config.horizon if horizon is None else horizon)
    if horizon < 1:
        raise MarketError(f'horizon must be positive, got {horizon}')
    by_round = {}
    for deviation in deviations:
        for deviation_round in deviation.rounds:
            by_round.setdefault(deviation_round, []).append(deviation)

    logger.info(
        f'running {config.name or "market"}: {config.variant.value}, {config.mechanism.label}, '
        f'{config.num_sellers} sellers, {config.num_buyers} buyers, {horizon} rounds'
    )
    state = initial_state(config)
    records = []
    for round_index in range(1, horizon + 1):
        try:
            record, after = play_round(state, config, by_round.get(round_index, ()))
        except (MarketError, ArithmeticError, ValueError) as exc:
            logger.error(f'round {round_index} aborted: {exc}')
            raise RoundFailure(round_index, exc) from exc
        records.append(record)
        if round_index < horizon:
            state = apply_transition(after, config)
    trace = Trace(config=config, records=tuple(records))
    logger.info(
        f'finished {config.name or "market"}: final price {trace.prices[-1]:.6f}, '
        f'expected frustration {trace.expected_frustration_path[-1]:.6f}'
    )
    return trace
