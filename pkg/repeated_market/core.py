"""
Market state, configuration and the transition between rounds.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .exceptions import ConservationError, InvalidQuantity, MarketError
from .rights import DistributionMechanism
from .schedules import ScheduleKind, ScheduleTarget, SupplySchedule

DEFAULT_TOLERANCE = 1e-9
DEFAULT_STORAGE_COST = 1.0


class Quantity(float):
    """A non-negative amount of Good, Money or Right."""

    def __new__(cls, value=0.0):
        value = float(value)
        if math.isnan(value) or value < 0:
            raise InvalidQuantity(f'quantity must be non-negative, got {value!r}')
        return super().__new__(cls, value)

    @classmethod
    def settle(cls, value, tolerance=DEFAULT_TOLERANCE):
        """Snap rounding residue in [-tolerance, 0) to zero before validating."""
        value = float(value)
        if -tolerance <= value < 0:
            value = 0.0
        return cls(value)


class Variant(str, Enum):
    RIGHTS = 'rights'
    FREE_MARKET = 'free_market'
    MYOPIC_RIGHTS = 'myopic_rights'


@dataclass(frozen=True)
class SellerSpec:
    resupply: SupplySchedule

    def __post_init__(self):
        object.__setattr__(self, 'resupply', self.resupply.for_target(ScheduleTarget.SELLER_RESUPPLY))


@dataclass(frozen=True)
class BuyerSpec:
    claim: float
    income: SupplySchedule

    def __post_init__(self):
        object.__setattr__(self, 'claim', Quantity(self.claim))
        object.__setattr__(self, 'income', self.income.for_target(ScheduleTarget.BUYER_INCOME))


@dataclass(frozen=True)
class MarketConfig:
    sellers: tuple
    buyers: tuple
    mechanism: DistributionMechanism
    variant: Variant = Variant.RIGHTS
    horizon: int = 10
    storage_cost: float = DEFAULT_STORAGE_COST
    tolerance: float = DEFAULT_TOLERANCE
    price_markup: float = 0.0
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'sellers', tuple(self.sellers))
        object.__setattr__(self, 'buyers', tuple(self.buyers))
        object.__setattr__(self, 'variant', Variant(self.variant))
        if not self.sellers or not self.buyers:
            raise MarketError('a market needs at least one seller and one buyer')
        if int(self.horizon) < 1:
            raise MarketError(f'horizon must be a positive integer, got {self.horizon}')
        object.__setattr__(self, 'horizon', int(self.horizon))
        if self.storage_cost < 0:
            raise MarketError('storage cost must be non-negative')
        if self.tolerance <= 0:
            raise MarketError('tolerance must be positive')
        if self.price_markup <= -1:
            raise MarketError('price markup must be greater than -1')
        if self.mechanism.max_rank > len(self.buyers):
            raise MarketError(
                f'{self.mechanism.label} needs at least {self.mechanism.max_rank} buyers, '
                f'got {len(self.buyers)}'
            )

    @property
    def num_sellers(self):
        return len(self.sellers)

    @property
    def num_buyers(self):
        return len(self.buyers)

    @property
    def claims(self):
        return np.array([buyer.claim for buyer in self.buyers], dtype=float)

    def resupply(self, round_index):
        return np.array([seller.resupply(round_index) for seller in self.sellers], dtype=float)

    def incomes(self, round_index):
        return np.array([buyer.income(round_index) for buyer in self.buyers], dtype=float)

    def is_normalized(self, round_index=1, tolerance=1e-12):
        """Whether total resupply and total income both equal one at this round."""
        return (
            abs(self.resupply(round_index).sum() - 1.0) <= tolerance
            and abs(self.incomes(round_index).sum() - 1.0) <= tolerance
        )

    def has_constant_supply(self):
        return all(seller.resupply.kind is ScheduleKind.CONSTANT for seller in self.sellers) and all(
            buyer.income.kind is ScheduleKind.CONSTANT for buyer in self.buyers
        )

    def with_changes(self, **changes):
        return replace(self, **changes)


def _validate_quantities(instance, names):
    for name in names:
        object.__setattr__(instance, name, float(Quantity(getattr(instance, name))))


@dataclass(frozen=True)
class SellerState:
    good: float
    money: float
    resupply: float

    def __post_init__(self):
        _validate_quantities(self, ('good', 'money', 'resupply'))

    @property
    def greedy_volume(self):
        """Good a greedy seller offers: this round's resupply, capped by the stock."""
        return min(self.resupply, self.good)


@dataclass(frozen=True)
class BuyerState:
    good: float
    money: float
    right: float
    claim: float
    income: float

    def __post_init__(self):
        _validate_quantities(self, ('good', 'money', 'right', 'claim', 'income'))


@dataclass(frozen=True)
class MarketState:
    round: int
    sellers: tuple
    buyers: tuple

    def seller_good(self):
        return np.array([seller.good for seller in self.sellers], dtype=float)

    def seller_money(self):
        return np.array([seller.money for seller in self.sellers], dtype=float)

    def seller_greedy_volume(self):
        return np.array([seller.greedy_volume for seller in self.sellers], dtype=float)

    def buyer_good(self):
        return np.array([buyer.good for buyer in self.buyers], dtype=float)

    def buyer_money(self):
        return np.array([buyer.money for buyer in self.buyers], dtype=float)

    def buyer_right(self):
        return np.array([buyer.right for buyer in self.buyers], dtype=float)

    def total_money(self):
        return float(self.seller_money().sum() + self.buyer_money().sum())

    def total_good(self):
        return float(self.seller_good().sum() + self.buyer_good().sum())

    def with_rights(self, rights):
        buyers = tuple(
            replace(buyer, right=float(Quantity.settle(right))) for buyer, right in zip(self.buyers, rights)
        )
        return replace(self, buyers=buyers)


def initial_state(config):
    """Round 1 start: sellers hold their first resupply, buyers their first income."""
    resupply = config.resupply(1)
    incomes = config.incomes(1)
    sellers = tuple(SellerState(good=float(g), money=0.0, resupply=float(g)) for g in resupply)
    buyers = tuple(
        BuyerState(good=0.0, money=float(m), right=0.0, claim=float(spec.claim), income=float(m))
        for spec, m in zip(config.buyers, incomes)
    )
    return MarketState(round=1, sellers=sellers, buyers=buyers)


def apply_transition(state, config):
    """
    Move a post-clearing state of round tau to the start of round tau + 1.

    Sellers add g_s(tau + 1) to their stock and lose their money. Buyers
    consume Good up to their claim, add m_b(tau + 1) to their money and lose
    any Right left over.
    """
    next_round = state.round + 1
    resupply = config.resupply(next_round)
    incomes = config.incomes(next_round)
    sellers = tuple(
        SellerState(good=seller.good + float(g), money=0.0, resupply=float(g))
        for seller, g in zip(state.sellers, resupply)
    )
    buyers = tuple(
        BuyerState(
            good=max(0.0, buyer.good - buyer.claim),
            money=buyer.money + float(m),
            right=0.0,
            claim=buyer.claim,
            income=float(m),
        )
        for buyer, m in zip(state.buyers, incomes)
    )
    return MarketState(round=next_round, sellers=sellers, buyers=buyers)


@dataclass(frozen=True)
class TraderUtilities:
    sellers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    buyers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __add__(self, other):
        return TraderUtilities(self.sellers + other.sellers, self.buyers + other.buyers)

    def of(self, trader):
        """Utility of a trader given as ('seller'|'buyer', index)."""
        side, index = trader
        return float(self.sellers[index] if side == 'seller' else self.buyers[index])

    def to_dict(self):
        return {'sellers': self.sellers.tolist(), 'buyers': self.buyers.tolist()}


def consumed_utility(state, config):
    """Per-round utilities: u_s = M_s - c G_s and u_b = min(D_b, G_b)."""
    sellers = state.seller_money() - config.storage_cost * state.seller_good()
    buyers = np.minimum(config.claims, state.buyer_good())
    return TraderUtilities(sellers=sellers, buyers=buyers)


def _check_rights(before, after, good_bought, right_bought, right_sold, tolerance):
    cap = before.buyer_right() + np.asarray(right_bought) - np.asarray(right_sold)
    over = np.asarray(good_bought) - cap
    if np.any(over > tolerance):
        buyer = int(np.argmax(over))
        raise ConservationError(f'buyer {buyer} bought {over[buyer]:.3e} more Good than Right held')

    right_gap = after.buyer_right().sum() - (before.buyer_right().sum() - np.sum(good_bought))
    if abs(right_gap) > tolerance:
        raise ConservationError(f'right changed by {right_gap:.3e} during clearing')


def check_conservation(
    before, after, good_bought, right_bought, right_sold, tolerance=DEFAULT_TOLERANCE, rights_backed=True
):
    """
    Raise ConservationError if a clearing created or destroyed anything.

    `before` is the state after rights were assigned and `after` the state
    after clearing. Checks totals of Money and Good, the rights cap of every
    buyer, conservation of Right and non-negative balances. A clearing without
    rights skips the two Right checks.
    """
    money_gap = after.total_money() - before.total_money()
    if abs(money_gap) > tolerance:
        raise ConservationError(f'money changed by {money_gap:.3e} during clearing')
    good_gap = after.total_good() - before.total_good()
    if abs(good_gap) > tolerance:
        raise ConservationError(f'good changed by {good_gap:.3e} during clearing')

    if rights_backed:
        _check_rights(before, after, good_bought, right_bought, right_sold, tolerance)

    for label, values in (
        ('seller money', after.seller_money()),
        ('seller good', after.seller_good()),
        ('buyer money', after.buyer_money()),
        ('buyer good', after.buyer_good()),
        ('buyer right', after.buyer_right()),
    ):
        if np.any(values < -tolerance):
            raise ConservationError(f'{label} went negative ({values.min():.3e})')
