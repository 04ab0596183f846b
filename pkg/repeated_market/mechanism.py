"""
Two-stage clearing of seller offers against buyer bids.

Stage 1 matches Good against Right the buyers already hold. Stage 2 sells
Good together with Right bought from other buyers. Sellers sharing a price
level deplete at an equal rate; buyers competing for a scarce level are
served pro rata to their residual demand.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MarketState, Quantity, Variant
from .rights import constrained_equal_awards

logger = logging.getLogger(__name__)

PROGRESS_TOLERANCE = 1e-12
MAX_PASSES = 100


@dataclass(frozen=True)
class SellerOffer:
    volume: float
    price: float

    def __post_init__(self):
        object.__setattr__(self, 'volume', float(Quantity(self.volume)))
        object.__setattr__(self, 'price', float(Quantity(self.price)))

    def to_dict(self):
        return {'volume': self.volume, 'price': self.price}


@dataclass(frozen=True)
class BuyerBid:
    right_offer_volume: float = 0.0
    right_offer_price: float = 0.0
    max_good_volume: float = 0.0
    max_good_price: float = 0.0
    max_right_volume: float = 0.0
    max_right_price: float = 0.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, float(Quantity.settle(getattr(self, name), PROGRESS_TOLERANCE)))

    @property
    def crosses_itself(self):
        return (
            self.right_offer_volume > 0
            and self.max_right_volume > 0
            and self.max_right_price >= self.right_offer_price
        )

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class ClearingResult:
    good_bought: np.ndarray
    right_bought: np.ndarray
    right_sold: np.ndarray
    money_spent_good: np.ndarray
    money_spent_right: np.ndarray
    money_earned_right: np.ndarray
    seller_revenue: np.ndarray
    good_sold: np.ndarray
    unsold_good: np.ndarray
    rights_backed: bool = True
    diagnostics: list = field(default_factory=list)

    @classmethod
    def empty(cls, num_sellers, num_buyers, offered=None):
        offered = np.zeros(num_sellers) if offered is None else np.asarray(offered, dtype=float)
        return cls(
            good_bought=np.zeros(num_buyers),
            right_bought=np.zeros(num_buyers),
            right_sold=np.zeros(num_buyers),
            money_spent_good=np.zeros(num_buyers),
            money_spent_right=np.zeros(num_buyers),
            money_earned_right=np.zeros(num_buyers),
            seller_revenue=np.zeros(num_sellers),
            good_sold=np.zeros(num_sellers),
            unsold_good=offered.copy(),
        )

    @property
    def volume_sold(self):
        return float(self.good_sold.sum())

    @property
    def right_volume_traded(self):
        return float(self.right_bought.sum())


class _OrderBook:
    """Residual supply, demand caps and balances while a clearing runs."""

    def __init__(self, offers, bids, state, spend_right_proceeds, tolerance):
        self.tolerance = tolerance
        self.spend_right_proceeds = spend_right_proceeds
        self.seller_price = np.array([offer.price for offer in offers], dtype=float)
        self.seller_left = np.array([offer.volume for offer in offers], dtype=float)
        self.result = ClearingResult.empty(len(offers), len(bids), self.seller_left)

        self.money = state.buyer_money()
        self.right_left = state.buyer_right()
        self.right_price = np.array([bid.right_offer_price for bid in bids], dtype=float)
        self.right_offer_left = np.array([bid.right_offer_volume for bid in bids], dtype=float)
        self.max_good = np.array([bid.max_good_volume for bid in bids], dtype=float)
        self.max_good_price = np.array([bid.max_good_price for bid in bids], dtype=float)
        self.max_right = np.array([bid.max_right_volume for bid in bids], dtype=float)
        self.max_right_price = np.array([bid.max_right_price for bid in bids], dtype=float)

    def _affordable(self, price):
        if price <= 0:
            return np.full(self.money.shape, np.inf)
        return self.money / price

    def _sell_good(self, sellers, volume, price):
        awards = np.zeros_like(self.seller_left)
        awards[sellers] = constrained_equal_awards(volume, self.seller_left[sellers])
        self.seller_left = np.maximum(0.0, self.seller_left - awards)
        self.result.seller_revenue += awards * price
        self.result.good_sold += awards

    def _fill(self, demand, supply):
        total = demand.sum()
        if total <= supply:
            return demand
        return demand * (supply / total)

    def _spend(self, amounts):
        self.money = self.money - amounts
        self.money[np.abs(self.money) < self.tolerance] = 0.0

    def stage_one(self, use_rights=True):
        """Right-backed purchases, cheapest seller level first."""
        progress = 0.0
        for level in np.unique(self.seller_price[self.seller_left > self.tolerance]):
            while True:
                sellers = np.flatnonzero((self.seller_price == level) & (self.seller_left > self.tolerance))
                supply = self.seller_left[sellers].sum()
                if supply <= self.tolerance:
                    break
                if use_rights:
                    headroom = self.max_good - self.result.good_bought
                    demand = np.minimum.reduce([headroom, self.right_left, self._affordable(level)])
                    compatible = (self.max_good_price >= level) & (self.right_left > self.tolerance)
                else:
                    # without rights every buyer spends everything at the first level it reaches
                    demand = self.money / level if level > 0 else np.zeros_like(self.money)
                    compatible = self.money > self.tolerance
                demand = np.where(compatible & (demand > self.tolerance), demand, 0.0)
                if demand.sum() <= self.tolerance:
                    break
                fill = self._fill(demand, supply)
                volume = fill.sum()
                self.result.good_bought += fill
                if use_rights:
                    self.right_left = np.maximum(0.0, self.right_left - fill)
                self.result.money_spent_good += fill * level
                self._spend(fill * level)
                self._sell_good(sellers, volume, level)
                progress += volume
                if volume < PROGRESS_TOLERANCE:
                    break
        return progress

    def _right_supply(self):
        return np.minimum(self.right_offer_left, self.right_left)

    def stage_two(self):
        """Paired Good and Right purchases, cheapest combined level first."""
        progress = 0.0
        good_levels = np.unique(self.seller_price[self.seller_left > self.tolerance])
        right_levels = np.unique(self.right_price[self._right_supply() > self.tolerance])
        pairs = sorted(
            ((float(pg), float(qr)) for pg in good_levels for qr in right_levels),
            key=lambda pair: (pair[0] + pair[1], pair[0], pair[1]),
        )
        for good_level, right_level in pairs:
            while True:
                sellers = np.flatnonzero(
                    (self.seller_price == good_level) & (self.seller_left > self.tolerance)
                )
                right_supply = self._right_supply()
                right_sellers = (self.right_price == right_level) & (right_supply > self.tolerance)
                good_volume = self.seller_left[sellers].sum()
                right_volume = right_supply[right_sellers].sum()
                if good_volume <= self.tolerance or right_volume <= self.tolerance:
                    break

                price = good_level + right_level
                good_headroom = self.max_good - self.result.good_bought
                right_headroom = self.max_right - self.result.right_bought
                demand = np.minimum.reduce([good_headroom, right_headroom, self._affordable(price)])
                compatible = (
                    (self.max_good_price >= good_level)
                    & (self.max_right_price >= right_level)
                    & ~right_sellers
                    & (self.money > self.tolerance if price > 0 else True)
                    & (good_headroom > self.tolerance)
                    & (right_headroom > self.tolerance)
                )
                demand = np.where(compatible & (demand > self.tolerance), demand, 0.0)
                if demand.sum() <= self.tolerance:
                    break

                fill = self._fill(demand, min(good_volume, right_volume))
                volume = fill.sum()
                self.result.good_bought += fill
                self.result.right_bought += fill
                self.result.money_spent_good += fill * good_level
                self.result.money_spent_right += fill * right_level
                self._spend(fill * price)
                self._sell_good(sellers, volume, good_level)

                sold = np.zeros_like(right_supply)
                sold[right_sellers] = constrained_equal_awards(volume, right_supply[right_sellers])
                self.right_left = np.maximum(0.0, self.right_left - sold)
                self.right_offer_left = np.maximum(0.0, self.right_offer_left - sold)
                self.result.right_sold += sold
                self.result.money_earned_right += sold * right_level
                if self.spend_right_proceeds:
                    self.money = self.money + sold * right_level
                progress += volume
                if volume < PROGRESS_TOLERANCE:
                    break
        return progress

    def finish(self):
        self.result.unsold_good = np.maximum(0.0, self.seller_left)
        return self.result


def _screen_offers(offers, state, tolerance, diagnostics):
    screened = []
    for index, (offer, seller) in enumerate(zip(offers, state.sellers)):
        if offer.volume > seller.good + tolerance:
            diagnostics.append(
                f'seller {index}: offer volume {offer.volume:.6g} exceeds stock {seller.good:.6g}; rejected'
            )
            screened.append(SellerOffer(0.0, offer.price))
        else:
            screened.append(offer)
    return screened


def _screen_bids(bids, state, tolerance, diagnostics):
    screened = []
    for index, (bid, buyer) in enumerate(zip(bids, state.buyers)):
        if bid.right_offer_volume > buyer.right + tolerance:
            diagnostics.append(
                f'buyer {index}: right offer {bid.right_offer_volume:.6g} exceeds right '
                f'{buyer.right:.6g}; rejected'
            )
            screened.append(BuyerBid())
            continue
        if bid.crosses_itself:
            netted = min(bid.right_offer_volume, bid.max_right_volume)
            diagnostics.append(f'buyer {index}: netted {netted:.6g} right offered and bid at crossing prices')
            bid = replace(
                bid,
                right_offer_volume=bid.right_offer_volume - netted,
                max_right_volume=bid.max_right_volume - netted,
            )
        screened.append(bid)
    return screened


def clear(offers, bids, state, variant=Variant.RIGHTS, tolerance=PROGRESS_TOLERANCE):
    """
    Clear one round and return what every trader bought, sold and paid.

    `state` must already carry the Right assigned for the round. Under the
    myopic variant Right proceeds are spendable in the same clearing, so
    stage 1 and stage 2 alternate until nothing more trades.
    """
    if len(offers) != len(state.sellers) or len(bids) != len(state.buyers):
        raise ValueError('one offer per seller and one bid per buyer are required')
    diagnostics = []
    offers = _screen_offers(offers, state, tolerance, diagnostics)
    bids = _screen_bids(bids, state, tolerance, diagnostics)
    variant = Variant(variant)

    book = _OrderBook(offers, bids, state, variant is Variant.MYOPIC_RIGHTS, tolerance)
    for _ in range(MAX_PASSES):
        progress = book.stage_one() + book.stage_two()
        if progress < PROGRESS_TOLERANCE:
            break
    result = book.finish()
    result.diagnostics = diagnostics
    for message in diagnostics:
        logger.warning(message)
    return result


def clear_free_market(offers, state, tolerance=PROGRESS_TOLERANCE):
    """Clear a round without rights: every buyer spends all its money at the posted prices."""
    if len(offers) != len(state.sellers):
        raise ValueError('one offer per seller is required')
    diagnostics = []
    offers = _screen_offers(offers, state, tolerance, diagnostics)
    no_bids = [BuyerBid()] * len(state.buyers)
    book = _OrderBook(offers, no_bids, state, False, tolerance)
    book.stage_one(use_rights=False)
    result = book.finish()
    result.rights_backed = False
    result.diagnostics = diagnostics
    return result


def apply_clearing(state, result):
    """State after the trades of `result` were settled."""
    sellers = tuple(
        replace(
            seller,
            good=float(Quantity.settle(seller.good - sold)),
            money=seller.money + revenue,
        )
        for seller, sold, revenue in zip(state.sellers, result.good_sold, result.seller_revenue)
    )
    buyers = tuple(
        replace(
            buyer,
            good=buyer.good + good,
            money=float(Quantity.settle(buyer.money - spent_good - spent_right + earned)),
            right=float(Quantity.settle(buyer.right - sold + bought - (good if result.rights_backed else 0.0))),
        )
        for buyer, good, bought, sold, spent_good, spent_right, earned in zip(
            state.buyers,
            result.good_bought,
            result.right_bought,
            result.right_sold,
            result.money_spent_good,
            result.money_spent_right,
            result.money_earned_right,
        )
    )
    return MarketState(round=state.round, sellers=sellers, buyers=buyers)


def useful_useless_split(result):
    """(seller revenue, deferred right-sale proceeds) of a clearing."""
    return float(result.seller_revenue.sum()), float(result.money_earned_right.sum())
