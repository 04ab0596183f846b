"""
Greedy price solver, greedy bids and the closed forms for canonical mechanisms.

The greedy price p solves

    sum_b (M_b - max(0, p R_b - M_b)) = p sum_b R_b

whose left side is non-increasing and right side increasing in p. Within two
consecutive breakpoints M_b / R_b the set of poor buyers (p R_b > M_b) is
fixed and the equation is linear, so the root is found by scanning intervals.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import Variant
from .exceptions import InvalidQuantity, MarketError, NoRightsInCirculation, UnnormalizedIncomes
from .mechanism import BuyerBid, SellerOffer
from .rights import MechanismKind, allocate, claim_ranking

logger = logging.getLogger(__name__)

INTERVAL_SLACK = 1e-12
POOR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GreedyPriceSolution:
    price: float
    poor_set: frozenset = field(default_factory=frozenset)
    useful_money: float = 0.0
    useless_money: float = 0.0
    method: str = 'interval'


def _vectors(money, rights):
    money = np.asarray(money, dtype=float)
    rights = np.asarray(rights, dtype=float)
    if money.shape != rights.shape or money.ndim != 1:
        raise InvalidQuantity('money and rights must be vectors of the same length')
    if np.any(money < 0) or np.any(rights < 0) or np.any(np.isnan(money)) or np.any(np.isnan(rights)):
        raise InvalidQuantity('money and rights must be non-negative')
    return money, rights


def implicit_price_residual(price, money, rights):
    """Left minus right side of the implicit price equation."""
    money, rights = _vectors(money, rights)
    return float(np.sum(money - np.maximum(0.0, price * rights - money)) - price * rights.sum())


def _solution(price, money, rights, method):
    shortfall = price * rights - money
    poor = shortfall > POOR_TOLERANCE * np.maximum(1.0, money)
    return GreedyPriceSolution(
        price=float(price),
        poor_set=frozenset(int(b) for b in np.flatnonzero(poor)),
        useful_money=float(price * rights.sum()),
        useless_money=float(shortfall[poor].sum()),
        method=method,
    )


def bisect_implicit_price(money, rights, xtol=1e-15):
    """Root of the implicit price equation by bracketing on [0, sum M / sum R]."""
    money, rights = _vectors(money, rights)
    total_rights = rights.sum()
    if total_rights <= 0:
        raise NoRightsInCirculation()
    if money.sum() <= 0:
        return _solution(0.0, money, rights, 'bisection')
    upper = money.sum() / total_rights
    price = brentq(implicit_price_residual, 0.0, upper, args=(money, rights), xtol=xtol, rtol=4 * np.finfo(float).eps)
    return _solution(price, money, rights, 'bisection')


def solve_implicit_price(money, rights):
    """
    Greedy price for the given money and Right vectors.

    Raises NoRightsInCirculation when no buyer holds Right. Returns price
    zero when nobody has money.
    """
    money, rights = _vectors(money, rights)
    total_money = money.sum()
    total_rights = rights.sum()
    if total_rights <= 0:
        raise NoRightsInCirculation()
    if total_money <= 0:
        return _solution(0.0, money, rights, 'interval')

    holders = np.flatnonzero(rights > 0)
    breakpoints = money[holders] / rights[holders]
    order = np.argsort(breakpoints, kind='stable')
    sorted_points = breakpoints[order]
    poor_money = np.concatenate(([0.0], np.cumsum(money[holders][order])))
    poor_rights = np.concatenate(([0.0], np.cumsum(rights[holders][order])))

    for k in range(len(holders) + 1):
        candidate = (total_money + poor_money[k]) / (total_rights + poor_rights[k])
        lower = sorted_points[k - 1] if k > 0 else -np.inf
        upper = sorted_points[k] if k < len(holders) else np.inf
        slack = INTERVAL_SLACK * max(1.0, candidate)
        if lower - slack < candidate <= upper + slack:
            return _solution(candidate, money, rights, 'interval')

    logger.warning('interval scan found no root, falling back to bracketing')
    return bisect_implicit_price(money, rights)


def free_market_clearing_price(money, offered_good):
    if offered_good <= 0:
        raise InvalidQuantity(f'offered good must be positive, got {offered_good}')
    return float(np.sum(money)) / float(offered_good)


def greedy_rights(state, config, volume=None):
    """Right the mechanism assigns when every seller offers this round's resupply."""
    if volume is None:
        volume = float(state.seller_greedy_volume().sum())
    return allocate(config.mechanism, volume, config.claims)


def greedy_price(state, config):
    """Greedy price for the round, solved on the Right implied by the resupply on offer."""
    return solve_implicit_price(state.buyer_money(), greedy_rights(state, config))


def greedy_seller_bid(seller_index, state, config, solution=None, volume=None):
    """
    Offer min(g_s(tau), G_s) at the greedy price.

    Stock carried from earlier rounds is stored, not offered. An explicit
    `volume` replaces this seller's share of the offered Good and the price is
    solved for the new total. The myopic and free-market variants post the
    free-market clearing price for the same volume instead.
    """
    volumes = state.seller_greedy_volume()
    if volume is not None:
        volumes[seller_index] = volume
        solution = None
    if config.variant is Variant.RIGHTS:
        solution = solution or solve_implicit_price(
            state.buyer_money(), greedy_rights(state, config, float(volumes.sum()))
        )
        price = solution.price
    else:
        price = free_market_clearing_price(state.buyer_money(), volumes.sum())
    return SellerOffer(volume=float(volumes[seller_index]), price=price * (1.0 + config.price_markup))


def average_posted_price(seller_offers):
    return float(np.mean([offer.price for offer in seller_offers]))


def _money_in_goods(money, price):
    if price > 0:
        return money / price
    return 0.0 if money <= 0 else np.inf


def greedy_buyer_bid(buyer_index, seller_offers, state, config=None):
    """
    Sell the Right the buyer cannot pay for, buy the Right its money covers.

    P is the mean posted seller price. With P = 0 and money at hand the
    buyer's Right demand is capped by the volume on offer.
    """
    buyer = state.buyers[buyer_index]
    price = average_posted_price(seller_offers)
    goods = _money_in_goods(buyer.money, price)
    if np.isinf(goods):
        goods = buyer.right + sum(offer.volume for offer in seller_offers)
    sell = max(0.0, buyer.right - goods)
    buy = max(0.0, goods - buyer.right)
    return BuyerBid(
        right_offer_volume=sell,
        right_offer_price=price,
        max_good_volume=buyer.right + buy,
        max_good_price=price,
        max_right_volume=buy,
        max_right_price=price,
    )


def myopic_buyer_bid(buyer_index, seller_offers, state, config=None):
    """
    Greedy bid when Right proceeds are spendable in the same round.

    A poor buyer sells only half of the Right it cannot pay for and uses the
    proceeds on Good backed by the other half.
    """
    bid = greedy_buyer_bid(buyer_index, seller_offers, state, config)
    if bid.right_offer_volume <= 0:
        return bid
    buyer = state.buyers[buyer_index]
    affordable = buyer.right - bid.right_offer_volume
    return BuyerBid(
        right_offer_volume=bid.right_offer_volume / 2.0,
        right_offer_price=bid.right_offer_price,
        max_good_volume=(buyer.right + affordable) / 2.0,
        max_good_price=bid.max_good_price,
        max_right_volume=0.0,
        max_right_price=bid.max_right_price,
    )


def _rank_holder(n, num_buyers, claims):
    if n < 1 or n > num_buyers:
        raise MarketError(f'rank {n} outside 1..{num_buyers}')
    if claims is None:
        return n - 1
    return int(claim_ranking(claims)[n - 1])


def canonical_closed_form(n, incomes, round_index, claims=None):
    """
    Greedy price under canonical(n) with normalized supply and income.

    Round 1 gives (1 + m_{b_n}) / 2 and every later round gives 1. b_n is
    the buyer with the n-th highest claim, or buyer n - 1 without claims.
    """
    incomes = np.asarray(incomes, dtype=float)
    if abs(incomes.sum() - 1.0) > 1e-12:
        raise UnnormalizedIncomes(f'incomes sum to {incomes.sum()!r}, expected 1')
    if round_index < 1:
        raise MarketError(f'rounds are 1-based, got {round_index}')
    if round_index > 1:
        return 1.0
    return (1.0 + incomes[_rank_holder(n, incomes.size, claims)]) / 2.0


def canonical_lower_bound(weights, money, claims=None):
    """Sum over ranks n of alpha_n (M_{b_n} + sum M) / 2."""
    money = np.asarray(money, dtype=float)
    total = money.sum()
    return float(sum(
        alpha * (money[_rank_holder(n, money.size, claims)] + total) / 2.0
        for n, alpha in enumerate(weights, start=1)
        if alpha
    ))


def buyer_indexed_lower_bound(weights, money):
    """Sum over buyers b of (alpha_b + 1) M_b / 2, with alpha indexed by buyer."""
    money = np.asarray(money, dtype=float)
    alpha = np.zeros(money.size)
    weights = np.asarray(weights, dtype=float)
    alpha[:weights.size] = weights
    return float(np.sum((alpha + 1.0) * money) / 2.0)


def rank_weights(mech, num_buyers):
    """Weights by claim rank for canonical and weighted mechanisms, None otherwise."""
    if mech.kind is MechanismKind.CANONICAL:
        weights = np.zeros(num_buyers)
        weights[mech.rank - 1] = 1.0
        return weights
    if mech.kind is MechanismKind.WEIGHTED:
        weights = np.zeros(num_buyers)
        for alpha, rank in mech.weights:
            weights[rank - 1] += alpha
        return weights
    return None
