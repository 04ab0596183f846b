from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from repeated_market.core import SellerState, initial_state
from repeated_market.exceptions import InvalidQuantity, NoRightsInCirculation, UnnormalizedIncomes
from repeated_market.mechanism import SellerOffer
from repeated_market.pricing import (
    bisect_implicit_price,
    canonical_closed_form,
    canonical_lower_bound,
    free_market_clearing_price,
    greedy_buyer_bid,
    greedy_price,
    greedy_rights,
    greedy_seller_bid,
    implicit_price_residual,
    myopic_buyer_bid,
    buyer_indexed_lower_bound,
    rank_weights,
    solve_implicit_price,
)
from repeated_market.rights import DistributionMechanism
from repeated_market.scenarios import scenario_a

SCENARIO_A_MONEY = (0.0, 0.25, 0.75)
SCENARIO_A_RIGHTS = (8 / 15, 6 / 15, 1 / 15)
SCENARIO_A_PRICE = 75 / 116


class ImplicitPriceTest(SimpleTestCase):
    """Test suite for the greedy price equation"""

    def test_scenario_a_first_round(self):
        """Test the round 1 price of scenario A and its poor buyers"""
        solution = solve_implicit_price(SCENARIO_A_MONEY, SCENARIO_A_RIGHTS)
        self.assertAlmostEqual(solution.price, SCENARIO_A_PRICE, places=12)
        self.assertEqual(solution.poor_set, frozenset({0, 1}))
        self.assertAlmostEqual(solution.useful_money, SCENARIO_A_PRICE, places=12)
        self.assertAlmostEqual(implicit_price_residual(solution.price, SCENARIO_A_MONEY, SCENARIO_A_RIGHTS), 0.0, places=12)

    def test_single_buyer(self):
        """Test that one buyer pays its money over its Right"""
        self.assertAlmostEqual(solve_implicit_price([0.6], [1.5]).price, 0.4)

    def test_everyone_rich(self):
        """Test that without poor buyers the price is total money over total Right"""
        solution = solve_implicit_price([1.0, 1.0], [0.5, 0.5])
        self.assertAlmostEqual(solution.price, 2.0)
        self.assertEqual(solution.poor_set, frozenset())

    def test_degenerate_inputs(self):
        """Test zero money and zero Right"""
        self.assertEqual(solve_implicit_price([0.0, 0.0], [0.5, 0.5]).price, 0.0)
        with self.assertRaises(NoRightsInCirculation):
            solve_implicit_price([1.0, 0.0], [0.0, 0.0])
        with self.assertRaises(NoRightsInCirculation):
            bisect_implicit_price([1.0], [0.0])
        with self.assertRaises(InvalidQuantity):
            solve_implicit_price([1.0, -1.0], [0.5, 0.5])

    def test_bisection_agrees(self):
        """Test the bracketing oracle on scenario A"""
        self.assertAlmostEqual(bisect_implicit_price(SCENARIO_A_MONEY, SCENARIO_A_RIGHTS).price, SCENARIO_A_PRICE, places=12)

    @settings(max_examples=300, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=2.0)),
            min_size=1,
            max_size=8,
        )
    )
    def test_interval_scan_matches_bisection(self, data):
        """Test that the interval scan and bracketing find the same root"""
        money = np.array([m for m, _ in data])
        rights = np.array([r for _, r in data])
        if rights.sum() < 1e-3:
            rights[0] += 1.0
        scanned = solve_implicit_price(money, rights).price
        bracketed = bisect_implicit_price(money, rights).price
        self.assertLess(abs(scanned - bracketed) / max(1.0, bracketed), 1e-10)

    @settings(max_examples=300, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.01, max_value=2.0)),
            min_size=1,
            max_size=8,
        ),
        buyer=st.integers(min_value=0, max_value=7),
        extra=st.floats(min_value=1e-3, max_value=1.0),
    )
    def test_price_rises_with_money(self, data, buyer, extra):
        """Test that more money for one buyer never lowers the price and raises it when someone is poor"""
        money = np.array([m for m, _ in data])
        rights = np.array([r for _, r in data])
        before = solve_implicit_price(money, rights)
        richer = money.copy()
        richer[buyer % money.size] += extra
        after = solve_implicit_price(richer, rights)
        self.assertGreaterEqual(after.price, before.price - 1e-12)
        if before.poor_set:
            self.assertGreater(after.price, before.price)

    def test_free_market_price(self):
        """Test the free-market clearing price"""
        self.assertAlmostEqual(free_market_clearing_price([0.25, 0.75], 0.5), 2.0)
        with self.assertRaises(InvalidQuantity):
            free_market_clearing_price([1.0], 0.0)


class GreedyBidTest(SimpleTestCase):
    """Test suite for greedy seller and buyer bids"""

    def setUp(self):
        self.config = scenario_a()
        self.state = initial_state(self.config).with_rights(SCENARIO_A_RIGHTS)

    def test_seller_offers_its_stock_at_the_greedy_price(self):
        """Test the greedy seller bid"""
        offer = greedy_seller_bid(0, self.state, self.config)
        self.assertAlmostEqual(offer.volume, 1.0)
        self.assertAlmostEqual(offer.price, SCENARIO_A_PRICE, places=12)
        self.assertAlmostEqual(greedy_price(self.state, self.config).price, SCENARIO_A_PRICE, places=12)

    def test_carried_stock_is_not_offered(self):
        """Test that a seller holding more than its resupply offers only the resupply"""
        state = replace(self.state, sellers=(SellerState(good=1.25, money=0.0, resupply=1.0),))
        offer = greedy_seller_bid(0, state, self.config)
        self.assertAlmostEqual(offer.volume, 1.0)
        self.assertAlmostEqual(offer.price, SCENARIO_A_PRICE, places=12)
        assert_allclose(greedy_rights(state, self.config), SCENARIO_A_RIGHTS, atol=1e-12)

    def test_explicit_volume_resolves_the_price(self):
        """Test that offering the whole stock solves the price for that volume"""
        state = replace(self.state, sellers=(SellerState(good=1.25, money=0.0, resupply=1.0),))
        offer = greedy_seller_bid(0, state, self.config, volume=1.25)
        self.assertAlmostEqual(offer.volume, 1.25)
        self.assertAlmostEqual(offer.price, SCENARIO_A_PRICE / 1.25, places=12)

    def test_markup(self):
        """Test that the price markup scales the seller price"""
        config = self.config.with_changes(price_markup=0.1)
        self.assertAlmostEqual(greedy_seller_bid(0, self.state, config).price, 1.1 * SCENARIO_A_PRICE, places=12)

    def test_poor_buyer_sells_right(self):
        """Test that a buyer without money offers all of its Right"""
        offers = [SellerOffer(1.0, SCENARIO_A_PRICE)]
        bid = greedy_buyer_bid(0, offers, self.state)
        self.assertAlmostEqual(bid.right_offer_volume, 8 / 15)
        self.assertEqual(bid.max_right_volume, 0.0)
        self.assertAlmostEqual(bid.right_offer_price, SCENARIO_A_PRICE)

    def test_rich_buyer_buys_right(self):
        """Test that a rich buyer bids for the Right its money covers"""
        offers = [SellerOffer(1.0, SCENARIO_A_PRICE)]
        bid = greedy_buyer_bid(2, offers, self.state)
        goods = 0.75 / SCENARIO_A_PRICE
        self.assertEqual(bid.right_offer_volume, 0.0)
        self.assertAlmostEqual(bid.max_right_volume, goods - 1 / 15)
        self.assertAlmostEqual(bid.max_good_volume, goods)

    def test_myopic_poor_buyer(self):
        """Test that a myopic poor buyer sells half of its unaffordable Right"""
        offers = [SellerOffer(1.0, 1.0)]
        bid = myopic_buyer_bid(1, offers, self.state)
        self.assertAlmostEqual(bid.right_offer_volume, (6 / 15 - 0.25) / 2)
        self.assertAlmostEqual(bid.max_good_volume, (6 / 15 + 0.25) / 2)
        self.assertEqual(bid.max_right_volume, 0.0)


class ClosedFormTest(SimpleTestCase):
    """Test suite for the canonical closed forms and lower bounds"""

    def test_canonical_first_rank(self):
        """Test the canonical(1) price with the top claim holding three quarters of the income"""
        claims = (1 / 8, 3 / 4, 1.0)
        self.assertAlmostEqual(canonical_closed_form(1, SCENARIO_A_MONEY, 1, claims), 7 / 8, places=12)
        self.assertEqual(canonical_closed_form(1, SCENARIO_A_MONEY, 2, claims), 1.0)
        with self.assertRaises(UnnormalizedIncomes):
            canonical_closed_form(1, (0.5, 0.25), 1)

    def test_lower_bounds(self):
        """Test both forms of the price lower bound"""
        weights = rank_weights(DistributionMechanism.canonical(1), 3)
        assert_allclose(weights, [1.0, 0.0, 0.0])
        claims = (1 / 8, 3 / 4, 1.0)
        self.assertAlmostEqual(canonical_lower_bound(weights, SCENARIO_A_MONEY, claims), 7 / 8)
        self.assertAlmostEqual(buyer_indexed_lower_bound(weights, SCENARIO_A_MONEY), 0.5)
        self.assertIsNone(rank_weights(DistributionMechanism.proportional(), 3))
