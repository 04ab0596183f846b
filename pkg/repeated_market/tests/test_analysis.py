from django.test import SimpleTestCase

from repeated_market.analysis import (
    Deviation,
    DeviationKind,
    TraderRef,
    audit_coalition,
    audit_unilateral,
    check_nonexpansive,
    check_price_lower_bound,
    cross_validate_price_solver,
    default_coalitions,
    default_deviation_grid,
    default_joint_grid,
    parse_trader,
    run_sweep,
)
from repeated_market.core import Variant
from repeated_market.engine import run
from repeated_market.exceptions import AuditError
from repeated_market.rights import DistributionMechanism
from repeated_market.scenarios import ClaimScale, scenario_a
from repeated_market.serializers import load_scenario


class DeviationTest(SimpleTestCase):
    """Test suite for deviation descriptions"""

    def test_validation(self):
        """Test that bad sides, fractions and price changes are rejected"""
        with self.assertRaises(AuditError):
            Deviation(TraderRef.buyer(0), DeviationKind.SELLER_PRICE, 0.1, 1)
        with self.assertRaises(AuditError):
            Deviation(TraderRef.seller(0), DeviationKind.SELLER_WITHHOLD, 0.0, 1)
        with self.assertRaises(AuditError):
            Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, -1.0, 1)
        with self.assertRaises(AuditError):
            Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, 0.1, 0)
        with self.assertRaises(AuditError):
            TraderRef('broker', 0)

    def test_parse_trader(self):
        """Test parsing side:index references"""
        self.assertEqual(parse_trader(' buyer:2 '), TraderRef.buyer(2))
        self.assertEqual(str(parse_trader('seller:0')), 'seller 0')
        with self.assertRaises(AuditError):
            parse_trader('buyer')

    def test_default_grids(self):
        """Test the size of the default unilateral and joint grids"""
        config = scenario_a(horizon=10)
        self.assertEqual(len(default_deviation_grid(config)), 3 * (12 + 3 * 16))
        coalitions = default_coalitions(config)
        self.assertEqual(coalitions[0], (TraderRef.buyer(0), TraderRef.buyer(1)))
        self.assertEqual(len(coalitions), 3)
        joint = default_joint_grid(config, coalitions[0], max_trials=50)
        self.assertEqual(len(joint), 50)
        self.assertTrue(all(len(deviations) == 2 for deviations in joint))

    def test_withholding_releases_the_stock_next_round(self):
        """Test that withheld Good is offered in the following round and sold there"""
        withhold = Deviation(TraderRef.seller(0), DeviationKind.SELLER_WITHHOLD, 0.25, 1)
        self.assertEqual(withhold.rounds, (1, 2))
        self.assertEqual(Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, 0.1, 3).rounds, (3,))
        trace = run(scenario_a(horizon=4), deviations=(withhold,))
        self.assertAlmostEqual(trace.records[0].volume_offered, 0.75)
        self.assertAlmostEqual(trace.records[0].volume_sold, 0.75, places=9)
        self.assertAlmostEqual(trace.records[1].volume_offered, 1.25, places=9)
        self.assertAlmostEqual(trace.records[1].volume_sold, 1.25, places=9)
        self.assertAlmostEqual(trace.records[2].volume_offered, 1.0, places=9)


class AuditTest(SimpleTestCase):
    """Test suite for the equilibrium audits"""

    def test_seller_price_and_withholding_do_not_pay(self):
        """Test that raising the price or withholding stock loses money for the seller"""
        config = scenario_a(horizon=6)
        grid = [
            Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, 0.1, 1),
            Deviation(TraderRef.seller(0), DeviationKind.SELLER_WITHHOLD, 0.25, 1),
        ]
        report = audit_unilateral(config, deviation_grid=grid)
        self.assertEqual(len(report.trials), 2)
        self.assertLessEqual(report.max_gain, 1e-9)
        self.assertFalse(report.profitable)

    def test_default_grid_finds_no_profitable_deviation(self):
        """Test that no single-trader deviation of the default grid pays in scenario A"""
        report = audit_unilateral(scenario_a(horizon=10))
        self.assertGreaterEqual(len(report.trials), 60)
        self.assertLessEqual(report.max_gain, 1e-9)
        self.assertFalse(report.profitable)

    def test_default_coalitions_find_no_winner(self):
        """Test that no joint deviation of the default coalitions pays every member in scenario A"""
        config = scenario_a(horizon=10)
        coalitions = default_coalitions(config)
        self.assertEqual(len(coalitions), 3)
        for coalition in coalitions:
            report = audit_coalition(config, coalition=coalition)
            self.assertEqual(report.witnesses, [], coalition)
            self.assertFalse(report.profitable)

    def test_poor_buyers_gain_nothing_from_unsold_stock(self):
        """Test that two poor buyers cannot leave Good unsold and buy it cheaper together later"""
        coalition = (TraderRef.buyer(0), TraderRef.buyer(1))
        joint = [(
            Deviation(TraderRef.buyer(0), DeviationKind.BUYER_SELL_LESS_RIGHT, 0.1, 1),
            Deviation(TraderRef.buyer(1), DeviationKind.BUYER_PRICE, 0.1, 1),
        )]
        report = audit_coalition(scenario_a(horizon=10), coalition=coalition, joint_grid=joint)
        self.assertEqual(len(report.trials), 1)
        self.assertEqual(report.witnesses, [])

    def test_inflated_price_is_undercut(self):
        """Test that a seller undercutting a marked-up price gains"""
        config = load_scenario('negative-control-markup').config
        grid = [Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, -0.05, 1)]
        report = audit_unilateral(config, deviation_grid=grid)
        self.assertTrue(report.profitable)
        self.assertGreater(report.max_gain, 0.0)
        self.assertEqual(report.to_dict()['witnesses'][0]['deviations'][0]['kind'], 'seller_price')

    def test_noop_deviations_are_skipped(self):
        """Test that selling less Right is skipped for a buyer that offers none"""
        config = scenario_a(horizon=4)
        grid = [Deviation(TraderRef.buyer(2), DeviationKind.BUYER_SELL_LESS_RIGHT, 0.5, 1)]
        report = audit_unilateral(config, deviation_grid=grid)
        self.assertEqual(report.trials, [])
        self.assertEqual(len(report.notes), 1)
        self.assertIsNone(report.to_dict()['max_gain'])

    def test_out_of_range_deviations(self):
        """Test that deviations by missing traders or beyond the horizon are rejected"""
        config = scenario_a(horizon=4)
        with self.assertRaises(AuditError):
            audit_unilateral(config, deviation_grid=[Deviation(TraderRef.buyer(5), DeviationKind.BUYER_PRICE, 0.1, 1)])
        with self.assertRaises(AuditError):
            audit_unilateral(config, deviation_grid=[Deviation(TraderRef.seller(0), DeviationKind.SELLER_PRICE, 0.1, 9)])

    def test_coalition_needs_two_members(self):
        """Test that a coalition of one is rejected"""
        with self.assertRaises(AuditError):
            audit_coalition(scenario_a(horizon=4), coalition=[TraderRef.buyer(0)])
        with self.assertRaises(AuditError):
            audit_coalition(scenario_a(horizon=4), coalition=[TraderRef.buyer(0), TraderRef.buyer(0)])

    def test_coalition_report(self):
        """Test a small joint scan"""
        config = scenario_a(horizon=4)
        coalition = (TraderRef.buyer(0), TraderRef.buyer(1))
        joint = [(
            Deviation(TraderRef.buyer(0), DeviationKind.BUYER_SELL_LESS_RIGHT, 0.5, 1),
            Deviation(TraderRef.buyer(1), DeviationKind.BUYER_SELL_LESS_RIGHT, 0.5, 1),
        )]
        report = audit_coalition(config, coalition=coalition, joint_grid=joint)
        self.assertEqual(report.to_dict()['coalition'], ['buyer 0', 'buyer 1'])
        self.assertEqual(len(report.trials), 1)
        self.assertEqual(set(report.trials[0].gains), set(coalition))


class DynamicsCheckTest(SimpleTestCase):
    """Test suite for the trace and solver checks"""

    def test_nonexpansive_scenario_a(self):
        """Test that scenario A's prices contract towards one and alternate around it"""
        report = check_nonexpansive(run(scenario_a(horizon=30)))
        self.assertTrue(report.passed)
        self.assertIsNone(report.first_violation)
        self.assertEqual(len(report.distances), 30)

    def test_cross_validation(self):
        """Test that the two price solvers agree on random instances"""
        report = cross_validate_price_solver(1000, rng_seed=0)
        self.assertTrue(report.passed(1e-10), report.to_dict())
        self.assertTrue(report.degenerate_agree)

    def test_lower_bound(self):
        """Test that the lower bound applies to canonical markets only"""
        trace = run(load_scenario('canonical-first').config)
        report = check_price_lower_bound(trace)
        self.assertTrue(report.applicable)
        self.assertEqual(len(report.rows), len(trace))
        self.assertNotIn(1, report.violations)
        self.assertFalse(check_price_lower_bound(run(scenario_a(horizon=3))).applicable)


class SweepTest(SimpleTestCase):
    """Test suite for the buyer-count sweep"""

    def test_rows_in_key_order(self):
        """Test one row per size, seed and variant, sorted"""
        rows = run_sweep([3, 4], range(2), horizon=12)
        self.assertEqual(len(rows), 8)
        keys = [(row['size'], row['variant'], row['seed']) for row in rows]
        self.assertEqual(keys, sorted(keys))
        self.assertEqual({row['variant'] for row in rows}, {Variant.RIGHTS.value, Variant.FREE_MARKET.value})

    def test_rights_beat_free_market(self):
        """Test that rights lower the asymptotic frustration of generated markets"""
        rows = run_sweep([3, 5], range(3), claim_scale=ClaimScale.UNIT, horizon=60)
        for size in (3, 5):
            rights = [row['frustration'] for row in rows if row['size'] == size and row['variant'] == 'rights']
            free = [row['frustration'] for row in rows if row['size'] == size and row['variant'] == 'free_market']
            self.assertLess(sum(rights), sum(free))

    def test_per_buyer_claims_vanish_in_large_markets(self):
        """Test that claims shrinking with the number of buyers drive rights frustration to zero"""
        rows = run_sweep([3, 10], range(5), claim_scale=ClaimScale.PER_BUYER, variants=(Variant.RIGHTS,))
        small = [row['frustration'] for row in rows if row['size'] == 3]
        large = [row['frustration'] for row in rows if row['size'] == 10]
        self.assertEqual(len(small), 5)
        self.assertLess(sum(large), sum(small))
        self.assertLess(max(large), 1e-6)

    def test_mechanism_and_right_price(self):
        """Test that the sweep passes its mechanism to the rights runs and reports the Right price"""
        proportional = run_sweep([3], range(2), variants=(Variant.RIGHTS,), horizon=20)
        garment = run_sweep(
            [3], range(2), variants=(Variant.RIGHTS,), horizon=20, mechanism=DistributionMechanism.contested_garment()
        )
        self.assertTrue(all('price_right' in row for row in garment))
        self.assertTrue(all(row['price_right'] >= 0.0 for row in garment))
        self.assertNotEqual(
            [row['frustration'] for row in proportional], [row['frustration'] for row in garment]
        )
