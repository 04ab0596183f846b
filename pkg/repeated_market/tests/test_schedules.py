import math

from django.test import SimpleTestCase

from repeated_market.exceptions import MarketError
from repeated_market.schedules import (
    ScheduleKind,
    ScheduleTarget,
    SupplySchedule,
    evaluate_schedule,
    schedule_parameters,
)


class SupplyScheduleTest(SimpleTestCase):
    """Test suite for the supply and income schedules"""

    def test_constant(self):
        """Test that a constant schedule returns its value every round"""
        schedule = SupplySchedule.constant(0.75)
        self.assertEqual([schedule(tau) for tau in (1, 2, 50)], [0.75, 0.75, 0.75])

    def test_cosine(self):
        """Test the cosine schedule at a full period"""
        schedule = SupplySchedule('cosine', {'amplitude': 0.5, 'period': 20, 'offset': 1.0})
        self.assertAlmostEqual(schedule(20), 1.5)
        self.assertAlmostEqual(schedule(10), 0.5)

    def test_linear_is_clamped_at_zero(self):
        """Test that a falling linear schedule never goes negative"""
        schedule = SupplySchedule('linear', {'slope': -0.5, 'intercept': 1.0})
        self.assertAlmostEqual(schedule(1), 0.5)
        self.assertEqual(schedule(3), 0.0)

    def test_step(self):
        """Test that the step schedule switches at its switch round"""
        schedule = SupplySchedule('step', {'before': 1.0, 'after': 0.5, 'switch_round': 10})
        self.assertEqual(schedule(9), 1.0)
        self.assertEqual(schedule(10), 0.5)

    def test_logistic_midpoint(self):
        """Test the logistic schedule at its midpoint"""
        schedule = SupplySchedule('logistic', {'capacity': 1.0, 'steepness': 0.3, 'midpoint': 25, 'floor': 0.2})
        self.assertAlmostEqual(schedule(25), 0.7)

    def test_bullwhip_decays_to_base(self):
        """Test that the bullwhip oscillation dies out around its base"""
        schedule = SupplySchedule('bullwhip', {'base': 1.0, 'amplitude': 0.8, 'period': 10, 'damping': 0.1})
        self.assertAlmostEqual(schedule(10), 1.0)
        self.assertLess(abs(schedule(203) - 1.0), 1e-8)

    def test_hubbert_peak(self):
        """Test that the hubbert curve reaches floor plus peak at its center"""
        schedule = SupplySchedule('hubbert', {'peak': 1.0, 'width': 10, 'center': 50, 'floor': 0.1})
        self.assertAlmostEqual(schedule(50), 1.1)
        self.assertLess(schedule(10), schedule(40))

    def test_rounds_are_one_based(self):
        """Test that round zero is rejected"""
        with self.assertRaises(MarketError):
            evaluate_schedule(SupplySchedule.constant(1.0), 0)

    def test_parameters_are_checked(self):
        """Test that missing and unknown parameters are rejected"""
        with self.assertRaises(MarketError):
            SupplySchedule('cosine', {'amplitude': 0.5, 'period': 20})
        with self.assertRaises(MarketError):
            SupplySchedule('constant', {'value': 1.0, 'slope': 2.0})
        with self.assertRaises(MarketError):
            SupplySchedule('hubbert', {'peak': 1.0, 'width': 0, 'center': 5})

    def test_parameter_names(self):
        """Test the required and optional parameters of a kind"""
        self.assertEqual(schedule_parameters('logistic'), (('capacity', 'steepness', 'midpoint'), ('floor',)))

    def test_to_dict_and_target(self):
        """Test serialization and retargeting of a schedule"""
        schedule = SupplySchedule('step', {'before': 1, 'after': 2, 'switch_round': 3})
        self.assertEqual(schedule.to_dict(), {'kind': 'step', 'before': 1.0, 'after': 2.0, 'switch_round': 3.0})
        income = schedule.for_target(ScheduleTarget.BUYER_INCOME)
        self.assertIs(income.applies_to, ScheduleTarget.BUYER_INCOME)
        self.assertIs(income.kind, ScheduleKind.STEP)
        self.assertTrue(math.isclose(income(5), 2.0))
