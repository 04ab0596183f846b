import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from repeated_market.core import Variant
from repeated_market.exceptions import ScenarioError
from repeated_market.rights import MechanismKind
from repeated_market.schedules import ScheduleKind
from repeated_market.serializers import (
    ScenarioSerializer,
    load_scenario,
    parse_scenario,
    preset_names,
    scenario_to_dict,
)

SCENARIO = {
    'name': 'two-buyers',
    'horizon': 12,
    'mechanism': {'kind': 'contested_garment'},
    'sellers': [{'resupply': {'kind': 'cosine', 'amplitude': 0.2, 'period': 10, 'offset': 1.0}}],
    'buyers': [
        {'claim': 1.0, 'income': 0.4},
        {'claim': 0.5, 'income': {'kind': 'constant', 'value': 0.6}},
    ],
    'output': {'path': 'two-buyers.csv', 'columns': ['tau', 'price_good'], 'seed': 3},
}


class ScenarioSerializerTest(SimpleTestCase):
    """Test suite for scenario validation"""

    def test_valid_scenario(self):
        """Test that a complete scenario builds its market"""
        scenario = parse_scenario(SCENARIO)
        config = scenario.config
        self.assertEqual(config.name, 'two-buyers')
        self.assertEqual(config.horizon, 12)
        self.assertIs(config.mechanism.kind, MechanismKind.CONTESTED_GARMENT)
        self.assertIs(config.sellers[0].resupply.kind, ScheduleKind.COSINE)
        self.assertEqual(config.buyers[0].income(5), 0.4)
        self.assertIs(config.variant, Variant.RIGHTS)
        self.assertEqual(scenario.output_path, 'two-buyers.csv')
        self.assertEqual(scenario.columns, ('tau', 'price_good'))
        self.assertEqual(scenario.seed, 3)

    def test_round_trip(self):
        """Test that serializing and parsing again gives the same scenario"""
        scenario = parse_scenario(SCENARIO)
        again = parse_scenario(json.loads(json.dumps(scenario_to_dict(scenario))))
        self.assertEqual(again.config, scenario.config)
        self.assertEqual(again.columns, scenario.columns)
        self.assertEqual(again.output_path, scenario.output_path)
        self.assertEqual(again.seed, scenario.seed)

    def test_unknown_keys_are_rejected(self):
        """Test that unknown keys are rejected at every level"""
        with self.assertRaises(ScenarioError) as context:
            parse_scenario({**SCENARIO, 'colour': 'blue'})
        self.assertEqual(context.exception.key, 'colour')

        nested = json.loads(json.dumps(SCENARIO))
        nested['sellers'][0]['resupply']['wobble'] = 1
        with self.assertRaises(ScenarioError) as context:
            parse_scenario(nested)
        self.assertEqual(context.exception.key, 'sellers[0].resupply.wobble')

        nested = json.loads(json.dumps(SCENARIO))
        nested['buyers'][1]['budget'] = 1
        with self.assertRaises(ScenarioError) as context:
            parse_scenario(nested)
        self.assertEqual(context.exception.key, 'buyers[1].budget')

    def test_invalid_values(self):
        """Test negative claims, bad mechanisms and missing schedule parameters"""
        bad_claim = json.loads(json.dumps(SCENARIO))
        bad_claim['buyers'][0]['claim'] = -1
        with self.assertRaises(ScenarioError) as context:
            parse_scenario(bad_claim)
        self.assertEqual(context.exception.key, 'buyers[0].claim')

        with self.assertRaises(ScenarioError) as context:
            parse_scenario({**SCENARIO, 'mechanism': {'kind': 'canonical', 'rank': 3}})
        self.assertEqual(context.exception.key, 'mechanism')

        with self.assertRaises(ScenarioError):
            parse_scenario({**SCENARIO, 'mechanism': {'kind': 'weighted', 'weights': [[0.5, 1], [0.2, 2]]}})

        missing = json.loads(json.dumps(SCENARIO))
        del missing['sellers'][0]['resupply']['period']
        with self.assertRaises(ScenarioError) as context:
            parse_scenario(missing)
        self.assertEqual(context.exception.key, 'sellers[0].resupply.period')

    def test_buyers_or_generator(self):
        """Test that exactly one of buyers and generator is required"""
        with self.assertRaises(ScenarioError):
            parse_scenario({'sellers': SCENARIO['sellers']})
        with self.assertRaises(ScenarioError):
            parse_scenario({**SCENARIO, 'generator': {'kind': 'dirichlet', 'num_buyers': 3}})
        with self.assertRaises(ScenarioError):
            parse_scenario({'buyers': SCENARIO['buyers']})

    def test_generator(self):
        """Test that a generator block is resolved with the seed"""
        data = {'generator': {'kind': 'dirichlet', 'num_buyers': 4, 'seed': 5}, 'variant': 'free_market'}
        scenario = parse_scenario(data)
        self.assertEqual(scenario.config.num_buyers, 4)
        self.assertEqual(scenario.config.name, 'dirichlet-4-5')
        self.assertEqual(scenario.config.horizon, 40)
        self.assertIs(scenario.config.variant, Variant.FREE_MARKET)
        self.assertEqual(parse_scenario(data, seed=6).config.name, 'dirichlet-4-6')
        deterministic = parse_scenario({'generator': {'kind': 'dirichlet', 'num_buyers': 3, 'concentration': None}})
        self.assertEqual(deterministic.config.num_buyers, 3)

    @override_settings(REPEATED_MARKET={'STORAGE_COST': 2.5})
    def test_defaults_come_from_settings(self):
        """Test that a missing storage cost falls back to the REPEATED_MARKET setting"""
        self.assertEqual(parse_scenario(SCENARIO).config.storage_cost, 2.5)

    def test_serializer_errors(self):
        """Test the DRF error structure for an empty scenario"""
        serializer = ScenarioSerializer(data={})
        self.assertFalse(serializer.is_valid())
        self.assertIn('buyers', serializer.errors)


class ScenarioFileTest(SimpleTestCase):
    """Test suite for reading scenario files"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text):
        path = Path(self.tmp.name) / 'scenario.json'
        path.write_text(text, encoding='utf-8')
        return path

    def test_decode_error_has_line_and_column(self):
        """Test that malformed JSON reports its position"""
        path = self.write('{\n  "name": "x",\n  "horizon": ,\n}\n')
        with self.assertRaises(ScenarioError) as context:
            load_scenario(path)
        self.assertEqual(context.exception.line, 3)
        self.assertIsNotNone(context.exception.column)
        self.assertIn('line 3', str(context.exception))

    def test_validation_error_has_line(self):
        """Test that a bad key is located in the file"""
        data = json.loads(json.dumps(SCENARIO))
        data['buyers'][0]['claim'] = 'lots'
        path = self.write(json.dumps(data, indent=2))
        with self.assertRaises(ScenarioError) as context:
            load_scenario(path)
        self.assertEqual(context.exception.key, 'buyers[0].claim')
        self.assertIsNotNone(context.exception.line)

    def test_missing_file(self):
        """Test that an unknown name is neither a file nor a preset"""
        with self.assertRaises(ScenarioError):
            load_scenario('no-such-scenario')

    def test_presets_load(self):
        """Test that every shipped preset is valid"""
        names = preset_names()
        self.assertIn('scenario-a-proportional', names)
        self.assertIn('hubbert-supply', names)
        for name in names:
            scenario = load_scenario(name)
            self.assertTrue(scenario.source.endswith(f'{name}.json'))
