"""
Scenario files: JSON documents validated with DRF serializers into a Scenario.
"""
import json
import logging
import math
import re
from collections.abc import Mapping
from pathlib import Path

from rest_framework import serializers

from .conf import market_settings
from .core import BuyerSpec, MarketConfig, SellerSpec, Variant
from .exceptions import MarketError, ScenarioError
from .rights import DistributionMechanism, MechanismKind
from .scenarios import ClaimScale, Scenario, generate_dirichlet_scenario
from .schedules import ScheduleKind, SupplySchedule, schedule_parameters

logger = logging.getLogger(__name__)


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown key.'] for key in unknown})
        return super().to_internal_value(data)


class ScheduleField(serializers.Field):
    """A schedule object such as {"kind": "cosine", ...}, or a bare number for a constant."""

    default_error_messages = {
        'invalid': 'Expected a number or an object with a "kind".',
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        if isinstance(data, (int, float)):
            data = {'kind': ScheduleKind.CONSTANT.value, 'value': data}
        if not isinstance(data, Mapping) or 'kind' not in data:
            self.fail('invalid')
        kind = data['kind']
        if kind not in {choice.value for choice in ScheduleKind}:
            raise serializers.ValidationError({'kind': [f'"{kind}" is not a valid schedule kind.']})
        required, optional = schedule_parameters(kind)
        params = {key: value for key, value in data.items() if key != 'kind'}
        unknown = sorted(set(params) - set(required + optional))
        if unknown:
            raise serializers.ValidationError({key: ['Unknown key.'] for key in unknown})
        missing = [name for name in required if name not in params]
        if missing:
            raise serializers.ValidationError({name: ['This field is required.'] for name in missing})
        for name, value in params.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise serializers.ValidationError({name: ['A finite number is required.']})
        try:
            return SupplySchedule(kind, params)
        except MarketError as exc:
            raise serializers.ValidationError(str(exc))

    def to_representation(self, value):
        return value.to_dict()


class MechanismSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in MechanismKind])
    rank = serializers.IntegerField(min_value=1, required=False)
    weights = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        required=False,
        allow_empty=False,
    )

    def validate(self, attrs):
        kind = attrs['kind']
        if kind == MechanismKind.CANONICAL.value and 'rank' not in attrs:
            raise serializers.ValidationError({'rank': 'A canonical mechanism needs a rank.'})
        if kind == MechanismKind.WEIGHTED.value and 'weights' not in attrs:
            raise serializers.ValidationError({'weights': 'A weighted mechanism needs [[alpha, rank], ...].'})
        weights = attrs.get('weights', ())
        if any(rank != int(rank) for _, rank in weights):
            raise serializers.ValidationError({'weights': 'Ranks must be whole numbers.'})
        try:
            attrs['mechanism'] = DistributionMechanism(
                kind, rank=attrs.get('rank'), weights=tuple((alpha, int(rank)) for alpha, rank in weights)
            )
        except MarketError as exc:
            raise serializers.ValidationError({'kind': str(exc)})
        return attrs


class SellerSerializer(StrictSerializer):
    resupply = ScheduleField()


class BuyerSerializer(StrictSerializer):
    claim = serializers.FloatField(min_value=0)
    income = ScheduleField()


class GeneratorSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=['dirichlet'])
    num_buyers = serializers.IntegerField(min_value=2)
    # null means infinite concentration, i.e. the deterministic means
    concentration = serializers.FloatField(allow_null=True, default=None)
    claim_scale = serializers.ChoiceField(choices=ClaimScale.choices, default=ClaimScale.UNIT)
    total_claim = serializers.FloatField(min_value=0, default=2.0)
    seed = serializers.IntegerField(min_value=0, required=False)

    def validate_concentration(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError('Concentration must be positive.')
        return value


class OutputSerializer(StrictSerializer):
    path = serializers.CharField(required=False, allow_null=True, default=None)
    columns = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    seed = serializers.IntegerField(min_value=0, default=0)


class ScenarioSerializer(StrictSerializer):
    name = serializers.CharField(required=False, allow_blank=True, default='')
    horizon = serializers.IntegerField(min_value=1, required=False)
    variant = serializers.ChoiceField(choices=[variant.value for variant in Variant], default=Variant.RIGHTS.value)
    storage_cost = serializers.FloatField(min_value=0, required=False)
    tolerance = serializers.FloatField(required=False)
    price_markup = serializers.FloatField(default=0.0)
    mechanism = MechanismSerializer(required=False)
    sellers = SellerSerializer(many=True, required=False, allow_empty=False)
    buyers = BuyerSerializer(many=True, required=False, allow_empty=False)
    generator = GeneratorSerializer(required=False)
    output = OutputSerializer(required=False)

    def __init__(self, *args, seed=None, **kwargs):
        self.seed_override = seed
        super().__init__(*args, **kwargs)

    def validate_tolerance(self, value):
        if value <= 0:
            raise serializers.ValidationError('Tolerance must be positive.')
        return value

    def validate_price_markup(self, value):
        if value <= -1:
            raise serializers.ValidationError('Price markup must be greater than -1.')
        return value

    def validate(self, attrs):
        if 'buyers' in attrs and 'generator' in attrs:
            raise serializers.ValidationError({'generator': 'Give either buyers or a generator, not both.'})
        if 'buyers' not in attrs and 'generator' not in attrs:
            raise serializers.ValidationError({'buyers': 'At least one buyer is required.'})
        if 'buyers' in attrs and 'sellers' not in attrs:
            raise serializers.ValidationError({'sellers': 'At least one seller is required.'})
        if 'generator' in attrs and 'sellers' in attrs:
            raise serializers.ValidationError({'sellers': 'A generated market has a single unit seller.'})
        try:
            attrs['config'] = self._build_config(attrs)
        except MarketError as exc:
            raise serializers.ValidationError({'mechanism': str(exc)})
        return attrs

    def _seed(self, attrs):
        if self.seed_override is not None:
            return self.seed_override
        generator = attrs.get('generator', {})
        if 'seed' in generator:
            return generator['seed']
        return attrs.get('output', {}).get('seed', 0)

    def _build_config(self, attrs):
        mechanism = attrs.get('mechanism', {}).get('mechanism') or DistributionMechanism.proportional()
        options = {
            'variant': attrs['variant'],
            'storage_cost': attrs.get('storage_cost', market_settings.STORAGE_COST),
            'tolerance': attrs.get('tolerance', market_settings.TOLERANCE),
            'price_markup': attrs['price_markup'],
        }
        generator = attrs.get('generator')
        if generator:
            concentration = generator['concentration']
            config = generate_dirichlet_scenario(
                generator['num_buyers'],
                math.inf if concentration is None else concentration,
                self._seed(attrs),
                claim_scale=generator['claim_scale'],
                total_claim=generator['total_claim'],
                mechanism=mechanism,
                variant=attrs['variant'],
                horizon=attrs.get('horizon'),
            )
            return config.with_changes(name=attrs['name'] or config.name, **options)
        return MarketConfig(
            sellers=tuple(SellerSpec(seller['resupply']) for seller in attrs['sellers']),
            buyers=tuple(BuyerSpec(buyer['claim'], buyer['income']) for buyer in attrs['buyers']),
            mechanism=mechanism,
            horizon=attrs.get('horizon', 10),
            name=attrs['name'],
            **options,
        )

    def create(self, validated_data):
        output = validated_data.get('output', {})
        generator = validated_data.get('generator')
        return Scenario(
            config=validated_data['config'],
            output_path=output.get('path'),
            columns=tuple(output.get('columns', ())),
            seed=self._seed(validated_data),
            generator=dict(generator) if generator else None,
        )


def scenario_to_dict(scenario):
    """Plain data that parses back to an equal Scenario."""
    config = scenario.config
    data = {
        'name': config.name,
        'horizon': config.horizon,
        'variant': config.variant.value,
        'storage_cost': config.storage_cost,
        'tolerance': config.tolerance,
        'price_markup': config.price_markup,
        'mechanism': config.mechanism.to_dict(),
        'sellers': [{'resupply': seller.resupply.to_dict()} for seller in config.sellers],
        'buyers': [{'claim': float(buyer.claim), 'income': buyer.income.to_dict()} for buyer in config.buyers],
        'output': {'path': scenario.output_path, 'columns': list(scenario.columns), 'seed': scenario.seed},
    }
    return data


def _flatten_errors(errors, path=''):
    if isinstance(errors, Mapping):
        for key, value in errors.items():
            if key == 'non_field_errors':
                yield from _flatten_errors(value, path)
            else:
                yield from _flatten_errors(value, f'{path}.{key}' if path else str(key))
    elif isinstance(errors, list) and errors and all(isinstance(item, (Mapping, list)) for item in errors):
        for index, value in enumerate(errors):
            if value:
                yield from _flatten_errors(value, f'{path}[{index}]')
    elif isinstance(errors, list):
        for message in errors:
            yield path, str(message)
    else:
        yield path, str(errors)


def _line_of(text, key_path):
    """Line of the first occurrence of the innermost key, if it appears in the text."""
    if not text or not key_path:
        return None
    key = re.split(r'[.\[]', key_path)[-1].rstrip(']')
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if match is None:
        return None
    return text.count('\n', 0, match.start()) + 1


def parse_scenario(data, source=None, text=None, seed=None):
    """Validate decoded scenario data; raise ScenarioError naming the first bad key."""
    if not isinstance(data, Mapping):
        raise ScenarioError('a scenario must be a JSON object', source=source)
    serializer = ScenarioSerializer(data=data, seed=seed)
    if not serializer.is_valid():
        key, message = next(_flatten_errors(serializer.errors), ('', 'invalid scenario'))
        raise ScenarioError(message, key=key or None, line=_line_of(text, key), source=source)
    scenario = serializer.save()
    return Scenario(
        config=scenario.config,
        output_path=scenario.output_path,
        columns=scenario.columns,
        seed=scenario.seed,
        source=str(source) if source else None,
        generator=scenario.generator,
    )


def resolve_scenario_path(name_or_path, presets_dir=None):
    path = Path(name_or_path)
    if path.is_file():
        return path
    presets_dir = Path(presets_dir or market_settings.PRESETS_DIR)
    preset = presets_dir / f'{name_or_path}.json'
    if preset.is_file():
        return preset
    raise ScenarioError(f'no scenario file or preset named {name_or_path!r}', source=str(name_or_path))


def load_scenario(name_or_path, presets_dir=None, seed=None):
    """Read a scenario from a path, or from the presets directory by name."""
    path = resolve_scenario_path(name_or_path, presets_dir)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ScenarioError(f'cannot read scenario: {exc}', source=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno, column=exc.colno, source=str(path))
    scenario = parse_scenario(data, source=path, text=text, seed=seed)
    logger.info(f'loaded scenario {scenario.config.name or path.stem} from {path}')
    return scenario


def preset_names(presets_dir=None):
    presets_dir = Path(presets_dir or market_settings.PRESETS_DIR)
    return sorted(path.stem for path in presets_dir.glob('*.json'))
