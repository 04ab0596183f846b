"""
Time-dependent resupply and income schedules.

A schedule maps a round index (1-based) to a non-negative amount. Seller
resupply g_s(tau) and buyer income m_b(tau) are both described this way.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Callable, Mapping

from .exceptions import MarketError


class ScheduleKind(str, Enum):
    CONSTANT = 'constant'
    COSINE = 'cosine'
    LINEAR = 'linear'
    STEP = 'step'
    LOGISTIC = 'logistic'
    BULLWHIP = 'bullwhip'
    HUBBERT = 'hubbert'


class ScheduleTarget(str, Enum):
    SELLER_RESUPPLY = 'seller_resupply'
    BUYER_INCOME = 'buyer_income'


def _constant(tau, value):
    return value


def _cosine(tau, amplitude, period, offset, phase=0.0):
    return offset + amplitude * math.cos(2.0 * math.pi * tau / period + phase)


def _linear(tau, slope, intercept):
    return intercept + slope * tau


def _step(tau, before, after, switch_round):
    return before if tau < switch_round else after


def _logistic(tau, capacity, steepness, midpoint, floor=0.0):
    return floor + capacity / (1.0 + math.exp(-steepness * (tau - midpoint)))


def _bullwhip(tau, base, amplitude, period, damping):
    # damped oscillation around the base level
    return base + amplitude * math.exp(-damping * tau) * math.sin(2.0 * math.pi * tau / period)


def _hubbert(tau, peak, width, center, floor=0.0):
    x = (tau - center) / width
    # derivative of a logistic, scaled so the value at the center equals peak
    return floor + peak / math.cosh(x / 2.0) ** 2


@dataclass(frozen=True)
class _ScheduleSpec:
    required: tuple
    optional: tuple
    function: Callable[..., float]


_KINDS = {
    ScheduleKind.CONSTANT: _ScheduleSpec(('value',), (), _constant),
    ScheduleKind.COSINE: _ScheduleSpec(('amplitude', 'period', 'offset'), ('phase',), _cosine),
    ScheduleKind.LINEAR: _ScheduleSpec(('slope', 'intercept'), (), _linear),
    ScheduleKind.STEP: _ScheduleSpec(('before', 'after', 'switch_round'), (), _step),
    ScheduleKind.LOGISTIC: _ScheduleSpec(('capacity', 'steepness', 'midpoint'), ('floor',), _logistic),
    ScheduleKind.BULLWHIP: _ScheduleSpec(('base', 'amplitude', 'period', 'damping'), (), _bullwhip),
    ScheduleKind.HUBBERT: _ScheduleSpec(('peak', 'width', 'center'), ('floor',), _hubbert),
}


def schedule_parameters(kind):
    """Return (required, optional) parameter names for a schedule kind."""
    spec = _KINDS[ScheduleKind(kind)]
    return spec.required, spec.optional


@dataclass(frozen=True)
class SupplySchedule:
    kind: ScheduleKind
    params: Mapping[str, float] = field(default_factory=dict)
    applies_to: ScheduleTarget = ScheduleTarget.SELLER_RESUPPLY

    def __post_init__(self):
        kind = ScheduleKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'applies_to', ScheduleTarget(self.applies_to))
        spec = _KINDS[kind]
        missing = [name for name in spec.required if name not in self.params]
        unknown = [name for name in self.params if name not in spec.required + spec.optional]
        if missing or unknown:
            raise MarketError(
                f'{kind.value} schedule: missing {missing or "none"}, unknown {unknown or "none"}'
            )
        params = {name: float(value) for name, value in self.params.items()}
        if kind in (ScheduleKind.COSINE, ScheduleKind.BULLWHIP) and params['period'] == 0:
            raise MarketError(f'{kind.value} schedule needs a non-zero period')
        if kind is ScheduleKind.HUBBERT and params['width'] <= 0:
            raise MarketError('hubbert schedule needs a positive width')
        object.__setattr__(self, 'params', MappingProxyType(params))

    @classmethod
    def constant(cls, value, applies_to=ScheduleTarget.SELLER_RESUPPLY):
        return cls(ScheduleKind.CONSTANT, {'value': value}, applies_to)

    def for_target(self, applies_to):
        return SupplySchedule(self.kind, dict(self.params), applies_to)

    def to_dict(self):
        return {'kind': self.kind.value, **dict(self.params)}

    def __call__(self, round_index):
        return evaluate_schedule(self, round_index)


def evaluate_schedule(sched, round_index):
    """Value of the schedule at a 1-based round, clamped at zero."""
    if round_index < 1:
        raise MarketError(f'rounds are 1-based, got {round_index}')
    spec = _KINDS[sched.kind]
    value = spec.function(float(round_index), **sched.params)
    return max(0.0, value)
