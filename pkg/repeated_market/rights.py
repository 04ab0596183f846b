"""
Right distribution mechanisms.

A distribution mechanism splits the offered volume V into Right for every
buyer given their claims D. A valid mechanism satisfies three conditions:

1. sum_b phi_b(V, D) == V
2. D_b >= D'_b  =>  phi_b(V, D) >= phi_b(V, D')   (own claim, others fixed)
3. V >= V'      =>  phi_b(V, D) >= phi_b(V', D)
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import InvalidMechanism

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-12


class MechanismKind(str, Enum):
    PROPORTIONAL = 'proportional'
    CONTESTED_GARMENT = 'contested_garment'
    CANONICAL = 'canonical'
    WEIGHTED = 'weighted'


@dataclass(frozen=True)
class DistributionMechanism:
    kind: MechanismKind
    rank: int | None = None
    weights: tuple = field(default=())

    def __post_init__(self):
        kind = MechanismKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind is MechanismKind.CANONICAL:
            if self.rank is None or int(self.rank) < 1:
                raise InvalidMechanism('canonical mechanism needs a rank >= 1')
            object.__setattr__(self, 'rank', int(self.rank))
        if kind is MechanismKind.WEIGHTED:
            weights = tuple((float(alpha), int(rank)) for alpha, rank in self.weights)
            if not weights:
                raise InvalidMechanism('weighted mechanism needs at least one (alpha, rank) pair')
            for alpha, rank in weights:
                if not 0.0 <= alpha <= 1.0:
                    raise InvalidMechanism(f'weight {alpha} outside [0, 1]')
                if rank < 1:
                    raise InvalidMechanism(f'rank {rank} must be >= 1')
            total = sum(alpha for alpha, _ in weights)
            if abs(total - 1.0) > WEIGHT_TOLERANCE:
                raise InvalidMechanism(f'weights sum to {total!r}, expected 1')
            object.__setattr__(self, 'weights', weights)

    @classmethod
    def proportional(cls):
        return cls(MechanismKind.PROPORTIONAL)

    @classmethod
    def contested_garment(cls):
        return cls(MechanismKind.CONTESTED_GARMENT)

    @classmethod
    def canonical(cls, rank):
        return cls(MechanismKind.CANONICAL, rank=rank)

    @classmethod
    def weighted(cls, weights):
        return cls(MechanismKind.WEIGHTED, weights=tuple(weights))

    @property
    def max_rank(self):
        if self.kind is MechanismKind.CANONICAL:
            return self.rank
        if self.kind is MechanismKind.WEIGHTED:
            return max(rank for _, rank in self.weights)
        return 1

    @property
    def label(self):
        if self.kind is MechanismKind.CANONICAL:
            return f'canonical({self.rank})'
        if self.kind is MechanismKind.WEIGHTED:
            inner = ', '.join(f'{alpha:g}@{rank}' for alpha, rank in self.weights)
            return f'weighted({inner})'
        return self.kind.value

    def to_dict(self):
        data = {'kind': self.kind.value}
        if self.kind is MechanismKind.CANONICAL:
            data['rank'] = self.rank
        if self.kind is MechanismKind.WEIGHTED:
            data['weights'] = [[alpha, rank] for alpha, rank in self.weights]
        return data

    def __call__(self, total_volume, claims):
        return allocate(self, total_volume, claims)


def _as_claims(claims):
    claims = np.asarray(claims, dtype=float)
    if claims.ndim != 1 or claims.size == 0:
        raise InvalidMechanism('at least one buyer is required')
    if np.any(claims < 0) or np.any(np.isnan(claims)):
        raise InvalidMechanism('claims must be non-negative')
    return claims


def claim_ranking(claims):
    """Buyer indices ordered by claim, highest first; ties go to the lowest index."""
    claims = np.asarray(claims, dtype=float)
    return np.lexsort((np.arange(claims.size), -claims))


def constrained_equal_awards(amount, caps):
    """
    Split `amount` equally, never giving anyone more than their cap.

    Returns min(cap_i, level) with the level chosen so the awards sum to
    `amount`. The level comes from sorting the caps, so the result is exact up
    to rounding (no iteration). If `amount` covers every cap, the caps are
    returned.
    """
    caps = np.asarray(caps, dtype=float)
    if amount <= 0 or caps.size == 0:
        return np.zeros_like(caps)
    if amount >= caps.sum():
        return caps.copy()
    ordered = np.sort(caps)
    n = ordered.size
    filled = 0.0
    level = ordered[-1]
    for k in range(n):
        candidate = (amount - filled) / (n - k)
        if candidate <= ordered[k]:
            level = candidate
            break
        filled += ordered[k]
    return np.minimum(caps, level)


def proportional_rule(total_volume, claims):
    claims = _as_claims(claims)
    total_claim = claims.sum()
    if total_claim <= 0:
        return np.full(claims.size, total_volume / claims.size)
    return total_volume * claims / total_claim


def contested_garment_rule(total_volume, claims):
    """
    Talmud division of V over the claims, extended with an equal surplus split.

    Below half the total claim every claimant gets min(d/2, lambda); between
    half and the full claim every claimant loses min(d/2, mu); above the total
    claim the rest is shared equally.
    """
    claims = _as_claims(claims)
    total_volume = float(total_volume)
    total_claim = claims.sum()
    halves = claims / 2.0
    if total_volume <= total_claim / 2.0:
        return constrained_equal_awards(total_volume, halves)
    if total_volume <= total_claim:
        return claims - constrained_equal_awards(total_claim - total_volume, halves)
    return claims + (total_volume - total_claim) / claims.size


def canonical_rule(total_volume, claims, rank):
    claims = _as_claims(claims)
    if rank > claims.size:
        raise InvalidMechanism(f'canonical rank {rank} with only {claims.size} buyers')
    rights = np.zeros(claims.size)
    rights[claim_ranking(claims)[rank - 1]] = total_volume
    return rights


def weighted_rule(total_volume, claims, weights):
    claims = _as_claims(claims)
    rights = np.zeros(claims.size)
    for alpha, rank in weights:
        rights += alpha * canonical_rule(total_volume, claims, rank)
    return rights


def allocate(mech, total_volume, claims):
    """Right for every buyer when `total_volume` of Good is on offer."""
    if total_volume < 0:
        raise InvalidMechanism(f'offered volume must be non-negative, got {total_volume}')
    if mech.kind is MechanismKind.PROPORTIONAL:
        return proportional_rule(total_volume, claims)
    if mech.kind is MechanismKind.CONTESTED_GARMENT:
        return contested_garment_rule(total_volume, claims)
    if mech.kind is MechanismKind.CANONICAL:
        return canonical_rule(total_volume, claims, mech.rank)
    return weighted_rule(total_volume, claims, mech.weights)


@dataclass
class AxiomReport:
    mechanism: str
    samples: int
    failures: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self):
        return not any(self.failures.values())

    def axiom_passed(self, axiom):
        return self.failures[axiom] == 0

    def to_dict(self):
        return {
            'mechanism': self.mechanism,
            'samples': self.samples,
            'passed': self.passed,
            'failures': {str(axiom): count for axiom, count in self.failures.items()},
            'counterexamples': self.counterexamples,
        }


def verify_axioms(mech, samples=1000, rng_seed=0, max_counterexamples=5):
    """
    Sample (V, D) instances and check the three mechanism conditions.

    `mech` is a DistributionMechanism or any callable (V, claims) -> rights.
    Condition 1 is checked exactly (to 1e-12 relative to V); conditions 2
    and 3 on ordered pairs built by lowering one buyer's claim or the volume.
    """
    if samples < 1:
        raise ValueError('samples must be >= 1')
    rng = np.random.default_rng(rng_seed)
    allocator = mech if not isinstance(mech, DistributionMechanism) else (
        lambda volume, claims: allocate(mech, volume, claims)
    )
    name = mech.label if isinstance(mech, DistributionMechanism) else getattr(mech, '__name__', repr(mech))
    min_buyers = max(2, mech.max_rank if isinstance(mech, DistributionMechanism) else 2)
    report = AxiomReport(mechanism=name, samples=samples)

    def record(axiom, **details):
        report.failures[axiom] += 1
        if len(report.counterexamples) < max_counterexamples:
            report.counterexamples.append({'axiom': axiom, **details})

    for _ in range(samples):
        size = int(rng.integers(min_buyers, min_buyers + 6))
        claims = rng.uniform(0.0, 2.0, size)
        claims[rng.random(size) < 0.1] = 0.0
        volume = float(rng.uniform(0.0, 3.0))
        rights = np.asarray(allocator(volume, claims), dtype=float)

        if abs(rights.sum() - volume) > WEIGHT_TOLERANCE * max(1.0, volume) or np.any(rights < 0):
            record(1, volume=volume, claims=claims.tolist(), rights=rights.tolist())

        buyer = int(rng.integers(size))
        lowered = claims.copy()
        lowered[buyer] *= float(rng.uniform(0.0, 1.0))
        lowered_rights = np.asarray(allocator(volume, lowered), dtype=float)
        if rights[buyer] < lowered_rights[buyer] - WEIGHT_TOLERANCE * max(1.0, volume):
            record(
                2, buyer=buyer, volume=volume, claims=claims.tolist(), lowered_claims=lowered.tolist(),
                right=float(rights[buyer]), lowered_right=float(lowered_rights[buyer]),
            )

        smaller = volume * float(rng.uniform(0.0, 1.0))
        smaller_rights = np.asarray(allocator(smaller, claims), dtype=float)
        if np.any(rights < smaller_rights - WEIGHT_TOLERANCE * max(1.0, volume)):
            record(3, volume=volume, smaller_volume=smaller, claims=claims.tolist())

    if report.passed:
        logger.info(f'{name}: all conditions hold on {samples} samples')
    else:
        logger.warning(f'{name}: condition failures {report.failures} on {samples} samples')
    return report
