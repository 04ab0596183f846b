"""
Ready-made markets and the Dirichlet scenario generator.
"""
import math
from dataclasses import dataclass

import numpy as np

from .core import BuyerSpec, MarketConfig, SellerSpec, Variant
from .exceptions import MarketError
from .rights import DistributionMechanism
from .schedules import SupplySchedule

SCENARIO_A_CLAIMS = (1.0, 0.75, 0.125)
SCENARIO_A_INCOMES = (0.0, 0.25, 0.75)
SCENARIO_B_CLAIMS = tuple(claim / 5.0 for claim in SCENARIO_A_CLAIMS)


@dataclass(frozen=True)
class Scenario:
    """A market plus what to write when it runs."""

    config: MarketConfig
    output_path: str | None = None
    columns: tuple = ()
    seed: int = 0
    source: str | None = None
    generator: dict | None = None


class ClaimScale:
    UNIT = 'unit'
    PER_BUYER = 'per_buyer'

    choices = (UNIT, PER_BUYER)


def constant_market(
    claims,
    incomes,
    resupply=(1.0,),
    mechanism=None,
    variant=Variant.RIGHTS,
    horizon=10,
    name='',
    **options,
):
    """MarketConfig with constant incomes and resupply."""
    if len(claims) != len(incomes):
        raise MarketError('one income per claim is required')
    return MarketConfig(
        sellers=tuple(SellerSpec(SupplySchedule.constant(g)) for g in resupply),
        buyers=tuple(
            BuyerSpec(claim=claim, income=SupplySchedule.constant(m)) for claim, m in zip(claims, incomes)
        ),
        mechanism=mechanism or DistributionMechanism.proportional(),
        variant=variant,
        horizon=horizon,
        name=name,
        **options,
    )


def scenario_a(mechanism=None, variant=Variant.RIGHTS, horizon=50, **options):
    """Three buyers, claims (1, 3/4, 1/8), incomes (0, 1/4, 3/4), one seller with unit supply."""
    return constant_market(
        SCENARIO_A_CLAIMS, SCENARIO_A_INCOMES, mechanism=mechanism, variant=variant,
        horizon=horizon, name='scenario-a', **options,
    )


def scenario_b(mechanism=None, variant=Variant.RIGHTS, horizon=100, **options):
    """Scenario A with every claim divided by five."""
    return constant_market(
        SCENARIO_B_CLAIMS, SCENARIO_A_INCOMES, mechanism=mechanism, variant=variant,
        horizon=horizon, name='scenario-b', **options,
    )


def _position_means(num_buyers):
    positions = np.arange(num_buyers)
    claim_means = 1.0 / (positions + 1)
    income_means = 1.0 / (num_buyers - positions)
    return claim_means / claim_means.sum(), income_means / income_means.sum()


def generate_dirichlet_scenario(
    num_buyers,
    concentration,
    rng_seed,
    claim_scale=ClaimScale.UNIT,
    total_claim=2.0,
    mechanism=None,
    variant=Variant.RIGHTS,
    horizon=None,
):
    """
    Random market whose claims fall and incomes rise along a random buyer order.

    The buyer at position k of the order has mean claim share proportional to
    1 / (k + 1) and mean income proportional to 1 / (n - k). Shares are drawn
    from Dirichlet distributions with those means; an infinite concentration
    returns the means themselves. Incomes sum to one and a single seller
    supplies one unit per round. With the per-buyer claim scale the claims are
    divided by the number of buyers. The horizon defaults to 10 rounds per buyer.
    """
    if num_buyers < 2:
        raise MarketError('a generated scenario needs at least two buyers')
    if not concentration > 0:
        raise MarketError('concentration must be positive')
    if claim_scale not in ClaimScale.choices:
        raise MarketError(f'unknown claim scale {claim_scale!r}')

    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(num_buyers)
    claim_means, income_means = _position_means(num_buyers)
    if math.isinf(concentration):
        claim_shares, income_shares = claim_means, income_means
    else:
        claim_shares = rng.dirichlet(concentration * num_buyers * claim_means)
        income_shares = rng.dirichlet(concentration * num_buyers * income_means)

    claims = np.empty(num_buyers)
    incomes = np.empty(num_buyers)
    claims[order] = claim_shares * total_claim
    incomes[order] = income_shares
    incomes = incomes / incomes.sum()
    if claim_scale == ClaimScale.PER_BUYER:
        claims = claims / num_buyers

    return constant_market(
        claims.tolist(),
        incomes.tolist(),
        mechanism=mechanism,
        variant=variant,
        horizon=horizon or 10 * num_buyers,
        name=f'dirichlet-{num_buyers}-{rng_seed}',
    )
