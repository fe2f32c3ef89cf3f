"""The reservation auction: allocation rule, externality payments, outcome.

Each operator pays, scaled by its weight, the difference between the
best remaining welfare the others could achieve if that operator's bids
were zeroed out (its aircraft stay in the instance and can be relocated
for free, which is what makes the exchange setting priceable) and the
remaining welfare they actually get under the cleared allocation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from .graph import build_graph
from .model import (
    Allocation,
    Instance,
    OperatorId,
    Profile,
    congestion_total,
    social_welfare,
    validate_instance,
    validate_profile,
)
from .solver import SolveResult, solve

#: Correct payment rule.
RULE_EXTERNALITY = "externality"
#: Deliberately broken rule that skips the pseudo-bid zeroing.  Kept as a
#: negative control: the incentive-compatibility suite must reject it.
RULE_NO_ZEROING = "no-zeroing"


@dataclass(frozen=True)
class MechanismOutcome:
    allocation: Allocation
    payments: Mapping[OperatorId, Fraction]
    cleared_welfare: Fraction


def pseudo_bids(excluded: OperatorId, bids: Profile) -> Dict[Tuple[str, str, int], Fraction]:
    """Copy of `bids` with every entry of `excluded` (stay included) zeroed."""
    return {
        triple: (Fraction(0) if triple[0] == excluded else value)
        for triple, value in bids.items()
    }


def remaining_welfare(instance: Instance, allocation: Allocation, bids: Profile,
                      operator_id: OperatorId) -> Fraction:
    """Weighted bids of everyone but `operator_id`, minus the full
    congestion term (which still counts that operator's aircraft).
    """
    instance.operator(operator_id)
    total = Fraction(0)
    for operator, craft in instance.iter_aircraft():
        if operator.id == operator_id:
            continue
        key = allocation[(operator.id, craft.id)]
        total += operator.weight * bids[(operator.id, craft.id, key)]
    total -= instance.congestion_ratio * congestion_total(instance, allocation)
    return total


def payment(instance: Instance, bids: Profile, operator_id: OperatorId,
            cleared: SolveResult, strategy: str = "bnb",
            rule: str = RULE_EXTERNALITY) -> Fraction:
    """Externality charged to `operator_id` given the cleared solve."""
    operator = instance.operator(operator_id)
    if rule == RULE_EXTERNALITY:
        counterfactual_bids = pseudo_bids(operator_id, bids)
    elif rule == RULE_NO_ZEROING:
        counterfactual_bids = dict(bids)
    else:
        raise ValueError(f"unknown payment rule {rule!r}")
    inner = solve(build_graph(instance, counterfactual_bids), strategy=strategy)
    inner_value = remaining_welfare(
        instance, inner.allocation, counterfactual_bids, operator_id
    )
    actual = remaining_welfare(instance, cleared.allocation, bids, operator_id)
    return (inner_value - actual) / operator.weight


def run_auction(instance: Instance, bids: Profile, strategy: str = "bnb",
                rule: str = RULE_EXTERNALITY) -> MechanismOutcome:
    """Clear the auction and price every operator (|F|+1 solver runs)."""
    report = validate_instance(instance)
    if not report.ok:
        raise ValueError(f"invalid instance: {report.violations}")
    report = validate_profile(instance, bids, "bids")
    if not report.ok:
        raise ValueError(f"invalid bids: {report.violations}")
    cleared = solve(build_graph(instance, bids), strategy=strategy)
    payments = {
        operator.id: payment(instance, bids, operator.id, cleared,
                             strategy=strategy, rule=rule)
        for operator in instance.operators
    }
    return MechanismOutcome(
        allocation=cleared.allocation,
        payments=payments,
        cleared_welfare=social_welfare(instance, cleared.allocation, bids),
    )


def sample_misreports(instance: Instance, bids: Profile, operator_id: OperatorId,
                      count: int, seed: int) -> List[Dict[Tuple[str, str, int], Fraction]]:
    """Seeded misreport profiles for one operator, others untouched.

    The first two are the adversarial classics (zero everything, double
    everything); the rest mix per-entry scaling by {0, 1/2, 1, 2} with
    small rational shifts, clamped at zero.
    """
    rng = random.Random(f"{seed}:{operator_id}")
    own_triples = [triple for triple in sorted(bids) if triple[0] == operator_id]
    misreports: List[Dict[Tuple[str, str, int], Fraction]] = []
    for index in range(count):
        profile = dict(bids)
        if index == 0:
            for triple in own_triples:
                profile[triple] = Fraction(0)
        elif index == 1:
            for triple in own_triples:
                profile[triple] = 2 * profile[triple]
        else:
            for triple in own_triples:
                factor = rng.choice(
                    [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]
                )
                shift = Fraction(rng.randint(-3, 3), 7)
                profile[triple] = max(Fraction(0), factor * profile[triple] + shift)
        misreports.append(profile)
    return misreports
