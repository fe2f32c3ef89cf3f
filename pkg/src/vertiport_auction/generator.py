"""Seeded random instance generation.

Instances are constructed so they always pass validation: parking
capacities are drawn at or above the initial occupancy (slack
condition), congestion tables are built from non-decreasing marginal
increments (discrete convexity), and transit routes depart at slot 2 or
later so the flow correspondence is exact end to end.  Valuations are
drawn with a fixed large denominator, which makes exact welfare ties
between distinct allocations vanishingly unlikely.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

from .model import (
    STAY,
    TRANSIT,
    Aircraft,
    Instance,
    Operator,
    RouteOption,
    Vertiport,
)
from .serialize import InstanceDocument


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    vertiports: Tuple[int, int] = (2, 3)
    operators: Tuple[int, int] = (2, 3)
    fleet_size: Tuple[int, int] = (1, 2)
    transit_routes: Tuple[int, int] = (1, 2)  # per aircraft, beside the stay
    horizon: Tuple[int, int] = (3, 4)
    arrival_cap: Tuple[int, int] = (0, 2)
    departure_cap: Tuple[int, int] = (0, 2)
    extra_parking: Tuple[int, int] = (0, 2)  # on top of initial occupancy
    congestion_shape: str = "quadratic"  # or "linear": marginal increments
    value_denominator: int = 997
    max_value_numerator: int = 10_000
    lambda_range: Tuple[int, int] = (0, 2)  # integer part; a random
    # fractional part with the value denominator is added on top
    weight_choices: Tuple[str, ...] = ("1", "1", "2", "1/2")

    def __post_init__(self) -> None:
        for name in ("vertiports", "operators", "fleet_size", "transit_routes",
                     "horizon", "arrival_cap", "departure_cap", "extra_parking"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}")
        if self.operators[0] < 1 or self.vertiports[0] < 1:
            raise ValueError("need at least one operator and one vertiport")


def _draw(rng: random.Random, bounds: Tuple[int, int]) -> int:
    return rng.randint(*bounds)


def _congestion_row(rng: random.Random, cap: int, shape: str,
                    denominator: int) -> Tuple[Fraction, ...]:
    """Convex table over 0..cap via non-decreasing marginal increments."""
    base = Fraction(rng.randint(0, 200), denominator)
    slope = Fraction(rng.randint(0, 200), denominator)
    row = [Fraction(0)]
    increment = base
    for q in range(1, cap + 1):
        row.append(row[-1] + increment)
        if shape == "quadratic":
            increment += slope
    return tuple(row)


def generate(config: GeneratorConfig) -> InstanceDocument:
    """Deterministic-in-seed document with truthful bids attached."""
    rng = random.Random(config.seed)
    h = _draw(rng, config.horizon)
    n_ports = _draw(rng, config.vertiports)
    port_ids = [f"v{i + 1}" for i in range(n_ports)]

    operators: List[Operator] = []
    origins: Dict[str, int] = {pid: 0 for pid in port_ids}
    n_operators = _draw(rng, config.operators)
    for o in range(n_operators):
        fleet: List[Aircraft] = []
        for a in range(_draw(rng, config.fleet_size)):
            origin = rng.choice(port_ids)
            origins[origin] += 1
            menu: List[RouteOption] = [
                RouteOption(key=0, kind=STAY, depart_time=0, destination=origin)
            ]
            # Transit routes depart at slot 2+ (needs at least H = 3).
            if h >= 3:
                for _ in range(_draw(rng, config.transit_routes)):
                    depart = rng.randint(2, h - 1)
                    arrive = rng.randint(depart + 1, h)
                    menu.append(RouteOption(
                        key=len(menu), kind=TRANSIT, depart_time=depart,
                        destination=rng.choice(port_ids), arrive_time=arrive,
                    ))
            fleet.append(Aircraft(id=f"a{a + 1}", origin=origin, menu=tuple(menu)))
        operators.append(Operator(
            id=f"op{o + 1}",
            weight=Fraction(rng.choice(config.weight_choices)),
            fleet=tuple(fleet),
        ))

    ports: List[Vertiport] = []
    for pid in port_ids:
        parking = tuple(
            origins[pid] + _draw(rng, config.extra_parking) for _ in range(h)
        )
        ports.append(Vertiport(
            id=pid,
            arrival_cap=tuple(_draw(rng, config.arrival_cap) for _ in range(h)),
            departure_cap=tuple(_draw(rng, config.departure_cap) for _ in range(h)),
            parking_cap=parking,
            congestion_cost=tuple(
                _congestion_row(rng, parking[t], config.congestion_shape,
                                config.value_denominator)
                for t in range(h)
            ),
        ))

    instance = Instance(
        horizon=h,
        congestion_ratio=Fraction(
            rng.randint(*config.lambda_range), 1
        ) + Fraction(rng.randint(0, config.value_denominator - 1),
                     config.value_denominator),
        vertiports=tuple(ports),
        operators=tuple(operators),
    )

    valuations: Dict[Tuple[str, str, int], Fraction] = {}
    for operator, craft in instance.iter_aircraft():
        for entry in craft.menu:
            numerator = (rng.randint(0, config.max_value_numerator // 10)
                         if entry.is_stay
                         else rng.randint(0, config.max_value_numerator))
            valuations[(operator.id, craft.id, entry.key)] = Fraction(
                numerator, config.value_denominator
            )

    return InstanceDocument(
        instance=instance,
        bids=dict(valuations),  # truthful by default
        valuations=valuations,
    )


def single_slot_config(seed: int) -> GeneratorConfig:
    """Degenerate single-slot setting: H = 1, slack-dominating gate
    capacities, single-aircraft operators (menus reduce to stay-only).
    """
    return GeneratorConfig(
        seed=seed,
        horizon=(1, 1),
        fleet_size=(1, 1),
        operators=(2, 3),
        arrival_cap=(1000, 1000),
        departure_cap=(1000, 1000),
        extra_parking=(0, 2),
    )
