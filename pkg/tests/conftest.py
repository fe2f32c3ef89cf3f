"""Shared fixtures: hand-built instances with known outcomes."""

from fractions import Fraction

import pytest

from vertiport_auction.model import (
    STAY,
    TRANSIT,
    Aircraft,
    Instance,
    Operator,
    RouteOption,
    Vertiport,
)


def zero_congestion(parking_cap):
    """All-zero congestion tables of the right shape."""
    return tuple(tuple(Fraction(0) for _ in range(cap + 1)) for cap in parking_cap)


def make_port(pid, parking, arrival, departure, congestion=None):
    return Vertiport(
        id=pid,
        arrival_cap=tuple(arrival),
        departure_cap=tuple(departure),
        parking_cap=tuple(parking),
        congestion_cost=congestion or zero_congestion(parking),
    )


def stay(key=0, origin=None):
    return RouteOption(key=key, kind=STAY, depart_time=0, destination=origin)


def transit(key, depart, destination, arrive):
    return RouteOption(key=key, kind=TRANSIT, depart_time=depart,
                       destination=destination, arrive_time=arrive)


@pytest.fixture
def second_price():
    """Two single-aircraft operators at v1 compete for one arrival slot.

    Both can depart v1 at t=2 but only one may arrive at v2 at t=3.
    Bids 10 vs 6, stay bids 0, lambda 0, unit weights: classic
    second-price shape — the 10-bidder wins and pays 6.
    """
    route = transit(1, 2, "v2", 3)
    instance = Instance(
        horizon=3,
        congestion_ratio=Fraction(0),
        vertiports=(
            make_port("v1", (2, 2, 2), (0, 0, 0), (0, 2, 0)),
            make_port("v2", (1, 1, 1), (0, 0, 1), (0, 0, 0)),
        ),
        operators=(
            Operator("op1", Fraction(1),
                     (Aircraft("a1", "v1", (stay(origin="v1"), route)),)),
            Operator("op2", Fraction(1),
                     (Aircraft("a1", "v1", (stay(origin="v1"), route)),)),
        ),
    )
    bids = {
        ("op1", "a1", 0): Fraction(0), ("op1", "a1", 1): Fraction(10),
        ("op2", "a1", 0): Fraction(0), ("op2", "a1", 1): Fraction(6),
    }
    return instance, bids


@pytest.fixture
def exchange():
    """Two aircraft at mutually full cap-1 vertiports swapping places.

    Neither can move alone (the destination is full until the other
    leaves), but the simultaneous swap is feasible; with no competition
    both payments are zero.
    """
    instance = Instance(
        horizon=3,
        congestion_ratio=Fraction(0),
        vertiports=(
            make_port("v1", (1, 1, 1), (0, 0, 1), (0, 1, 0)),
            make_port("v2", (1, 1, 1), (0, 0, 1), (0, 1, 0)),
        ),
        operators=(
            Operator("op1", Fraction(1),
                     (Aircraft("a1", "v1",
                               (stay(origin="v1"), transit(1, 2, "v2", 3))),)),
            Operator("op2", Fraction(1),
                     (Aircraft("b1", "v2",
                               (stay(origin="v2"), transit(1, 2, "v1", 3))),)),
        ),
    )
    bids = {
        ("op1", "a1", 0): Fraction(0), ("op1", "a1", 1): Fraction(10),
        ("op2", "b1", 0): Fraction(0), ("op2", "b1", 1): Fraction(10),
    }
    return instance, bids


@pytest.fixture
def single_mover():
    """Two vertiports, one aircraft with a stay and one transit route."""
    instance = Instance(
        horizon=3,
        congestion_ratio=Fraction(0),
        vertiports=(
            make_port("v1", (1, 1, 1), (0, 0, 0), (0, 1, 0)),
            make_port("v2", (1, 1, 1), (0, 0, 1), (0, 0, 0)),
        ),
        operators=(
            Operator("op1", Fraction(1),
                     (Aircraft("a1", "v1",
                               (stay(origin="v1"), transit(1, 2, "v2", 3))),)),
        ),
    )
    bids = {("op1", "a1", 0): Fraction(0), ("op1", "a1", 1): Fraction(5)}
    return instance, bids


@pytest.fixture
def empty_instance():
    """One vertiport, no aircraft."""
    return Instance(
        horizon=1,
        congestion_ratio=Fraction(0),
        vertiports=(make_port("v1", (2,), (1,), (1,)),),
        operators=(),
    )
