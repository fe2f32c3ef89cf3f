"""Time-expanded flow network for the reservation problem.

Builds the auxiliary graph whose max-weight flows correspond one-to-one
with feasible allocations: three vertiport replicas (parking, arrival,
departure) per slot, one vertex per (aircraft, departure time), a
source and a sink.  Edge classes E1..E9:

  E1 arrival gate       Arr(r,t)  -> Park(r,t)   cap [0, A(r,t)]
  E2 departure gate     Park(r,t) -> Dep(r,t)    cap [0, D(r,t)]
  E3 parking bundle     Park(r,t) -> Park(r,t+1) C(r,t) unit edges,
                        q-th weight -lambda*(g(q) - g(q-1))
  E4 departure choice   Dep(o,tau) -> AcDep(i,j,tau)  bound = delta
  E5 route grant        AcDep(i,j,d_k) -> Arr(dest_k, a_k)  weight rho*b
  E6 initial movers     Source -> Park(r,1)  bound = initial - stayers
  E7 stay grant         Source -> AcDep(i,j,0)  bound = delta0, weight rho*b_stay
  E8 terminal bundle    Park(r,H) -> Sink   like E3 at slot H
  E9 stay return        AcDep(i,j,0) -> Park(o,1)  bound = delta0

Bounds on E4/E6/E7/E9 are affine in the binary departure-time selectors
delta and resolve to integers once a departure-time assignment is fixed,
so one graph serves every branch node of the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .model import (
    Allocation,
    Instance,
    Profile,
    check_allocation,
    initial_occupancy,
    is_feasible,
    occupancy_table,
)

# Vertex tags.  Vertices are plain tuples so they double as dict keys
# and networkx nodes.
PARK = "park"
ARR = "arr"
DEP = "dep"
AC_DEP = "acdep"
SOURCE = ("source",)
SINK = ("sink",)

Vertex = Tuple
DeltaKey = Tuple[str, str, int]  # (operator id, aircraft id, tau)
DeltaAssignment = Mapping[Tuple[str, str], int]  # (operator, aircraft) -> tau


def park(r: str, t: int) -> Vertex:
    return (PARK, r, t)


def arr(r: str, t: int) -> Vertex:
    return (ARR, r, t)


def dep(r: str, t: int) -> Vertex:
    return (DEP, r, t)


def acdep(i: str, j: str, tau: int) -> Vertex:
    return (AC_DEP, i, j, tau)


@dataclass(frozen=True)
class AffineBound:
    """Integer bound of the form constant + sum(coeff * delta[key])."""

    constant: int
    coeffs: Tuple[Tuple[DeltaKey, int], ...] = ()

    def resolve(self, delta: DeltaAssignment) -> int:
        value = self.constant
        for (i, j, tau), coeff in self.coeffs:
            if delta[(i, j)] == tau:
                value += coeff
        return value


Bound = Union[int, AffineBound]


@dataclass(frozen=True)
class Edge:
    index: int
    cls: str  # "E1".."E9"
    key: Tuple
    tail: Vertex
    head: Vertex
    lower: Bound
    upper: Bound
    weight: Fraction
    q: Optional[int] = None  # bundle position for E3/E8


@dataclass(frozen=True)
class AuxGraph:
    instance: Instance
    bids: Profile
    vertices: Tuple[Vertex, ...]
    edges: Tuple[Edge, ...]
    delta_keys: Tuple[DeltaKey, ...]

    @property
    def total_aircraft(self) -> int:
        return self.instance.total_aircraft()

    def edges_of_class(self, cls: str) -> List[Edge]:
        return [e for e in self.edges if e.cls == cls]

    def bundle(self, cls: str, *key_prefix) -> List[Edge]:
        """E3/E8 edges sharing a (r, t) or (r,) prefix, ordered by q."""
        return [e for e in self.edges if e.cls == cls and e.key[:-1] == key_prefix]

    def e5_edge(self, i: str, j: str, k: int) -> Edge:
        for e in self.edges:
            if e.cls == "E5" and e.key == (i, j, k):
                return e
        raise KeyError(f"no E5 edge for ({i}, {j}, {k})")

    def weight_scale(self) -> int:
        """LCM of weight denominators; scaling by it makes costs integral."""
        return lcm(*(e.weight.denominator for e in self.edges), 1)


@dataclass(frozen=True)
class FlowSolution:
    """Integral edge flows plus the departure-time assignment they obey."""

    flows: Tuple[int, ...]
    delta: Mapping[Tuple[str, str], int]

    def flow(self, edge: Edge) -> int:
        return self.flows[edge.index]


class FlowCompletionError(ValueError):
    """Partial flow admits no feasible completion."""


def build_graph(instance: Instance, bids: Profile) -> AuxGraph:
    """Construct the auxiliary graph for `instance` under `bids`.

    Edge indexing is deterministic: class E1..E9, then lexicographic key,
    then bundle position.
    """
    h = instance.horizon
    lam = instance.congestion_ratio

    vertices: List[Vertex] = []
    for port in instance.vertiports:
        for t in range(1, h + 1):
            vertices.extend([park(port.id, t), arr(port.id, t), dep(port.id, t)])
    delta_keys: List[DeltaKey] = []
    for operator, craft in instance.iter_aircraft():
        for tau in craft.departure_times():
            vertices.append(acdep(operator.id, craft.id, tau))
            delta_keys.append((operator.id, craft.id, tau))
    vertices.extend([SOURCE, SINK])

    # Vertiport-time pairs that can actually receive / emit a route,
    # for the zero-capacity pruning of dangling arrival/departure gates.
    arrival_used = set()
    departure_used = set()
    for operator, craft in instance.iter_aircraft():
        for entry in craft.menu:
            if entry.is_stay:
                continue
            arrival_used.add((entry.destination, entry.arrive_time))
            departure_used.add((craft.origin, entry.depart_time))

    edges: List[Edge] = []

    def add(cls: str, key: Tuple, tail: Vertex, head: Vertex, lower: Bound,
            upper: Bound, weight: Fraction, q: Optional[int] = None) -> None:
        edges.append(Edge(len(edges), cls, key, tail, head, lower, upper, weight, q))

    zero = Fraction(0)
    for port in instance.vertiports:
        for t in range(1, h + 1):
            cap = port.arrival_cap[t - 1] if (port.id, t) in arrival_used else 0
            add("E1", (port.id, t), arr(port.id, t), park(port.id, t), 0, cap, zero)
    for port in instance.vertiports:
        for t in range(1, h + 1):
            cap = port.departure_cap[t - 1] if (port.id, t) in departure_used else 0
            add("E2", (port.id, t), park(port.id, t), dep(port.id, t), 0, cap, zero)
    for port in instance.vertiports:
        for t in range(1, h):
            for q in range(1, port.parking_cap[t - 1] + 1):
                g = port.congestion_cost[t - 1]
                weight = -lam * (g[q] - g[q - 1])
                add("E3", (port.id, t, q), park(port.id, t), park(port.id, t + 1),
                    0, 1, weight, q)
    for operator, craft in instance.iter_aircraft():
        for tau in craft.departure_times():
            if tau == 0:
                continue
            bound = AffineBound(0, (((operator.id, craft.id, tau), 1),))
            add("E4", (operator.id, craft.id, tau), dep(craft.origin, tau),
                acdep(operator.id, craft.id, tau), bound, bound, zero)
    for operator, craft in instance.iter_aircraft():
        for entry in craft.menu:
            if entry.is_stay:
                continue
            weight = operator.weight * bids[(operator.id, craft.id, entry.key)]
            add("E5", (operator.id, craft.id, entry.key),
                acdep(operator.id, craft.id, entry.depart_time),
                arr(entry.destination, entry.arrive_time), 0, 1, weight)
    for port in instance.vertiports:
        coeffs = tuple(
            ((operator.id, craft.id, 0), -1)
            for operator, craft in instance.iter_aircraft()
            if craft.origin == port.id
        )
        bound = AffineBound(initial_occupancy(instance, port.id), coeffs)
        add("E6", (port.id,), SOURCE, park(port.id, 1), bound, bound, zero)
    for operator, craft in instance.iter_aircraft():
        bound = AffineBound(0, (((operator.id, craft.id, 0), 1),))
        weight = operator.weight * bids[(operator.id, craft.id, craft.stay_key)]
        add("E7", (operator.id, craft.id), SOURCE, acdep(operator.id, craft.id, 0),
            bound, bound, weight)
    for port in instance.vertiports:
        for q in range(1, port.parking_cap[h - 1] + 1):
            g = port.congestion_cost[h - 1]
            weight = -lam * (g[q] - g[q - 1])
            add("E8", (port.id, q), park(port.id, h), SINK, 0, 1, weight, q)
    for operator, craft in instance.iter_aircraft():
        bound = AffineBound(0, (((operator.id, craft.id, 0), 1),))
        add("E9", (operator.id, craft.id), acdep(operator.id, craft.id, 0),
            park(craft.origin, 1), bound, bound, zero)

    return AuxGraph(instance, bids, tuple(vertices), tuple(edges), tuple(delta_keys))


def incidence(graph: AuxGraph) -> np.ndarray:
    """Signed vertex-edge incidence matrix: +1 at head, -1 at tail."""
    index = {v: i for i, v in enumerate(graph.vertices)}
    matrix = np.zeros((len(graph.vertices), len(graph.edges)), dtype=np.int64)
    for e in graph.edges:
        matrix[index[e.tail], e.index] = -1
        matrix[index[e.head], e.index] = 1
    return matrix


def truncated_incidence(graph: AuxGraph) -> np.ndarray:
    """Incidence matrix without the source and sink rows."""
    keep = [i for i, v in enumerate(graph.vertices) if v not in (SOURCE, SINK)]
    return incidence(graph)[keep, :]


def delta_of_allocation(instance: Instance, allocation: Allocation
                        ) -> Dict[Tuple[str, str], int]:
    """Departure-time assignment induced by a canonical allocation."""
    delta: Dict[Tuple[str, str], int] = {}
    for operator, craft in instance.iter_aircraft():
        entry = craft.option(allocation[(operator.id, craft.id)])
        delta[(operator.id, craft.id)] = entry.depart_time
    return delta


def flow_occupancy(instance: Instance, allocation: Allocation
                   ) -> Dict[Tuple[str, int], int]:
    """Units crossing each parking bundle: occupancy with slot-1
    departures already subtracted at slot 1 (flow balance demands it).
    """
    table = occupancy_table(instance, allocation)
    for operator, craft in instance.iter_aircraft():
        entry = craft.option(allocation[(operator.id, craft.id)])
        if not entry.is_stay and entry.depart_time == 1:
            table[(craft.origin, 1)] -= 1
    return table


def allocation_to_flow(graph: AuxGraph, allocation: Allocation) -> FlowSolution:
    """Direct construction of the unique flow matching `allocation`."""
    instance = graph.instance
    report = is_feasible(instance, allocation)
    if not report.feasible:
        raise ValueError(f"allocation infeasible: {report.violations}")
    delta = delta_of_allocation(instance, allocation)
    chosen = {
        (operator.id, craft.id): craft.option(allocation[(operator.id, craft.id)])
        for operator, craft in instance.iter_aircraft()
    }
    stayers = {
        port.id: sum(
            1 for (i, j), entry in chosen.items() if entry.is_stay
            and instance.operator(i).aircraft(j).origin == port.id
        )
        for port in instance.vertiports
    }
    occupancy = flow_occupancy(instance, allocation)
    arrivals: Dict[Tuple[str, int], int] = {}
    departures: Dict[Tuple[str, int], int] = {}
    for (i, j), entry in chosen.items():
        if entry.is_stay:
            continue
        arrivals[(entry.destination, entry.arrive_time)] = (
            arrivals.get((entry.destination, entry.arrive_time), 0) + 1
        )
        origin = instance.operator(i).aircraft(j).origin
        departures[(origin, entry.depart_time)] = (
            departures.get((origin, entry.depart_time), 0) + 1
        )

    flows = [0] * len(graph.edges)
    for e in graph.edges:
        if e.cls == "E1":
            flows[e.index] = arrivals.get(e.key, 0)
        elif e.cls == "E2":
            flows[e.index] = departures.get(e.key, 0)
        elif e.cls in ("E3", "E8"):
            r = e.key[0]
            t = e.key[1] if e.cls == "E3" else instance.horizon
            flows[e.index] = 1 if e.q <= occupancy[(r, t)] else 0
        elif e.cls == "E4":
            i, j, tau = e.key
            flows[e.index] = 1 if delta[(i, j)] == tau else 0
        elif e.cls == "E5":
            i, j, k = e.key
            flows[e.index] = 1 if allocation[(i, j)] == k else 0
        elif e.cls == "E6":
            flows[e.index] = initial_occupancy(instance, e.key[0]) - stayers[e.key[0]]
        elif e.cls in ("E7", "E9"):
            i, j = e.key
            flows[e.index] = 1 if delta[(i, j)] == 0 else 0
    return FlowSolution(tuple(flows), delta)


def flow_objective(graph: AuxGraph, solution: FlowSolution) -> Fraction:
    """Exact weighted flow value."""
    total = Fraction(0)
    for e in graph.edges:
        if solution.flows[e.index]:
            total += e.weight * solution.flows[e.index]
    return total


def complete_flow(graph: AuxGraph, partial: Mapping[int, int]) -> FlowSolution:
    """Recover the unique full flow from values on the E3/E5/E8 edges.

    Elimination order: arrival-gate balance fixes E1; aircraft-vertex
    balance fixes E4 and hence delta; departure-gate balance fixes E2;
    parking balance is then a pure consistency check.  Raises
    FlowCompletionError naming the first violated balance or bound.
    """
    instance = graph.instance
    given = {e.index for e in graph.edges if e.cls in ("E3", "E5", "E8")}
    if set(partial) != given:
        raise FlowCompletionError("partial flow must cover exactly E3, E5 and E8")
    flows: List[Optional[int]] = [None] * len(graph.edges)
    for idx in given:
        value = partial[idx]
        e = graph.edges[idx]
        if not 0 <= value <= e.upper:
            raise FlowCompletionError(f"flow on {e.cls}{e.key} outside [0, {e.upper}]")
        flows[idx] = value

    e5 = graph.edges_of_class("E5")

    # E1 from balance at each arrival gate.
    for e in graph.edges_of_class("E1"):
        r, t = e.key
        inflow = sum(flows[f.index] for f in e5 if f.head == arr(r, t))
        if inflow > (e.upper if isinstance(e.upper, int) else 0):
            raise FlowCompletionError(f"arrival gate ({r}, {t}) over capacity")
        flows[e.index] = inflow

    # E4 and delta from balance at aircraft departure vertices.
    delta: Dict[Tuple[str, str], int] = {}
    for e in graph.edges_of_class("E4"):
        i, j, tau = e.key
        outflow = sum(flows[f.index] for f in e5 if f.tail == acdep(i, j, tau))
        if outflow not in (0, 1):
            raise FlowCompletionError(
                f"non-binary route flow at aircraft ({i}, {j}), tau={tau}"
            )
        flows[e.index] = outflow
        if outflow == 1:
            if (i, j) in delta:
                raise FlowCompletionError(f"aircraft ({i}, {j}) departs twice")
            delta[(i, j)] = tau
    for operator, craft in instance.iter_aircraft():
        delta.setdefault((operator.id, craft.id), 0)

    # E7/E9 carry the stay indicator.
    for e in graph.edges:
        if e.cls in ("E7", "E9"):
            i, j = e.key
            flows[e.index] = 1 if delta[(i, j)] == 0 else 0

    # E2 from balance at departure gates.
    e4 = graph.edges_of_class("E4")
    for e in graph.edges_of_class("E2"):
        r, t = e.key
        outflow = sum(flows[f.index] for f in e4 if f.tail == dep(r, t))
        if outflow > (e.upper if isinstance(e.upper, int) else 0):
            raise FlowCompletionError(f"departure gate ({r}, {t}) over capacity")
        flows[e.index] = outflow

    # E6 from the stay indicators.
    for e in graph.edges_of_class("E6"):
        r = e.key[0]
        stay_here = sum(
            1 for operator, craft in instance.iter_aircraft()
            if craft.origin == r and delta[(operator.id, craft.id)] == 0
        )
        value = initial_occupancy(instance, r) - stay_here
        if value < 0:
            raise FlowCompletionError(f"negative source flow at vertiport {r}")
        flows[e.index] = value

    # Parking balance is now a consistency check.
    balance: Dict[Vertex, int] = {}
    for e in graph.edges:
        balance[e.head] = balance.get(e.head, 0) + flows[e.index]
        balance[e.tail] = balance.get(e.tail, 0) - flows[e.index]
    for v in graph.vertices:
        if v in (SOURCE, SINK):
            continue
        if balance.get(v, 0) != 0:
            raise FlowCompletionError(f"flow balance violated at vertex {v}")

    return FlowSolution(tuple(flows), delta)


def flow_to_allocation(graph: AuxGraph, solution: FlowSolution) -> Allocation:
    """Read the canonical allocation off the E5/E9 unit flows."""
    instance = graph.instance
    allocation: Dict[Tuple[str, str], int] = {}
    for operator, craft in instance.iter_aircraft():
        key = (operator.id, craft.id)
        granted = []
        for entry in craft.menu:
            if entry.is_stay:
                continue
            value = solution.flow(graph.e5_edge(operator.id, craft.id, entry.key))
            if value not in (0, 1):
                raise ValueError(
                    f"non-binary route flow for aircraft {key}, menu {entry.key}"
                )
            if value == 1:
                granted.append(entry.key)
        if solution.delta[key] == 0:
            if granted:
                raise ValueError(f"aircraft {key} both stays and departs")
            allocation[key] = craft.stay_key
        else:
            if len(granted) != 1:
                raise ValueError(f"aircraft {key} granted {len(granted)} routes")
            allocation[key] = granted[0]
    check_allocation(instance, allocation)
    return allocation


def to_dot(graph: AuxGraph) -> str:
    """Graphviz rendering of the graph for visual inspection."""
    def name(v: Vertex) -> str:
        return "_".join(str(part) for part in v)

    def bound_str(b: Bound) -> str:
        if isinstance(b, int):
            return str(b)
        terms = [str(b.constant)] if b.constant or not b.coeffs else []
        for (i, j, tau), coeff in b.coeffs:
            sign = "+" if coeff > 0 else "-"
            terms.append(f"{sign}d[{i},{j},{tau}]")
        return "".join(terms) or "0"

    lines = ["digraph aux {"]
    for v in graph.vertices:
        lines.append(f'  {name(v)} [label="{name(v)}"];')
    for e in graph.edges:
        label = (f"{e.cls} [{bound_str(e.lower)},{bound_str(e.upper)}] "
                 f"w={e.weight}")
        lines.append(f'  {name(e.tail)} -> {name(e.head)} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)
