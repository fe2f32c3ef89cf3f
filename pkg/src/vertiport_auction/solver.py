"""Welfare maximization over the auxiliary graph.

Branches over the per-aircraft departure-time binaries; each fixed
assignment leaves a max-weight flow with integer bounds, solved exactly
as a min-cost circulation (rational edge weights are scaled to integers
first, so `networkx.network_simplex` runs in exact integer arithmetic
and total unimodularity gives integral flows for free).

Two interchangeable strategies: exhaustive enumeration of departure-time
combinations (the reference path) and depth-first branch-and-bound with
an admissible flow-relaxation bound.  Both return the same objective and,
by construction, the same allocation: ties are broken by the
lexicographically smallest departure-time assignment, then by greedily
fixing the lexicographically smallest menu keys that still attain the
optimum.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .graph import (
    SINK,
    SOURCE,
    AffineBound,
    AuxGraph,
    DeltaAssignment,
    Edge,
    FlowSolution,
    build_graph,
    flow_objective,
    flow_to_allocation,
)
from .model import Allocation, Instance, Profile, validate_instance

#: Per-edge (lower, upper) override used while pinning route choices.
BoundOverride = Mapping[int, Tuple[int, int]]


@dataclass
class SolveStats:
    nodes_explored: int = 0
    fixed_delta_solves: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class SolveResult:
    flow: FlowSolution
    objective: Fraction
    allocation: Allocation
    delta: Mapping[Tuple[str, str], int]
    stats: SolveStats


class SolverError(ValueError):
    pass


def _aircraft_order(graph: AuxGraph) -> List[Tuple[str, str]]:
    return [(op.id, craft.id) for op, craft in graph.instance.iter_aircraft()]


def _departure_times(graph: AuxGraph) -> Dict[Tuple[str, str], Tuple[int, ...]]:
    return {
        (op.id, craft.id): craft.departure_times()
        for op, craft in graph.instance.iter_aircraft()
    }


def delta_key(graph: AuxGraph, delta: DeltaAssignment) -> Tuple[int, ...]:
    """Lexicographic comparison key: tau per aircraft in canonical order."""
    return tuple(delta[pair] for pair in _aircraft_order(graph))


def enumerate_deltas(instance: Instance) -> Iterator[Dict[Tuple[str, str], int]]:
    """Every departure-time combination, lexicographic over the canonical
    aircraft order with tau ascending.  Empty fleet yields one empty map.
    """
    pairs = [(op.id, craft.id) for op, craft in instance.iter_aircraft()]
    choices = [
        craft.departure_times() for _, craft in instance.iter_aircraft()
    ]
    for combo in itertools.product(*choices):
        yield dict(zip(pairs, combo))


def _resolved_bounds(graph: AuxGraph, partial_delta: DeltaAssignment,
                     overrides: Optional[BoundOverride] = None
                     ) -> List[Tuple[int, int]]:
    """Per-edge integer bounds under a (possibly partial) assignment.

    Aircraft absent from `partial_delta` are undecided: their selector
    bounds relax to [0, 1] and the source edge to the matching interval,
    a valid superset of every completion.
    """
    decided = set(partial_delta)
    bounds: List[Tuple[int, int]] = []
    for e in graph.edges:
        if overrides and e.index in overrides:
            bounds.append(overrides[e.index])
            continue
        if isinstance(e.lower, int) and isinstance(e.upper, int):
            bounds.append((e.lower, e.upper))
            continue
        if e.cls in ("E4", "E7", "E9"):
            key = e.key[:2] if e.cls in ("E7", "E9") else (e.key[0], e.key[1])
            if key in decided:
                value = e.lower.resolve(partial_delta)
                bounds.append((value, value))
            else:
                bounds.append((0, 1))
        elif e.cls == "E6":
            bound: AffineBound = e.lower
            fixed = bound.constant
            undecided_here = 0
            for (i, j, tau), coeff in bound.coeffs:
                if (i, j) in decided:
                    if partial_delta[(i, j)] == tau:
                        fixed += coeff
                else:
                    undecided_here += 1
            bounds.append((max(0, fixed - undecided_here), fixed))
        else:  # pragma: no cover - no other symbolic classes exist
            raise SolverError(f"unexpected symbolic bound on {e.cls}")
    return bounds


def _min_cost_flow(graph: AuxGraph, bounds: Sequence[Tuple[int, int]]
                   ) -> Optional[List[int]]:
    """Exact max-weight flow under the given bounds, or None if infeasible.

    Lower bounds are shifted out via the standard demand transformation;
    a sink-to-source return edge closes the circulation.
    """
    scale = graph.weight_scale()
    g = nx.MultiDiGraph()
    for v in graph.vertices:
        g.add_node(v, demand=0)
    for e, (lo, up) in zip(graph.edges, bounds):
        if lo > up:
            return None
        cost = -int(e.weight * scale)
        g.add_edge(e.tail, e.head, key=e.index, capacity=up - lo, weight=cost)
        if lo:
            g.nodes[e.tail]["demand"] += lo
            g.nodes[e.head]["demand"] -= lo
    g.add_edge(SINK, SOURCE, key="return", capacity=graph.total_aircraft, weight=0)
    try:
        _, flow_dict = nx.network_simplex(g)
    except nx.NetworkXUnfeasible:
        return None
    flows = [0] * len(graph.edges)
    for e, (lo, _) in zip(graph.edges, bounds):
        flows[e.index] = flow_dict[e.tail][e.head][e.index] + lo
    return flows


def _canonicalize_bundles(graph: AuxGraph, flows: List[int]) -> None:
    """Push parallel-bundle flow into prefix (lowest-q) form, in place.

    Weights are non-increasing in q, so this never lowers the objective.
    """
    bundles: Dict[Tuple, List[Edge]] = {}
    for e in graph.edges:
        if e.cls in ("E3", "E8"):
            bundles.setdefault((e.cls,) + e.key[:-1], []).append(e)
    for members in bundles.values():
        members.sort(key=lambda e: e.q)
        total = sum(flows[e.index] for e in members)
        for position, e in enumerate(members, start=1):
            flows[e.index] = 1 if position <= total else 0


def solve_fixed_delta(graph: AuxGraph, delta: DeltaAssignment,
                      overrides: Optional[BoundOverride] = None
                      ) -> Optional[FlowSolution]:
    """Optimal integral flow for a fully fixed departure-time assignment,
    or None when the fixed bounds admit no balanced flow.
    """
    times = _departure_times(graph)
    if set(delta) != set(times):
        raise SolverError("delta must assign every aircraft exactly once")
    for pair, tau in delta.items():
        if tau not in times[pair]:
            raise SolverError(f"aircraft {pair} has no departure time {tau}")
    flows = _min_cost_flow(graph, _resolved_bounds(graph, delta, overrides))
    if flows is None:
        return None
    _canonicalize_bundles(graph, flows)
    return FlowSolution(tuple(flows), dict(delta))


def relaxation_bound(graph: AuxGraph, partial_delta: DeltaAssignment
                     ) -> Optional[Fraction]:
    """Admissible upper bound for every completion of `partial_delta`."""
    flows = _min_cost_flow(graph, _resolved_bounds(graph, partial_delta))
    if flows is None:
        return None
    total = Fraction(0)
    for e in graph.edges:
        if flows[e.index]:
            total += e.weight * flows[e.index]
    return total


@dataclass
class _Incumbent:
    objective: Optional[Fraction] = None
    delta: Optional[Dict[Tuple[str, str], int]] = None
    key: Optional[Tuple[int, ...]] = None

    def offer(self, graph: AuxGraph, objective: Fraction,
              delta: DeltaAssignment) -> None:
        key = delta_key(graph, delta)
        if (self.objective is None or objective > self.objective
                or (objective == self.objective and key < self.key)):
            self.objective = objective
            self.delta = dict(delta)
            self.key = key


def _solve_enumerate(graph: AuxGraph, stats: SolveStats) -> _Incumbent:
    best = _Incumbent()
    for delta in enumerate_deltas(graph.instance):
        stats.nodes_explored += 1
        stats.fixed_delta_solves += 1
        solution = solve_fixed_delta(graph, delta)
        if solution is None:
            continue
        best.offer(graph, flow_objective(graph, solution), delta)
    return best


def _branch_order(graph: AuxGraph) -> List[Tuple[Tuple[str, str], List[int]]]:
    """Aircraft by descending bid spread; taus by descending best bid."""
    instance = graph.instance
    ordered = []
    for operator, craft in instance.iter_aircraft():
        bids = {
            entry.key: graph.bids[(operator.id, craft.id, entry.key)]
            for entry in craft.menu
        }
        spread = max(bids.values()) - min(bids.values())
        best_by_tau = {}
        for entry in craft.menu:
            bid = bids[entry.key]
            prev = best_by_tau.get(entry.depart_time)
            if prev is None or bid > prev:
                best_by_tau[entry.depart_time] = bid
        taus = sorted(best_by_tau, key=lambda tau: (-best_by_tau[tau], tau))
        ordered.append(((operator.id, craft.id), taus, spread))
    ordered.sort(key=lambda item: (-item[2], item[0]))
    return [(pair, taus) for pair, taus, _ in ordered]


def _solve_bnb(graph: AuxGraph, stats: SolveStats,
               node_limit: Optional[int] = None) -> _Incumbent:
    order = _branch_order(graph)
    canonical = _aircraft_order(graph)
    times = _departure_times(graph)
    best = _Incumbent()

    def subtree_min_key(partial: Dict[Tuple[str, str], int]) -> Tuple[int, ...]:
        return tuple(
            partial.get(pair, times[pair][0]) for pair in canonical
        )

    def visit(depth: int, partial: Dict[Tuple[str, str], int]) -> None:
        if node_limit is not None and stats.nodes_explored >= node_limit:
            return
        stats.nodes_explored += 1
        if depth == len(order):
            stats.fixed_delta_solves += 1
            solution = solve_fixed_delta(graph, partial)
            if solution is not None:
                best.offer(graph, flow_objective(graph, solution), partial)
            return
        if best.objective is not None:
            stats.fixed_delta_solves += 1
            bound = relaxation_bound(graph, partial)
            if bound is None or bound < best.objective:
                return
            # An equal bound may still hide an equal-objective leaf with a
            # lexicographically smaller assignment; prune only when it cannot.
            if bound == best.objective and subtree_min_key(partial) >= best.key:
                return
        pair, taus = order[depth]
        for tau in taus:
            partial[pair] = tau
            visit(depth + 1, partial)
            del partial[pair]

    visit(0, {})
    return best


def _lexmin_allocation(graph: AuxGraph, delta: DeltaAssignment,
                       objective: Fraction, stats: SolveStats) -> FlowSolution:
    """Among optima at `delta`, the flow granting the lexicographically
    smallest menu keys, found by greedily pinning one aircraft at a time.
    """
    instance = graph.instance
    overrides: Dict[int, Tuple[int, int]] = {}
    for operator, craft in instance.iter_aircraft():
        tau = delta[(operator.id, craft.id)]
        if tau == 0:
            continue
        candidates = [e for e in craft.menu
                      if not e.is_stay and e.depart_time == tau]
        if len(candidates) <= 1:
            continue
        edge_ids = [graph.e5_edge(operator.id, craft.id, entry.key).index
                    for entry in candidates]
        for entry, chosen_idx in zip(candidates, edge_ids):
            trial = dict(overrides)
            trial[chosen_idx] = (1, 1)
            for other in edge_ids:
                if other != chosen_idx:
                    trial[other] = (0, 0)
            stats.fixed_delta_solves += 1
            solution = solve_fixed_delta(graph, delta, trial)
            if solution is not None and flow_objective(graph, solution) == objective:
                overrides = trial
                break
        else:  # pragma: no cover - some candidate always attains the optimum
            raise SolverError("no route choice attains the fixed-delta optimum")
    solution = solve_fixed_delta(graph, delta, overrides)
    if solution is None or flow_objective(graph, solution) != objective:
        raise SolverError("tie-break pinning lost the optimum")  # pragma: no cover
    return solution


def solve(graph: AuxGraph, strategy: str = "bnb",
          node_limit: Optional[int] = None) -> SolveResult:
    """Global welfare maximum over all departure-time assignments.

    ``strategy`` is ``"bnb"`` (default) or ``"enumerate"``; both return
    identical objectives and allocations.
    """
    if strategy not in ("bnb", "enumerate"):
        raise SolverError(f"unknown strategy {strategy!r}")
    stats = SolveStats()
    start = time.perf_counter()
    if strategy == "enumerate":
        best = _solve_enumerate(graph, stats)
    else:
        best = _solve_bnb(graph, stats, node_limit)
    if best.objective is None:
        raise SolverError("no feasible departure-time assignment")
    flow = _lexmin_allocation(graph, best.delta, best.objective, stats)
    stats.wall_time = time.perf_counter() - start
    return SolveResult(
        flow=flow,
        objective=best.objective,
        allocation=flow_to_allocation(graph, flow),
        delta=dict(best.delta),
        stats=stats,
    )


def optimal_allocation(instance: Instance, bids: Profile,
                       strategy: str = "bnb") -> Allocation:
    """Welfare-maximizing allocation under the documented tie-break."""
    report = validate_instance(instance)
    if not report.ok:
        raise SolverError(f"invalid instance: {report.violations}")
    return solve(build_graph(instance, bids), strategy=strategy).allocation
