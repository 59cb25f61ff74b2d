"""Deterministic routing baselines: candidate paths plus two split optimizers."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from itertools import islice
from typing import Sequence

from .errors import NoPathExists
from .graph import DexGraph, PoolEdge, build_graph, cheapest_paths, edge_weights, find_negative_cycles
from .instance import Instance
from .objectives import K_MAX, MAX_HOPS, Evaluator, ObjectiveVector, RouteGenome
from .safety import ValidationCaps, validate_route

TOP_PATHS = 8
WATER_FILL_UNITS = 100
GRID_STEP = 0.1


class Method(str, enum.Enum):
    WATER_FILL = "WaterFill"
    SIMPLEX_GRID = "SimplexGrid"
    CYCLE_SEED = "CycleSeed"


@dataclass
class BaselineResult:
    genome: RouteGenome | None
    vector: ObjectiveVector | None
    method: Method
    elapsed_ms: float
    found: bool

    @property
    def net(self) -> float:
        return self.vector.net if self.vector is not None else float("-inf")

    @classmethod
    def missing(cls, method: Method, elapsed_ms: float = 0.0) -> "BaselineResult":
        return cls(None, None, method, elapsed_ms, False)


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


def probe_sizes(instance: Instance, k_max: int = K_MAX) -> dict[str, float]:
    """Q / K_max expressed in each token's own units via ETH reference prices."""
    o = instance.order
    eth = o.quantity * instance.price(o.src) / k_max
    return {t.id: eth / t.eth_price for t in instance.tokens}


def baseline_routes(graph: DexGraph, instance: Instance, weights=None, top: int = TOP_PATHS,
                    max_cycles: int = 8, max_hops: int = MAX_HOPS, cycle_search: int = 256) -> list[tuple]:
    """Cheapest paths by log-rate cost, then paths touching profitable cycles."""
    o = instance.order
    if weights is None:
        weights = edge_weights(graph, probe_sizes(instance))
    if o.src not in graph.adjacency or o.dst not in graph.adjacency:
        raise NoPathExists(f"no path {o.src}->{o.dst}")
    ranked = list(islice(cheapest_paths(graph, weights, o.src, o.dst, max_hops), max(top, cycle_search)))
    if not ranked:
        raise NoPathExists(f"no path {o.src}->{o.dst}")
    chosen = [p for _, p in ranked[:top]]
    cycles = find_negative_cycles(graph, edge_weights(graph, 0.0), max_cycles, max_len=max_hops)
    for cyc in cycles:
        ring = set(cyc)
        for _, p in ranked:
            if p not in chosen and ring.intersection(p):
                chosen.append(p)
                break
    return chosen


def baseline_seeds(paths: Sequence[tuple], k_max: int = K_MAX) -> list[RouteGenome]:
    """Warm-start genomes: every candidate alone plus an equal split of the best few."""
    seeds = [RouteGenome.single(p) for p in paths]
    head = list(paths[:k_max])
    if len(head) > 1:
        seeds.append(RouteGenome(tuple(head), tuple(1.0 / len(head) for _ in head)))
    return seeds


def _genome_from_units(paths, units) -> RouteGenome:
    total = sum(units)
    kept = [(p, u) for p, u in zip(paths, units) if u > 0]
    return RouteGenome(tuple(p for p, _ in kept), tuple(u / total for _, u in kept))


def _path_output(path, state, amount) -> tuple[float, list]:
    local = {}
    for e in path:
        pool = local.get(e.pool_id) or state[e.pool_id]
        res = pool.swap(e.token_in, e.token_out, amount)
        local[e.pool_id] = res.new_pool
        amount = res.amount_out
    return amount, list(local.items())


def water_fill_split(paths: Sequence[tuple], evaluator: Evaluator, budget_ms: float = 500.0,
                     units: int = WATER_FILL_UNITS) -> BaselineResult:
    """Greedy unit-by-unit allocation to the path with the highest marginal output."""
    t0 = _now_ms()
    if not paths:
        return BaselineResult.missing(Method.WATER_FILL)
    paths = list(paths)
    q = evaluator.quantity
    unit = q / units
    state = dict(evaluator.market)
    alloc = [0] * len(paths)
    assigned = 0
    if len(paths) == 1:
        alloc[0] = units
        assigned = units
    while assigned < units:
        if assigned and _now_ms() - t0 > budget_ms:
            break
        best_k, best_out, best_upd = -1, -1.0, None
        for k, p in enumerate(paths):
            out, upd = _path_output(p, state, unit)
            if out > best_out:
                best_k, best_out, best_upd = k, out, upd
        alloc[best_k] += 1
        state.update(best_upd)
        assigned += 1
    if assigned < units:
        # deadline hit: scale the partial allocation up to the full order
        alloc = [a * units / assigned for a in alloc]
    genome = _genome_from_units(paths, alloc)
    vec = evaluator.evaluate(genome)
    return BaselineResult(genome, vec, Method.WATER_FILL, _now_ms() - t0, True)


def simplex_points(k: int, steps: int):
    """Integer compositions of ``steps`` into ``k`` parts, first part descending."""
    if k == 1:
        yield (steps,)
        return
    for first in range(steps, -1, -1):
        for rest in simplex_points(k - 1, steps - first):
            yield (first,) + rest


def simplex_grid_search(paths: Sequence[tuple], evaluator: Evaluator, budget_ms: float = 500.0,
                        step: float = GRID_STEP, k_max: int = K_MAX) -> BaselineResult:
    """Best net surplus over a coarse simplex grid of split ratios."""
    t0 = _now_ms()
    paths = list(paths)[:k_max]
    if not paths:
        return BaselineResult.missing(Method.SIMPLEX_GRID)
    steps = round(1.0 / step)
    best, best_net = None, float("-inf")
    for i, pt in enumerate(simplex_points(len(paths), steps)):
        if i and _now_ms() - t0 > budget_ms:
            break
        g = _genome_from_units(paths, pt)
        net = evaluator.surplus(g) - evaluator.gas_cost(g)
        if net > best_net:
            best, best_net = g, net
    vec = evaluator.evaluate(best)
    return BaselineResult(best, vec, Method.SIMPLEX_GRID, _now_ms() - t0, True)


@dataclass
class DeterministicOutcome:
    best: BaselineResult
    water_fill: BaselineResult
    simplex_grid: BaselineResult
    paths: list


def deterministic_solve(instance: Instance, budget_ms: float = 500.0, evaluator: Evaluator | None = None,
                        graph: DexGraph | None = None, caps: ValidationCaps | None = None,
                        k_max: int = K_MAX, max_hops: int = MAX_HOPS, detailed: bool = False):
    """Run both split optimizers on the top candidates and keep the better net.

    Ties go to water-filling. With ``caps`` given, a candidate failing
    validation is discarded; ``found`` is False if nothing survives.
    """
    t0 = _now_ms()
    graph = graph or build_graph(instance.pools)
    evaluator = evaluator or Evaluator(instance)
    try:
        paths = baseline_routes(graph, instance, max_hops=max_hops)
    except NoPathExists:
        miss = BaselineResult.missing(Method.WATER_FILL, _now_ms() - t0)
        out = DeterministicOutcome(miss, miss, BaselineResult.missing(Method.SIMPLEX_GRID), [])
        return out if detailed else miss
    head = paths[:k_max]
    wf = water_fill_split(head, evaluator, budget_ms / 2)
    remaining = max(budget_ms - (_now_ms() - t0), 1.0)
    grid = simplex_grid_search(head, evaluator, remaining, k_max=k_max)
    candidates = [wf, grid]
    if caps is not None:
        candidates = [c for c in candidates if validate_route(c.genome, c.vector, evaluator, caps).passed]
    if not candidates:
        best = BaselineResult.missing(Method.WATER_FILL, _now_ms() - t0)
    else:
        best = candidates[0]
        for c in candidates[1:]:
            if c.net > best.net:
                best = c
        best = BaselineResult(best.genome, best.vector, best.method, _now_ms() - t0, True)
    if detailed:
        return DeterministicOutcome(best, wf, grid, paths)
    return best
