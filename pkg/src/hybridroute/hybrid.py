"""Engine selection with a surplus fallback guarantee.

The deterministic baseline always runs. The GA runs when the instance
profile scores above the threshold and the circuit breaker is closed. The GA
route is deployed only if it validates and beats the deterministic route on
net surplus without giving up gross surplus, so the deployed gross surplus is
never below the deterministic one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .baselines import BaselineResult, baseline_routes, baseline_seeds, deterministic_solve
from .errors import NoFeasiblePath, NoPathExists
from .graph import DexGraph, build_graph, token_paths
from .instance import Instance
from .nsga2 import GAConfig, GAResult, GeneticRouter, RoutingContext
from .objectives import Evaluator, ObjectiveVector, RouteGenome
from .safety import CircuitBreaker, ValidationCaps, ValidationReport, validate_route


@dataclass(frozen=True)
class InstanceProfile:
    size_ratio: float
    f_liq: float
    d_het: float
    gas_gwei: float

    def features(self) -> tuple[float, float, float, float]:
        return (self.size_ratio, self.f_liq, self.d_het, self.gas_gwei)


@dataclass(frozen=True)
class HybridConfig:
    tau: float = 0.5
    score_weights: tuple[float, float, float, float] = (2.0, 2.0, 1.0, -1.0)
    score_bias: float = -1.0
    gas_scale_gwei: float = 100.0
    caps: ValidationCaps = field(default_factory=ValidationCaps)
    breaker_limit: int = 3
    det_budget_ms: float = 500.0
    total_budget_ms: float = 2000.0
    ga: GAConfig = field(default_factory=GAConfig)

    def __post_init__(self):
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")


@dataclass
class HybridResult:
    chosen: str
    genome: RouteGenome | None
    vector: ObjectiveVector | None
    found: bool
    fallback_triggered: bool
    score: float
    profile: InstanceProfile | None
    det_result: BaselineResult | None = None
    ga_result: GAResult | None = None
    validation: dict[str, ValidationReport] = field(default_factory=dict)
    elapsed_ms: float = 0.0

    @property
    def ga_valid(self) -> bool | None:
        rep = self.validation.get("ga")
        return None if rep is None else rep.passed

    @property
    def net(self) -> float:
        return self.vector.net if self.vector is not None else -math.inf


def _relevant_edges(graph: DexGraph, src: str, dst: str, max_hops: int):
    pairs = set()
    for seq in token_paths(graph, src, dst, max_hops):
        pairs.update(zip(seq, seq[1:]))
    return {pair: graph.parallel(*pair) for pair in sorted(pairs)}


def profile_instance(instance: Instance, graph: DexGraph | None = None, max_hops: int = 4) -> InstanceProfile:
    """Order size over mean reachable depth, fragmentation and depth spread."""
    graph = graph or build_graph(instance.pools)
    o = instance.order
    pairs = _relevant_edges(graph, o.src, o.dst, max_hops)
    if not pairs:
        raise NoFeasiblePath(f"no path {o.src}->{o.dst}")
    depths = []
    frag_num = frag_den = 0.0
    for (a, _), edges in pairs.items():
        d = [graph.pools[e.pool_id].reserve(a) * instance.price(a) for e in edges]
        depths.extend(d)
        total = math.fsum(d)
        hhi = math.fsum((x / total) ** 2 for x in d)
        frag_num += total * (1.0 - hhi)
        frag_den += total
    mean = math.fsum(depths) / len(depths)
    var = math.fsum((x - mean) ** 2 for x in depths) / len(depths)
    q_eth = o.quantity * instance.price(o.src)
    return InstanceProfile(q_eth / mean, frag_num / frag_den if frag_den > 0 else 0.0,
                           math.sqrt(var) / mean, instance.gas_price_gwei)


def selection_score(profile: InstanceProfile, config: HybridConfig | None = None) -> float:
    """Logistic score h(z); the GA is preferred when h >= tau."""
    cfg = config or HybridConfig()
    z = (profile.size_ratio, profile.f_liq, profile.d_het, profile.gas_gwei / cfg.gas_scale_gwei)
    x = math.fsum(w * v for w, v in zip(cfg.score_weights, z)) + cfg.score_bias
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


def solve_hybrid(instance: Instance, config: HybridConfig | None = None, breaker: CircuitBreaker | None = None,
                 evaluator: Evaluator | None = None, graph: DexGraph | None = None,
                 det_result: BaselineResult | None = None, ga_result: GAResult | None = None,
                 force_ga: bool | None = None) -> HybridResult:
    """Profile, run the engines and deploy the best validated route.

    ``det_result`` / ``ga_result`` may be supplied to reuse earlier runs on
    the same instance; ``force_ga`` overrides the score threshold.
    """
    t0 = _now_ms()
    cfg = config or HybridConfig()
    graph = graph or build_graph(instance.pools)
    evaluator = evaluator or Evaluator(instance)
    try:
        profile = profile_instance(instance, graph, cfg.ga.max_hops)
    except NoFeasiblePath:
        return HybridResult("DET", None, None, False, False, 0.0, None, elapsed_ms=_now_ms() - t0)
    h = selection_score(profile, cfg)

    if det_result is None:
        det_result = deterministic_solve(instance, cfg.det_budget_ms, evaluator, graph, k_max=cfg.ga.k_max,
                                         max_hops=cfg.ga.max_hops)
    reports: dict[str, ValidationReport] = {}
    det_ok = False
    if det_result.found:
        reports["det"] = validate_route(det_result.genome, det_result.vector, evaluator, cfg.caps)
        det_ok = reports["det"].passed

    run_ga = (h >= cfg.tau) if force_ga is None else force_ga
    if breaker is not None and breaker.is_open:
        run_ga = False
    if run_ga and ga_result is None:
        try:
            paths = baseline_routes(graph, instance, max_hops=cfg.ga.max_hops)
        except NoPathExists:
            paths = []
        seeds = ([det_result.genome] if det_result.found else []) + baseline_seeds(paths, cfg.ga.k_max)
        ctx = RoutingContext(instance, evaluator, graph, cfg.ga, paths[0] if paths else None)
        remaining = max(cfg.total_budget_ms - (_now_ms() - t0), 1.0)
        ga_result = GeneticRouter(ctx, seeds, cfg.ga).run(min(remaining, cfg.ga.time_budget_ms))
    if not run_ga:
        ga_result = None

    ga_ok = False
    if ga_result is not None:
        best = ga_result.best
        reports["ga"] = validate_route(best.genome, best.vector, evaluator, cfg.caps)
        ga_ok = reports["ga"].passed
    fallback = ga_result is not None and not ga_ok
    if breaker is not None:
        breaker.record(ga_result is not None, ga_ok)

    use_ga = False
    if ga_ok:
        g = ga_result.best.vector
        if not det_ok:
            use_ga = True
        else:
            d = det_result.vector
            use_ga = g.net > d.net and g.S >= d.S
    elapsed = _now_ms() - t0
    if use_ga:
        b = ga_result.best
        return HybridResult("GA", b.genome, b.vector, True, fallback, h, profile, det_result, ga_result,
                            reports, elapsed)
    if det_ok:
        return HybridResult("DET", det_result.genome, det_result.vector, True, fallback, h, profile, det_result,
                            ga_result, reports, elapsed)
    return HybridResult("DET", None, None, False, fallback, h, profile, det_result, ga_result, reports, elapsed)
