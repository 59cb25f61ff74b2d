"""Anytime NSGA-II over variable-length path-set genomes with split ratios."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import NoFeasiblePath, NoPathExists
from .graph import DexGraph, PoolEdge, build_graph, hops_to, is_valid_path, path_key, path_tokens
from .indicators import hypervolume, nondominated
from .instance import Instance
from .objectives import Evaluator, ObjectiveVector, RouteGenome, simulate


@dataclass(frozen=True)
class GAConfig:
    population: int = 64
    max_generations: int = 100
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    elite_count: int = 5
    tournament_size: int = 3
    convergence_threshold: float = 0.001
    convergence_window: int = 10
    time_budget_ms: float = 2000.0
    max_hops: int = 4
    k_max: int = 3
    rng_seed: int = 0
    min_weight: float = 1e-4
    ratio_sigma: float = 0.1
    track_hypervolume: bool = False
    max_evaluations: int | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if not self.time_budget_ms > 0:
            raise ValueError("time budget must be > 0")
        if self.k_max < 1 or self.max_hops < 1:
            raise ValueError("k_max and max_hops must be >= 1")


@dataclass
class Individual:
    genome: RouteGenome
    vector: ObjectiveVector
    rank: int = 0
    crowding: float = 0.0

    @property
    def net(self) -> float:
        return self.vector.net


@dataclass
class GenerationStats:
    generation: int
    best_net: float
    best_S: float
    front_size: int
    evaluations: int
    hypervolume: float | None = None


@dataclass
class GAResult:
    best: Individual
    front: list[Individual]
    population: list[Individual]
    generations_run: int
    evaluations: int
    elapsed_ms: float
    history: list[GenerationStats]
    phase_ms: dict[str, float]
    stop_reason: str


# --------------------------------------------------------------------------
# sorting and diversity


def _as_matrix(points) -> np.ndarray:
    rows = [p.maximize_form() if isinstance(p, ObjectiveVector) else
            (p.vector.maximize_form() if isinstance(p, Individual) else tuple(p)) for p in points]
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def non_dominated_sort(points) -> list[list[int]]:
    """Fronts of indices, best first; inputs are maximised component-wise.

    Accepts ObjectiveVectors, Individuals or raw rows already in maximise form.
    """
    f = _as_matrix(points)
    n = len(f)
    if n == 0:
        return []
    ge = (f[:, None, :] >= f[None, :, :]).all(axis=2)
    gt = (f[:, None, :] > f[None, :, :]).any(axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    remaining = np.ones(n, dtype=bool)
    while remaining.any():
        cur = np.flatnonzero(remaining & (count == 0))
        fronts.append(cur.tolist())
        remaining[cur] = False
        count = count - dom[cur].sum(axis=0)
    return fronts


def crowding_distance(points) -> np.ndarray:
    """Crowding distance per point of one front; boundaries are infinite."""
    f = _as_matrix(points)
    n, m = f.shape if f.size else (len(f), 0)
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        lo, hi = f[order[0], k], f[order[-1], k]
        d[order[0]] = d[order[-1]] = np.inf
        span = hi - lo
        if span <= 0:
            continue
        gaps = (f[order[2:], k] - f[order[:-2], k]) / span
        d[order[1:-1]] += gaps
    return d


def tournament_select(ranks: Sequence[int], crowding: Sequence[float], rng: random.Random, size: int = 3) -> int:
    """Index of the winner: lowest rank, then highest crowding, then lowest index."""
    n = len(ranks)
    if n == 0:
        raise ValueError("empty population")
    draws = [rng.randrange(n) for _ in range(size)]
    return min(draws, key=lambda i: (ranks[i], -crowding[i], i))


def project_simplex(v: Sequence[float]) -> list[float]:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = sorted(v, reverse=True)
    css = 0.0
    theta = 0.0
    for j, x in enumerate(u, start=1):
        css += x
        t = (css - 1.0) / j
        if x - t > 0:
            theta = t
    w = [max(x - theta, 0.0) for x in v]
    s = math.fsum(w)
    return [x / s for x in w]


# --------------------------------------------------------------------------
# problem context shared by operators


class RoutingContext:
    """Graph, evaluator and lookup tables for one instance."""

    def __init__(self, instance: Instance, evaluator: Evaluator | None = None, graph: DexGraph | None = None,
                 config: GAConfig | None = None, fallback_path: tuple | None = None):
        self.instance = instance
        self.config = config or GAConfig()
        self.graph = graph or build_graph(instance.pools)
        self.evaluator = evaluator or Evaluator(instance)
        self.src, self.dst = instance.order.src, instance.order.dst
        self.dist = hops_to(self.graph, self.dst)
        self.depth = {e: self.graph.pools[e.pool_id].reserve(e.token_in) * instance.price(e.token_in)
                      for e in self.graph.edges}
        self._fallback = fallback_path
        if self.dist.get(self.src, math.inf) > self.config.max_hops:
            raise NoFeasiblePath(f"no path {self.src}->{self.dst} within {self.config.max_hops} hops")

    @property
    def fallback_path(self) -> tuple:
        if self._fallback is None:
            from .baselines import baseline_routes
            try:
                self._fallback = baseline_routes(self.graph, self.instance, top=1, max_cycles=0,
                                                 max_hops=self.config.max_hops)[0]
            except NoPathExists as exc:
                raise NoFeasiblePath(str(exc)) from None
        return self._fallback

    def valid(self, path) -> bool:
        return is_valid_path(path, self.src, self.dst, self.config.max_hops)

    def random_path(self, rng: random.Random, attempts: int = 8) -> tuple | None:
        """Liquidity-biased random walk from src to dst that respects the hop limit."""
        limit = self.config.max_hops
        for _ in range(attempts):
            node, seen, path = self.src, {self.src}, []
            while node != self.dst:
                left = limit - len(path)
                opts = [e for e in self.graph.out_edges(node)
                        if e.token_out not in seen and self.dist.get(e.token_out, math.inf) <= left - 1]
                if not opts:
                    break
                e = _weighted_choice(opts, [self.depth[o] for o in opts], rng)
                path.append(e)
                seen.add(e.token_out)
                node = e.token_out
            if node == self.dst:
                return tuple(path)
        return None

    def marginal_output(self, path, amount: float) -> float:
        """Finite-difference marginal output of one path on the base market."""
        q = self.evaluator.quantity
        h = max(q * 1e-6, 1e-12)
        g1 = RouteGenome.single(path)
        out0 = simulate(g1, self.evaluator.market, amount).out if amount > 0 else 0.0
        out1 = simulate(g1, self.evaluator.market, amount + h).out
        return (out1 - out0) / h


def _weighted_choice(items, weights, rng):
    total = math.fsum(weights)
    if not total > 0:
        return items[rng.randrange(len(items))]
    r = rng.random() * total
    acc = 0.0
    for it, w in zip(items, weights):
        acc += w
        if r < acc:
            return it
    return items[-1]


# --------------------------------------------------------------------------
# variation operators


def repair(genome: RouteGenome, ctx: RoutingContext) -> RouteGenome:
    """Drop broken paths, merge duplicates, prune micro-weights, renormalise."""
    cfg = ctx.config
    merged: dict[str, list] = {}
    for p, w in zip(genome.paths, genome.weights):
        p = tuple(p)
        if not ctx.valid(p):
            continue
        w = w if (w == w and w > 0 and w != math.inf) else 0.0
        k = path_key(p)
        if k in merged:
            merged[k][1] += w
        else:
            merged[k] = [p, w]
    items = [(p, w) for p, w in merged.values() if w > 0]
    total = math.fsum(w for _, w in items)
    items = [(p, w) for p, w in items if total > 0 and w / total >= cfg.min_weight]
    if len(items) > cfg.k_max:
        order = sorted(range(len(items)), key=lambda i: (-items[i][1], i))[:cfg.k_max]
        items = [items[i] for i in sorted(order)]
    if not items:
        return RouteGenome.single(ctx.fallback_path)
    total = math.fsum(w for _, w in items)
    return RouteGenome(tuple(p for p, _ in items), tuple(w / total for _, w in items))


def _longest_shared_segment(a, b) -> tuple[int, int, int]:
    """(start in a, start in b, length) of the longest common contiguous edge run."""
    best = (0, 0, 0)
    for i in range(len(a)):
        for j in range(len(b)):
            n = 0
            while i + n < len(a) and j + n < len(b) and a[i + n] == b[j + n]:
                n += 1
            if n > best[2]:
                best = (i, j, n)
    return best


def crossover(parent_a: RouteGenome, parent_b: RouteGenome, ctx: RoutingContext, rng: random.Random,
              fitter: RouteGenome | None = None) -> RouteGenome:
    """Edge-preserving recombination of two path sets.

    Identical paths keep their averaged weight; paths sharing a contiguous
    edge run are stitched (prefix of one, shared run, suffix of the other);
    everything else is inherited. Excess paths are pruned by marginal output.
    """
    if rng.random() < 0.5:
        parent_a, parent_b = parent_b, parent_a
    keys_b = [path_key(p) for p in parent_b.paths]
    used_b = set()
    child: list[list] = []
    for pa, wa in zip(parent_a.paths, parent_a.weights):
        ka = path_key(pa)
        if ka in keys_b and keys_b.index(ka) not in used_b:
            j = keys_b.index(ka)
            used_b.add(j)
            child.append([pa, 0.5 * (wa + parent_b.weights[j])])
            continue
        stitched = None
        edges_a = set(pa)
        for j, pb in enumerate(parent_b.paths):
            if j in used_b or not edges_a.intersection(pb):
                continue
            i0, j0, n = _longest_shared_segment(pa, pb)
            if rng.random() < 0.5:
                cand = tuple(pa[:i0]) + tuple(pb[j0:])
            else:
                cand = tuple(pb[:j0]) + tuple(pa[i0:])
            if ctx.valid(cand):
                stitched = (j, cand)
                break
        if stitched is not None:
            j, cand = stitched
            used_b.add(j)
            child.append([cand, 0.5 * (wa + parent_b.weights[j])])
        else:
            child.append([pa, wa])
    for j, (pb, wb) in enumerate(zip(parent_b.paths, parent_b.weights)):
        if j not in used_b:
            child.append([pb, wb])
    total = math.fsum(w for _, w in child)
    if total <= 0:
        total = 1.0
    genome = RouteGenome(tuple(p for p, _ in child), tuple(w / total for _, w in child))
    genome = _merge_only(genome, ctx)
    if not any(ctx.valid(p) for p in genome.paths):
        return fitter or parent_a
    return repair(_prune_by_marginal(genome, ctx), ctx)


def _merge_only(genome: RouteGenome, ctx: RoutingContext) -> RouteGenome:
    merged: dict[str, list] = {}
    for p, w in zip(genome.paths, genome.weights):
        if not ctx.valid(p):
            continue
        k = path_key(p)
        if k in merged:
            merged[k][1] += w
        else:
            merged[k] = [p, w]
    if not merged:
        return RouteGenome((), ())
    return RouteGenome(tuple(v[0] for v in merged.values()), tuple(v[1] for v in merged.values()))


def _prune_by_marginal(genome: RouteGenome, ctx: RoutingContext) -> RouteGenome:
    k_max = ctx.config.k_max
    if genome.k <= k_max:
        return genome
    q = ctx.evaluator.quantity
    scores = [ctx.marginal_output(p, w * q) for p, w in zip(genome.paths, genome.weights)]
    keep = sorted(range(genome.k), key=lambda i: (-scores[i], i))[:k_max]
    keep.sort()
    return RouteGenome(tuple(genome.paths[i] for i in keep), tuple(genome.weights[i] for i in keep))


def _splice_add(g, ctx, rng):
    path = ctx.random_path(rng)
    if path is None or path in g.paths:
        return None
    k = g.k
    return RouteGenome(g.paths + (path,), tuple(w * k / (k + 1) for w in g.weights) + (1.0 / (k + 1),))


def _splice_drop(g, ctx, rng):
    i = rng.randrange(g.k)
    paths = g.paths[:i] + g.paths[i + 1:]
    weights = g.weights[:i] + g.weights[i + 1:]
    s = math.fsum(weights)
    if s <= 0:
        weights = tuple(1.0 / len(paths) for _ in paths)
        s = 1.0
    return RouteGenome(paths, tuple(w / s for w in weights))


def _edge_swap_options(path, ctx, i):
    e = path[i]
    toks = path_tokens(path)
    opts = [alt for alt in ctx.graph.parallel(e.token_in, e.token_out) if alt != e]
    if len(path) < ctx.config.max_hops:
        for first in ctx.graph.out_edges(e.token_in):
            mid = first.token_out
            if mid in toks:
                continue
            for second in ctx.graph.parallel(mid, e.token_out):
                opts.append((first, second))
    return opts


def _edge_swap(g, ctx, rng):
    spots = [(k, i) for k, p in enumerate(g.paths) for i in range(len(p))]
    rng.shuffle(spots)
    for k, i in spots:
        path = g.paths[k]
        opts = _edge_swap_options(path, ctx, i)
        if not opts:
            continue
        choice = opts[rng.randrange(len(opts))]
        repl = choice if isinstance(choice, tuple) else (choice,)
        new_path = path[:i] + repl + path[i + 1:]
        return RouteGenome(g.paths[:k] + (new_path,) + g.paths[k + 1:], g.weights)
    return None


def _pool_substitution(g, ctx, rng):
    spots = [(k, i) for k, p in enumerate(g.paths) for i in range(len(p))
             if len(ctx.graph.parallel(p[i].token_in, p[i].token_out)) > 1]
    if not spots:
        return None
    k, i = spots[rng.randrange(len(spots))]
    e = g.paths[k][i]
    alts = [a for a in ctx.graph.parallel(e.token_in, e.token_out) if a != e]
    alt = _weighted_choice(alts, [ctx.depth[a] for a in alts], rng)
    path = g.paths[k]
    new_path = path[:i] + (alt,) + path[i + 1:]
    return RouteGenome(g.paths[:k] + (new_path,) + g.paths[k + 1:], g.weights)


def _ratio_perturb(g, ctx, rng):
    sigma = ctx.config.ratio_sigma
    noisy = [max(w + rng.gauss(0.0, sigma), 0.0) for w in g.weights]
    return RouteGenome(g.paths, tuple(project_simplex(noisy)))


def applicable_mutations(g: RouteGenome, ctx: RoutingContext) -> list[str]:
    ops = []
    if g.k < ctx.config.k_max:
        ops.append("splice_add")
    if g.k > 1:
        ops.append("splice_drop")
    if any(_edge_swap_options(p, ctx, i) for p in g.paths for i in range(len(p))):
        ops.append("edge_swap")
    if any(len(ctx.graph.parallel(e.token_in, e.token_out)) > 1 for p in g.paths for e in p):
        ops.append("pool_substitution")
    if g.k > 1:
        ops.append("ratio_perturb")
    return ops


MUTATIONS: dict[str, Callable] = {
    "splice_add": _splice_add,
    "splice_drop": _splice_drop,
    "edge_swap": _edge_swap,
    "pool_substitution": _pool_substitution,
    "ratio_perturb": _ratio_perturb,
}


def apply_mutation(name: str, genome: RouteGenome, ctx: RoutingContext, rng: random.Random) -> RouteGenome:
    """Apply one named operator and repair; unchanged if it cannot apply."""
    if name not in applicable_mutations(genome, ctx):
        return genome
    out = MUTATIONS[name](genome, ctx, rng)
    return genome if out is None else repair(out, ctx)


def mutate(genome: RouteGenome, ctx: RoutingContext, rng: random.Random, force: bool = False) -> RouteGenome:
    if not force and rng.random() >= ctx.config.mutation_rate:
        return genome
    ops = applicable_mutations(genome, ctx)
    if not ops:
        return genome
    out = MUTATIONS[ops[rng.randrange(len(ops))]](genome, ctx, rng)
    return genome if out is None else repair(out, ctx)


def random_genome(ctx: RoutingContext, rng: random.Random) -> RouteGenome:
    k = rng.randint(1, ctx.config.k_max)
    paths = []
    for _ in range(k):
        p = ctx.random_path(rng)
        paths.append(p if p is not None else ctx.fallback_path)
    raw = [rng.expovariate(1.0) for _ in paths]
    s = math.fsum(raw)
    return repair(RouteGenome(tuple(paths), tuple(x / s for x in raw)), ctx)


def init_population(ctx: RoutingContext, seeds: Sequence[RouteGenome], rng: random.Random) -> list[RouteGenome]:
    """Deduplicated repaired seeds first, random feasible genomes after."""
    n = ctx.config.population
    out, seen = [], set()
    for s in seeds:
        g = repair(s, ctx)
        if g.key not in seen:
            seen.add(g.key)
            out.append(g)
        if len(out) == n:
            return out
    while len(out) < n:
        out.append(random_genome(ctx, rng))
    return out


# --------------------------------------------------------------------------
# the anytime loop


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


class GeneticRouter:
    """Resumable NSGA-II run; ``run`` may be called repeatedly with new deadlines."""

    def __init__(self, ctx: RoutingContext, seeds: Sequence[RouteGenome] = (), config: GAConfig | None = None):
        self.ctx = ctx
        self.config = config or ctx.config
        if ctx.config is not self.config:
            ctx.config = self.config
        self.rng = random.Random(self.config.rng_seed)
        self.seeds = list(seeds)
        self.population: list[Individual] = []
        self.generation = -1
        self.history: list[GenerationStats] = []
        self.phase_ms = {"fitness": 0.0, "sorting": 0.0, "selection": 0.0, "variation": 0.0}
        self.elapsed_ms = 0.0
        self.stall = 0
        self.stop_reason = ""
        self._archive: list[tuple] = []
        self._hv_ref: tuple | None = None
        self._best_net = -math.inf
        self._evals0 = ctx.evaluator.evaluations

    # evaluation -----------------------------------------------------------

    def _evaluate(self, genomes: Sequence[RouteGenome]) -> list[Individual]:
        t = _now_ms()
        ev = self.ctx.evaluator
        out = [Individual(g, ev.evaluate(g)) for g in genomes]
        self.phase_ms["fitness"] += _now_ms() - t
        return out

    def _rank(self, pop: list[Individual]) -> list[list[int]]:
        t = _now_ms()
        fronts = non_dominated_sort([ind.vector for ind in pop])
        for r, front in enumerate(fronts, start=1):
            d = crowding_distance([pop[i].vector for i in front])
            for i, di in zip(front, d):
                pop[i].rank = r
                pop[i].crowding = float(di)
        self.phase_ms["sorting"] += _now_ms() - t
        return fronts

    def _environmental(self, union: list[Individual]) -> list[Individual]:
        n = self.config.population
        fronts = self._rank(union)
        t = _now_ms()
        order = sorted(range(len(union)), key=lambda i: (-union[i].net, i))
        chosen = set(order[:min(self.config.elite_count, n)])
        for front in fronts:
            rest = [i for i in front if i not in chosen]
            if len(chosen) + len(rest) <= n:
                chosen.update(rest)
            else:
                rest.sort(key=lambda i: (-union[i].crowding, i))
                chosen.update(rest[: n - len(chosen)])
            if len(chosen) >= n:
                break
        self.phase_ms["selection"] += _now_ms() - t
        return [union[i] for i in sorted(chosen)]

    # bookkeeping ----------------------------------------------------------

    def _record(self) -> None:
        best = self.best()
        front = [ind for ind in self.population if ind.rank == 1]
        hv = None
        if self.config.track_hypervolume:
            pts = [ind.vector.maximize_form() for ind in front]
            if self._hv_ref is None:
                arr = np.asarray([ind.vector.maximize_form() for ind in self.population])
                lo, hi = arr.min(axis=0), arr.max(axis=0)
                span = np.maximum(hi - lo, 1e-9)
                self._hv_ref = tuple((lo - 0.5 * span - 1e-9).tolist())
            self._archive = nondominated(self._archive + pts)
            hv = hypervolume(self._archive, self._hv_ref)
        self.history.append(GenerationStats(self.generation, best.net, best.vector.S, len(front),
                                            self.ctx.evaluator.evaluations, hv))
        improvement = best.net - self._best_net
        if self.generation > 0 and improvement < self.config.convergence_threshold:
            self.stall += 1
        else:
            self.stall = 0
        self._best_net = max(self._best_net, best.net)

    def best(self) -> Individual:
        return min(self.population, key=lambda ind: (-ind.net, ind.rank, -ind.crowding))

    # main loop ------------------------------------------------------------

    def _initialise(self) -> None:
        genomes = init_population(self.ctx, self.seeds, self.rng)
        pop = self._evaluate(genomes)
        self._rank(pop)
        self.population = pop
        self.generation = 0
        self._record()

    def _offspring(self) -> list[RouteGenome]:
        cfg = self.config
        pop = self.population
        ranks = [ind.rank for ind in pop]
        crowd = [ind.crowding for ind in pop]
        kids = []
        t = _now_ms()
        sel_ms = 0.0
        while len(kids) < cfg.population:
            s0 = _now_ms()
            a = pop[tournament_select(ranks, crowd, self.rng, cfg.tournament_size)]
            b = pop[tournament_select(ranks, crowd, self.rng, cfg.tournament_size)]
            sel_ms += _now_ms() - s0
            if self.rng.random() < cfg.crossover_rate:
                fitter = a.genome if a.net >= b.net else b.genome
                child = crossover(a.genome, b.genome, self.ctx, self.rng, fitter)
            else:
                child = a.genome
            kids.append(mutate(child, self.ctx, self.rng))
        self.phase_ms["selection"] += sel_ms
        self.phase_ms["variation"] += _now_ms() - t - sel_ms
        return kids

    def _step(self) -> None:
        kids = self._evaluate(self._offspring())
        union, seen = [], set()
        for ind in self.population + kids:
            k = ind.genome.key
            if k not in seen:
                seen.add(k)
                union.append(ind)
        self.population = self._environmental(union)
        self.generation += 1
        self._record()

    def run(self, budget_ms: float | None = None) -> GAResult:
        """Advance until a stop rule fires or ``budget_ms`` (from this call) elapses."""
        cfg = self.config
        budget = cfg.time_budget_ms if budget_ms is None else budget_ms
        t0 = _now_ms()
        if self.generation < 0:
            self._initialise()
        gen_ms = None
        self.stop_reason = ""
        while True:
            if self.generation >= cfg.max_generations:
                self.stop_reason = "max_generations"
                break
            if self.stall >= cfg.convergence_window:
                self.stop_reason = "converged"
                break
            if cfg.max_evaluations is not None and self.ctx.evaluator.evaluations - self._evals0 >= cfg.max_evaluations:
                self.stop_reason = "max_evaluations"
                break
            spent = _now_ms() - t0
            if spent >= budget or (gen_ms is not None and spent + gen_ms > budget):
                self.stop_reason = "budget"
                break
            g0 = _now_ms()
            self._step()
            step = _now_ms() - g0
            gen_ms = step if gen_ms is None else max(step, 0.5 * gen_ms + 0.5 * step)
        self.elapsed_ms += _now_ms() - t0
        return self.result()

    def result(self) -> GAResult:
        front = [ind for ind in self.population if ind.rank == 1]
        return GAResult(self.best(), front, list(self.population), self.generation,
                        self.ctx.evaluator.evaluations - self._evals0, self.elapsed_ms, list(self.history),
                        dict(self.phase_ms), self.stop_reason)


def evolve(instance: Instance, seeds: Sequence[RouteGenome] = (), config: GAConfig | None = None,
           evaluator: Evaluator | None = None, graph: DexGraph | None = None,
           fallback_path: tuple | None = None) -> GAResult:
    """Run NSGA-II on ``instance`` within ``config.time_budget_ms``."""
    cfg = config or GAConfig()
    ctx = RoutingContext(instance, evaluator, graph, cfg, fallback_path)
    return GeneticRouter(ctx, seeds, cfg).run()
