"""Objective vector F = (S, -G, -Sigma, -R) for split-flow routes.

S is the ETH-valued surplus of executing the order, G the priced gas cost,
Sigma the CVaR of surplus losses under perturbed markets and R a
dimensionless execution-risk score.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .amm import Pool, VenueKind
from .errors import InfeasiblePath, InvalidVector, NegativeTheta, UnknownVenue
from .graph import PoolEdge, is_valid_path, path_key
from .instance import Instance

K_MAX = 3
MAX_HOPS = 4


@dataclass(frozen=True)
class RouteGenome:
    """A path set with split ratios; construction does not validate."""

    paths: tuple[tuple[PoolEdge, ...], ...]
    weights: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.paths)

    @property
    def key(self) -> tuple:
        return (tuple(path_key(p) for p in self.paths), self.weights)

    def hops(self) -> int:
        return sum(len(p) for p in self.paths)

    def distinct_edges(self) -> list[PoolEdge]:
        seen = {}
        for p in self.paths:
            for e in p:
                seen.setdefault(e, None)
        return list(seen)

    def check(self, src: str, dst: str, k_max: int = K_MAX, max_hops: int = MAX_HOPS) -> None:
        if not 1 <= len(self.paths) <= k_max:
            raise InfeasiblePath(f"path count {len(self.paths)} outside [1, {k_max}]")
        if len(self.weights) != len(self.paths):
            raise InvalidVector("one weight per path required")
        if any(not (w >= 0) for w in self.weights) or abs(math.fsum(self.weights) - 1.0) > 1e-9:
            raise InvalidVector(f"weights must lie on the simplex: {self.weights}")
        for p in self.paths:
            if not is_valid_path(p, src, dst, max_hops):
                raise InfeasiblePath(f"invalid path {path_key(p)} for {src}->{dst}")

    def to_dict(self) -> dict:
        return {
            "paths": [[{"pool": e.pool_id, "in": e.token_in, "out": e.token_out} for e in p] for p in self.paths],
            "weights": [repr(w) for w in self.weights],
        }

    @classmethod
    def single(cls, path) -> "RouteGenome":
        return cls((tuple(path),), (1.0,))


@dataclass(frozen=True)
class ObjectiveVector:
    S: float
    G: float
    Sigma: float
    R: float

    @property
    def net(self) -> float:
        return self.S - self.G

    def maximize_form(self) -> tuple[float, float, float, float]:
        return (self.S, -self.G, -self.Sigma, -self.R)

    def to_dict(self) -> dict:
        return {"S": self.S, "G": self.G, "Sigma": self.Sigma, "R": self.R}


def _check_nan(v: ObjectiveVector) -> None:
    if any(x != x for x in (v.S, v.G, v.Sigma, v.R)):
        raise InvalidVector(f"NaN in objective vector {v}")


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Pareto dominance in (S max, G min, Sigma min, R min)."""
    _check_nan(a)
    _check_nan(b)
    return (a.S >= b.S and a.G <= b.G and a.Sigma <= b.Sigma and a.R <= b.R
            and (a.S, a.G, a.Sigma, a.R) != (b.S, b.G, b.Sigma, b.R))


def scalarize(v: ObjectiveVector, theta: Sequence[float]) -> float:
    if len(theta) != 4:
        raise ValueError("theta must have four components")
    if any(t < 0 for t in theta):
        raise NegativeTheta(f"theta components must be >= 0: {tuple(theta)}")
    return sum(t * x for t, x in zip(theta, v.maximize_form()))


GAS_LAMBDA = {"low": 0.5, "medium": 1.0, "high": 2.0}


def default_theta(regime: str = "medium", lambda_s=1.0, lambda_sigma=0.3, lambda_r=0.2) -> tuple[float, ...]:
    raw = (lambda_s, GAS_LAMBDA[regime], lambda_sigma, lambda_r)
    total = sum(raw)
    return tuple(x / total for x in raw)


DEFAULT_HOP_GAS = {
    VenueKind.UNIV2: 150_000,
    VenueKind.UNIV3: 200_000,
    VenueKind.BALANCER: 250_000,
    VenueKind.CURVE: 200_000,
    VenueKind.DODO: 180_000,
    VenueKind.KYBER: 180_000,
}


@dataclass(frozen=True)
class GasModel:
    gas_price_gwei: float = 30.0
    per_hop: Mapping[VenueKind, int] = field(default_factory=lambda: dict(DEFAULT_HOP_GAS))
    per_tx: int = 80_000
    margin: float = 0.10
    cow_match_base: int = 50_000
    cow_match_per_token: int = 10_000

    def __post_init__(self):
        if self.gas_price_gwei < 0 or self.per_tx < 0 or self.margin < 0:
            raise ValueError("gas model parameters must be non-negative")
        if any(v < 0 for v in self.per_hop.values()):
            raise ValueError("per-hop gas must be non-negative")

    def hop_gas(self, kind: VenueKind) -> int:
        try:
            return self.per_hop[kind]
        except KeyError:
            raise UnknownVenue(str(kind)) from None

    def units(self, genome: RouteGenome) -> float:
        # a pool edge used by several paths settles as one aggregated swap
        hops = sum(self.hop_gas(e.kind) for e in genome.distinct_edges())
        return (self.per_tx + hops) * (1.0 + self.margin)

    def cost_eth(self, genome: RouteGenome) -> float:
        return self.units(genome) * self.gas_price_gwei * 1e-9

    def match_units(self, n_tokens: int) -> float:
        return self.cow_match_base + self.cow_match_per_token * n_tokens


@dataclass(frozen=True)
class RiskParams:
    lambda_sand: float = 0.1
    lambda_inc: float = 0.05
    lambda_rev: float = 0.05
    utilization_limit: float = 0.5

    def __post_init__(self):
        if min(self.lambda_sand, self.lambda_inc, self.lambda_rev) < 0:
            raise ValueError("risk coefficients must be >= 0")


@dataclass(frozen=True)
class ScenarioSet:
    """Per-pool (price multiplier, depth multiplier) perturbations."""

    scenarios: tuple[dict, ...]
    alpha: float = 0.95
    seed: int = 0

    def __len__(self):
        return len(self.scenarios)

    @classmethod
    def generate(cls, pool_ids: Sequence[str], size: int = 10, seed: int = 0, alpha: float = 0.95,
                 sigma: float = 0.02, shock_fraction: float = 0.2, shock: float = 0.10) -> "ScenarioSet":
        if size < 1:
            raise ValueError("scenario set needs at least one scenario")
        rng = random.Random(seed)
        ids = sorted(pool_ids)
        out = []
        for _ in range(size):
            sc = {}
            for pid in ids:
                price = math.exp(sigma * rng.gauss(0.0, 1.0))
                depth = 1.0
                if rng.random() < shock_fraction:
                    depth = 1.0 + shock if rng.random() < 0.5 else 1.0 - shock
                sc[pid] = (price, depth)
            out.append(sc)
        return cls(tuple(out), alpha, seed)

    @classmethod
    def identity(cls, pool_ids: Sequence[str], size: int = 1, alpha: float = 0.95) -> "ScenarioSet":
        return cls(tuple({pid: (1.0, 1.0) for pid in pool_ids} for _ in range(size)), alpha, 0)

    def markets(self, pools: Mapping[str, Pool]) -> list[dict[str, Pool]]:
        out = []
        for sc in self.scenarios:
            m = {}
            for pid, pool in pools.items():
                price, depth = sc.get(pid, (1.0, 1.0))
                m[pid] = pool if (price == 1.0 and depth == 1.0) else pool.perturbed(price, depth)
            out.append(m)
        return out


def cvar(losses: Sequence[float], alpha: float = 0.95) -> float:
    """Mean of the worst ceil((1 - alpha) n) losses, floored at zero."""
    if not losses:
        return 0.0
    n = len(losses)
    m = max(1, math.ceil((1.0 - alpha) * n - 1e-9))
    worst = sorted(losses, reverse=True)[:m]
    return max(0.0, math.fsum(worst) / m)


@dataclass
class HopTrace:
    edge: PoolEdge
    amount_in: float
    amount_out: float
    utilization: float
    ticks_crossed: int


@dataclass
class Simulation:
    out: float
    path_outputs: list[float]
    hops: list[HopTrace]
    path_slippage: list[float] | None = None


def simulate(genome: RouteGenome, market: Mapping[str, Pool], quantity: float,
             trace: bool = False, slippage: bool = False) -> Simulation:
    """Execute the split order path by path on a private copy of ``market``.

    Paths run in index order, so later paths see the state left by earlier
    ones when they share a pool.
    """
    state = dict(market) if len(genome.paths) > 1 else market
    total = 0.0
    outs = []
    hops = []
    slips = [] if slippage else None
    for path, w in zip(genome.paths, genome.weights):
        amt = w * quantity
        q0 = amt
        spot = 1.0
        for e in path:
            pool = state[e.pool_id]
            if slippage:
                spot *= pool.spot(e.token_in, e.token_out)
            if amt <= 0:
                if trace:
                    hops.append(HopTrace(e, 0.0, 0.0, 0.0, 0))
                continue
            res = pool.swap(e.token_in, e.token_out, amt)
            if trace:
                reserve = pool.reserve(e.token_in)
                hops.append(HopTrace(e, amt, res.amount_out, amt / reserve, res.ticks_crossed))
            if len(genome.paths) > 1 or len(path) > 1:
                if state is market:
                    state = dict(market)
                state[e.pool_id] = res.new_pool
            amt = res.amount_out
        path_out = amt if q0 > 0 else 0.0
        outs.append(path_out)
        total += path_out
        if slippage:
            if q0 <= 0:
                slips.append(0.0)
            else:
                slips.append(1.0 - (path_out / q0) / spot if spot > 0 else 1.0)
    return Simulation(total, outs, hops, slips)


def _plan(paths) -> list[tuple[tuple[str, ...], bool]]:
    # per path: its pool ids, and whether its post-trade state is needed
    # (a pool repeats within the path or a later path trades on it)
    plan = []
    for k, p in enumerate(paths):
        ids = tuple(e.pool_id for e in p)
        later = {e.pool_id for r in paths[k + 1:] for e in r}
        plan.append((ids, len(set(ids)) < len(ids) or any(pid in later for pid in ids)))
    return plan


class Evaluator:
    """Objective evaluation for one instance with a per-genome cache.

    The market and scenarios are fixed at construction, so cached vectors
    never go stale within a solve.
    """

    def __init__(self, instance: Instance, gas: GasModel | None = None, risk: RiskParams | None = None,
                 scenarios: ScenarioSet | None = None, n_scenarios: int = 10, alpha: float = 0.95,
                 scenario_seed: int | None = None):
        self.instance = instance
        self.order = instance.order
        self.gas = gas or GasModel(instance.gas_price_gwei)
        self.risk = risk or RiskParams()
        self.market = instance.pool_map
        if scenarios is None:
            seed = scenario_seed if scenario_seed is not None else (instance.seed or 0)
            scenarios = ScenarioSet.generate(list(self.market), n_scenarios, seed, alpha)
        self.scenarios = scenarios
        self.scenario_markets = scenarios.markets(self.market)
        self.p_src = instance.price(self.order.src)
        self.p_dst = instance.price(self.order.dst)
        self._cache: dict = {}
        self._path_cache: dict = {}
        self._edge_index: dict = {}
        self._plans: dict = {}
        self.evaluations = 0

    @property
    def quantity(self) -> float:
        return self.order.quantity

    def surplus_from_out(self, out: float, quantity: float | None = None) -> float:
        q = self.quantity if quantity is None else quantity
        return out * self.p_dst - q * self.p_src

    def surplus(self, genome: RouteGenome, market: Mapping[str, Pool] | None = None) -> float:
        if market is None:
            return self.surplus_from_out(self._run(genome, -1)[0])
        return self.surplus_from_out(simulate(genome, market, self.quantity).out)

    def gas_cost(self, genome: RouteGenome) -> float:
        return self.gas.cost_eth(genome)

    def net(self, genome: RouteGenome) -> float:
        return self.evaluate(genome).net

    def _hop_index(self, e) -> tuple[int, int]:
        ij = self._edge_index.get(e)
        if ij is None:
            pool = self.market[e.pool_id]
            ij = self._edge_index[e] = (pool._index(e.token_in), pool._index(e.token_out))
        return ij

    def _walk(self, m_idx: int, path, amount: float, moved: Mapping[str, Pool] | None = None, full: bool = True):
        """Run one path; returns (output, sum of squared utilisations,
        stressed hops, post-trade pools by id). ``moved`` overrides pools
        already traded against by earlier paths. Without ``full`` the
        post-trade pools are skipped, which is only sound when no pool
        is visited twice."""
        base = self.market if m_idx < 0 else self.scenario_markets[m_idx]
        limit = self.risk.utilization_limit
        post: dict[str, Pool] = {}
        amt = amount
        sand = 0.0
        stressed = 0
        for e in path:
            if amt <= 0:
                break
            pid = e.pool_id
            pool = post.get(pid) or (moved.get(pid) if moved else None) or base[pid]
            i, j = self._hop_index(e)
            if full:
                res = pool._swap(i, j, amt)
                post[pid] = res.new_pool
                out, ticks = res.amount_out, res.ticks_crossed
            else:
                out, ticks = pool.quote_out(i, j, amt)
            u = amt / pool.reserve_at(i)
            sand += u * u
            if ticks > 0 or u > limit:
                stressed += 1
            amt = out
        return (amt if amount > 0 else 0.0, sand, stressed, post)

    def _path(self, m_idx: int, path, amount: float, full: bool):
        key = (m_idx, path, amount, full)
        hit = self._path_cache.get(key)
        if hit is None:
            hit = self._path_cache[key] = self._walk(m_idx, path, amount, full=full)
        return hit

    def _run(self, genome: RouteGenome, m_idx: int) -> tuple[float, float, int]:
        # Paths run in index order. A path that touches no pool moved by an
        # earlier path behaves as if alone, so its result is memoised.
        q = self.quantity
        total, sand, stressed = 0.0, 0.0, 0
        moved: dict[str, Pool] | None = None
        plan = self._plans.get(genome.paths)
        if plan is None:
            plan = self._plans[genome.paths] = _plan(genome.paths)
        for (ids, full), p, w in zip(plan, genome.paths, genome.weights):
            if moved and any(pid in moved for pid in ids):
                o, s2, st, post = self._walk(m_idx, p, w * q, moved, full=True)
            else:
                o, s2, st, post = self._path(m_idx, p, w * q, full)
            total += o
            sand += s2
            stressed += st
            if full and post:
                moved = dict(post) if moved is None else {**moved, **post}
        return total, sand, stressed

    def dispersion(self, genome: RouteGenome, base_s: float | None = None) -> float:
        if self.quantity == 0:
            return 0.0
        s0 = self.surplus(genome) if base_s is None else base_s
        losses = [s0 - self.surplus_from_out(self._run(genome, i)[0]) for i in range(len(self.scenario_markets))]
        return cvar(losses, self.scenarios.alpha)

    def risk_score(self, genome: RouteGenome) -> float:
        _, sand, stressed = self._run(genome, -1)
        p = self.risk
        return p.lambda_sand * sand + p.lambda_inc * (genome.hops() + genome.k) + p.lambda_rev * stressed

    def evaluate(self, genome: RouteGenome) -> ObjectiveVector:
        key = genome.key
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.evaluations += 1
        out, sand, stressed = self._run(genome, -1)
        s = self.surplus_from_out(out)
        p = self.risk
        r = p.lambda_sand * sand + p.lambda_inc * (genome.hops() + genome.k) + p.lambda_rev * stressed
        vec = ObjectiveVector(s, self.gas_cost(genome), self.dispersion(genome, s), r)
        self._cache[key] = vec
        return vec

    def clear_cache(self) -> None:
        self._cache.clear()
        self._path_cache.clear()
        self._plans.clear()


def evaluate_surplus(genome: RouteGenome, pools: Mapping[str, Pool], instance: Instance) -> float:
    genome.check(instance.order.src, instance.order.dst, k_max=max(K_MAX, genome.k))
    out = simulate(genome, pools, instance.order.quantity).out
    return out * instance.price(instance.order.dst) - instance.order.quantity * instance.price(instance.order.src)


def evaluate_gas(genome: RouteGenome, gas: GasModel) -> float:
    return gas.cost_eth(genome)


def evaluate_vector(genome: RouteGenome, instance: Instance, **kwargs) -> ObjectiveVector:
    return Evaluator(instance, **kwargs).evaluate(genome)
