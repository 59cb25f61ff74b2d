"""Pre-deployment validation caps and the GA circuit breaker."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

from .graph import is_valid_path
from .objectives import Evaluator, ObjectiveVector, RouteGenome, simulate


@dataclass(frozen=True)
class ValidationCaps:
    max_slippage: float = 0.10
    max_gas_eth: float = 1.0
    sim_tolerance: float = 1e-9
    k_max: int = 3
    max_hops: int = 4

    def __post_init__(self):
        if not (self.max_slippage > 0 and self.max_gas_eth > 0):
            raise ValueError("validation caps must be positive")


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    detail: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": dict(self.checks)}


def validate_route(genome: RouteGenome, vector: ObjectiveVector, evaluator: Evaluator,
                   caps: ValidationCaps | None = None) -> ValidationReport:
    """Run every cap and name each failed check; never raises on bad routes."""
    caps = caps or ValidationCaps()
    order = evaluator.order
    rep = ValidationReport()
    w = genome.weights
    rep.checks["simplex"] = (len(w) == len(genome.paths) and all(x >= 0 for x in w)
                             and abs(math.fsum(w) - 1.0) <= 1e-9)
    rep.checks["paths"] = (1 <= genome.k <= caps.k_max and
                           all(is_valid_path(p, order.src, order.dst, caps.max_hops) for p in genome.paths))
    if not rep.checks["paths"]:
        rep.checks.update(slippage=False, gas=False, simulation=False)
        return rep
    try:
        sim = simulate(genome, evaluator.market, order.quantity, slippage=True)
    except Exception:
        rep.checks.update(slippage=False, gas=False, simulation=False)
        return rep
    worst = max(sim.path_slippage) if sim.path_slippage else 0.0
    rep.detail["max_path_slippage"] = worst
    rep.checks["slippage"] = worst <= caps.max_slippage
    gas = evaluator.gas_cost(genome)
    rep.detail["gas_eth"] = gas
    rep.checks["gas"] = gas <= caps.max_gas_eth and abs(gas - vector.G) <= caps.sim_tolerance * max(1.0, gas)
    s = evaluator.surplus_from_out(sim.out)
    rep.detail["resimulated_S"] = s
    rep.checks["simulation"] = abs(s - vector.S) <= caps.sim_tolerance * max(1.0, abs(s))
    return rep


class CircuitBreaker:
    """Counts consecutive GA validation failures across solves.

    Opens after ``limit`` consecutive failures, which forces one
    deterministic-only cycle; that cycle closes it again.
    """

    def __init__(self, limit: int = 3):
        if limit < 1:
            raise ValueError("breaker limit must be >= 1")
        self.limit = limit
        self._failures = 0
        self._open = False
        self._lock = threading.Lock()

    @property
    def is_open(self) -> bool:
        with self._lock:
            return self._open

    @property
    def consecutive_failures(self) -> int:
        with self._lock:
            return self._failures

    def record(self, ga_ran: bool, ga_valid: bool | None = None) -> bool:
        """Feed one solve outcome; returns the state after the update (True = open)."""
        with self._lock:
            if not ga_ran:
                # a GA-off cycle resets the breaker
                self._open = False
                self._failures = 0
            elif ga_valid:
                self._failures = 0
            else:
                self._failures += 1
                if self._failures >= self.limit:
                    self._open = True
            return self._open

    def reset(self) -> None:
        with self._lock:
            self._failures = 0
            self._open = False


def breaker_state(history, limit: int = 3) -> str:
    """Replay a history of (ga_ran, ga_valid) pairs; returns 'open' or 'closed'."""
    br = CircuitBreaker(limit)
    for item in history:
        if isinstance(item, tuple):
            br.record(*item)
        else:
            br.record(item.ga_result is not None, item.ga_valid)
    return "open" if br.is_open else "closed"
