"""Seeded sweep over strata: baselines, GA and hybrid on each instance."""

from __future__ import annotations

import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

from ..baselines import BaselineResult, DeterministicOutcome, baseline_seeds, deterministic_solve
from ..graph import build_graph
from ..hybrid import HybridConfig, solve_hybrid
from ..instance import GAS_REGIMES
from ..indicators import nondominated
from ..nsga2 import GAConfig, GAResult, GeneticRouter, RoutingContext
from ..objectives import Evaluator, ObjectiveVector, RiskParams, RouteGenome
from .generate import Stratum, generate_instance, parse_stratum

METHODS = ("water_fill", "simplex_grid", "ga", "hybrid")
# wall-clock measurements; stripped when comparing runs for determinism
TIMING_KEYS = frozenset({"elapsed_ms", "phase_ms", "generated_at", "latency"})
MAX_WORKERS = 8


def _bench_ga() -> GAConfig:
    return GAConfig(time_budget_ms=1000.0, max_evaluations=640)


@dataclass(frozen=True)
class BenchConfig:
    ga: GAConfig = field(default_factory=_bench_ga)
    det_budget_ms: float = 500.0
    soft_target_ms: float = 530.0
    tau: float = 0.5
    n_scenarios: int = 10
    cvar_alpha: float = 0.95
    risk: RiskParams = field(default_factory=RiskParams)
    gas_gwei: dict = field(default_factory=lambda: dict(GAS_REGIMES))

    def hybrid(self) -> HybridConfig:
        return HybridConfig(tau=self.tau, det_budget_ms=self.det_budget_ms,
                            total_budget_ms=self.det_budget_ms + self.ga.time_budget_ms, ga=self.ga)

    def to_dict(self) -> dict:
        return {"ga": asdict(self.ga), "det_budget_ms": self.det_budget_ms, "soft_target_ms": self.soft_target_ms,
                "tau": self.tau, "n_scenarios": self.n_scenarios, "cvar_alpha": self.cvar_alpha,
                "risk": asdict(self.risk), "gas_gwei": dict(self.gas_gwei)}

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        ga = GAConfig(**d.get("ga", {})) if "ga" in d else _bench_ga()
        risk = RiskParams(**d["risk"]) if "risk" in d else RiskParams()
        rest = {k: v for k, v in d.items() if k not in ("ga", "risk")}
        return cls(ga=ga, risk=risk, **rest)


def _method_entry(genome: RouteGenome | None, vector: ObjectiveVector | None, elapsed_ms: float,
                  found: bool, error: str | None = None) -> dict:
    ok = found and vector is not None
    entry = {
        "found": ok,
        "net_surplus": vector.net if ok else None,
        "gross_surplus": vector.S if ok else None,
        "gas_eth": vector.G if ok else None,
        "swap_count": genome.hops() if ok and genome is not None else 0,
        "paths": genome.k if ok and genome is not None else 0,
        "elapsed_ms": max(0.0, elapsed_ms),
    }
    if error:
        entry["error"] = error
    return entry


def _baseline_entry(r: BaselineResult) -> dict:
    return _method_entry(r.genome, r.vector, r.elapsed_ms, r.found)


def front_size_2d(vectors: Sequence[ObjectiveVector]) -> int:
    """Distinct non-dominated (net surplus, -gas) points among ``vectors``."""
    pts = [(v.net, -v.G) for v in vectors]
    return len(nondominated(pts)) if pts else 0


def ga_seed(stratum: Stratum, seed: int, base: int = 0) -> int:
    return zlib.crc32(f"ga|{stratum.id}|{seed}|{base}".encode())


def run_one(stratum, seed: int, config: BenchConfig | None = None) -> dict:
    """Generate one instance and run all four methods; never raises."""
    cfg = config or BenchConfig()
    st = parse_stratum(stratum)
    rec: dict = {"instance_id": f"{st.id}-s{seed}", "stratum": st.id, **st.to_dict(), "seed": seed}
    methods: dict = {}
    try:
        inst = generate_instance(st, seed)
        gwei = cfg.gas_gwei.get(st.gas_regime, inst.gas_price_gwei)
        if gwei != inst.gas_price_gwei:
            inst = inst.with_gas_price(gwei)
        graph = build_graph(inst.pools)
        ev = Evaluator(inst, risk=cfg.risk, n_scenarios=cfg.n_scenarios, alpha=cfg.cvar_alpha)
        rec["quantity"] = inst.order.quantity
        rec["gas_gwei"] = inst.gas_price_gwei
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        for m in METHODS:
            methods[m] = _method_entry(None, None, 0.0, False, f"{type(exc).__name__}: {exc}")
        rec["methods"] = methods
        rec["ga_front"] = []
        return rec

    det: DeterministicOutcome | None = None
    try:
        det = deterministic_solve(inst, cfg.det_budget_ms, ev, graph, k_max=cfg.ga.k_max,
                                  max_hops=cfg.ga.max_hops, detailed=True)
        methods["water_fill"] = _baseline_entry(det.water_fill)
        methods["simplex_grid"] = _baseline_entry(det.simplex_grid)
    except Exception as exc:  # noqa: BLE001
        err = f"{type(exc).__name__}: {exc}"
        methods["water_fill"] = _method_entry(None, None, 0.0, False, err)
        methods["simplex_grid"] = _method_entry(None, None, 0.0, False, err)

    ga: GAResult | None = None
    try:
        gcfg = replace(cfg.ga, rng_seed=ga_seed(st, seed, cfg.ga.rng_seed))
        paths = det.paths if det is not None else []
        ctx = RoutingContext(inst, ev, graph, gcfg, paths[0] if paths else None)
        ga = GeneticRouter(ctx, baseline_seeds(paths, gcfg.k_max), gcfg).run()
        methods["ga"] = _method_entry(ga.best.genome, ga.best.vector, ga.elapsed_ms, True)
    except Exception as exc:  # noqa: BLE001
        methods["ga"] = _method_entry(None, None, 0.0, False, f"{type(exc).__name__}: {exc}")

    try:
        hy = solve_hybrid(inst, cfg.hybrid(), None, ev, graph,
                          det_result=det.best if det is not None else None, ga_result=ga)
        entry = _method_entry(hy.genome, hy.vector, hy.elapsed_ms, hy.found)
        entry.update(chosen=hy.chosen, score=hy.score, fallback=hy.fallback_triggered,
                     det_gross=det.best.vector.S if det is not None and det.best.found else None)
        methods["hybrid"] = entry
    except Exception as exc:  # noqa: BLE001
        methods["hybrid"] = _method_entry(None, None, 0.0, False, f"{type(exc).__name__}: {exc}")

    rec["methods"] = {m: methods[m] for m in METHODS}
    if ga is not None:
        front = [ind.vector for ind in ga.front]
        rec["ga"] = {
            "generations": ga.generations_run,
            "evaluations": ga.evaluations,
            "stop_reason": ga.stop_reason,
            "best_net_history": [h.best_net for h in ga.history],
            "front_size": len(front),
            "front_size_2d": front_size_2d(front),
            "phase_ms": dict(ga.phase_ms),
        }
        rec["ga_front"] = [[v.S, v.G, v.Sigma, v.R] for v in front]
    else:
        rec["ga_front"] = []
    return rec


def _job(args):
    st_id, seed, cfg_dict = args
    return run_one(st_id, seed, BenchConfig.from_dict(cfg_dict))


def run_benchmark(strata: Iterable, seeds_per_stratum: int = 30, config: BenchConfig | None = None,
                  workers: int | None = None, seed_start: int = 1, progress=None) -> list[dict]:
    """One record per (stratum, seed), ordered by stratum then seed."""
    cfg = config or BenchConfig()
    sts = [parse_stratum(s) for s in strata]
    jobs = [(st.id, seed, cfg.to_dict()) for st in sts for seed in range(seed_start, seed_start + seeds_per_stratum)]
    n = min(workers or MAX_WORKERS, MAX_WORKERS, os.cpu_count() or 1, max(len(jobs), 1))
    if n <= 1:
        out = []
        for j in jobs:
            out.append(_job(j))
            if progress:
                progress(len(out), len(jobs))
        return out
    with ProcessPoolExecutor(max_workers=n) as pool:
        out = []
        # map preserves submission order, so the output is schedule-independent
        for rec in pool.map(_job, jobs, chunksize=1):
            out.append(rec)
            if progress:
                progress(len(out), len(jobs))
    return out


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def results_document(records: list[dict], config: BenchConfig | None = None) -> dict:
    return {"config": (config or BenchConfig()).to_dict(), "records": records}


def dumps(doc) -> str:
    return json.dumps(_finite(doc), indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_results(path, records: list[dict], config: BenchConfig | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(results_document(records, config)))


def load_results(path) -> tuple[list[dict], dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        return doc, {}
    return doc["records"], doc.get("config", {})


def strip_timing(obj):
    """Copy of ``obj`` without wall-clock fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def canonical_bytes(doc) -> bytes:
    return dumps(strip_timing(doc)).encode()
