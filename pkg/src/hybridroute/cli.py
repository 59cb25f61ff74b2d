"""Command-line entry point: solve, gen, bench, stats, figures."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import config as config_mod
from .baselines import baseline_routes, baseline_seeds, deterministic_solve
from .bench.figures import emit_figures
from .bench.generate import generate_instance, parse_strata, parse_stratum
from .bench.runner import dumps, load_results, run_benchmark, write_results
from .bench.stats import aggregate
from .errors import NoFeasiblePath, NoPathExists, RoutingError
from .graph import build_graph
from .hybrid import solve_hybrid
from .instance import Instance
from .nsga2 import evolve
from .objectives import Evaluator, scalarize
from .safety import CircuitBreaker

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("hybridroute")


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _route_doc(instance: Instance, engine: str, genome, vector, found: bool, elapsed_ms: float, cfg, **extra) -> dict:
    doc = {"instance": instance.id, "engine": engine, "found": found, "elapsed_ms": elapsed_ms}
    if found:
        regime = (instance.stratum or {}).get("gas_regime", "medium")
        doc.update(route=genome.to_dict(), objectives=vector.to_dict(), net_surplus=vector.net,
                   scalarized=scalarize(vector, config_mod.theta(cfg, regime)))
    doc.update(extra)
    return doc


def cmd_solve(args) -> int:
    cfg = config_mod.load_config(args.config, {"rng_seed": args.seed, "time_budget_ms": args.budget_ms,
                                                  "max_generations": args.generations})
    inst = Instance.load(args.instance)
    ev = Evaluator(inst, risk=config_mod.risk_params(cfg), n_scenarios=cfg["n_scenarios"], alpha=cfg["cvar_alpha"])
    graph = build_graph(inst.pools)
    if args.engine == "det":
        r = deterministic_solve(inst, cfg["det_budget_ms"], ev, graph, k_max=cfg["k_max"], max_hops=cfg["max_hops"])
        doc = _route_doc(inst, "det", r.genome, r.vector, r.found, r.elapsed_ms, cfg, method=r.method.value)
    elif args.engine == "ga":
        paths = baseline_routes(graph, inst, max_hops=cfg["max_hops"])
        r = evolve(inst, baseline_seeds(paths, cfg["k_max"]), config_mod.ga_config(cfg), ev, graph, paths[0])
        doc = _route_doc(inst, "ga", r.best.genome, r.best.vector, True, r.elapsed_ms, cfg,
                         generations=r.generations_run, stop_reason=r.stop_reason,
                         front=[ind.vector.to_dict() for ind in r.front])
    else:
        hcfg = config_mod.hybrid_config(cfg)
        r = solve_hybrid(inst, hcfg, CircuitBreaker(hcfg.breaker_limit), ev, graph)
        doc = _route_doc(inst, "hybrid", r.genome, r.vector, r.found, r.elapsed_ms, cfg, chosen=r.chosen,
                         score=r.score, fallback_triggered=r.fallback_triggered,
                         validation={k: v.to_dict() for k, v in r.validation.items()})
    _write(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK if doc["found"] else EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    cfg = config_mod.load_config(args.config)
    st = parse_stratum(args.stratum)
    inst = generate_instance(st, args.seed)
    gwei = config_mod.gas_regimes(cfg)[st.gas_regime]
    if gwei != inst.gas_price_gwei:
        inst = inst.with_gas_price(gwei)
    _write(inst.to_json(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = config_mod.load_config(args.config, {"seeds": args.seeds, "workers": args.workers,
                                               "bench_budget_ms": args.budget_ms})
    bcfg = config_mod.bench_config(cfg)
    strata = parse_strata(args.strata)

    def progress(done, total):
        log.info("bench %d/%d", done, total)

    records = run_benchmark(strata, cfg["seeds"], bcfg, cfg["workers"], args.seed_start, progress)
    write_results(args.out, records, bcfg)
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = config_mod.load_config(args.config)
    records, _ = load_results(args.input)
    _write(dumps(aggregate(records, cfg["bootstrap_resamples"])), args.out)
    return EXIT_OK


def cmd_figures(args) -> int:
    cfg = config_mod.load_config(args.config)
    records, _ = load_results(args.input)
    for path in emit_figures(records, args.out, aggregate(records, cfg["bootstrap_resamples"])):
        log.info("wrote %s", path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridroute", description="Multi-path DEX order routing.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="route one instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--engine", choices=("ga", "det", "hybrid"), default="hybrid")
    s.add_argument("--budget-ms", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--generations", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="write a synthetic instance")
    g.add_argument("--stratum", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="run the stratified benchmark")
    b.add_argument("--strata", default="all")
    b.add_argument("--seeds", type=int)
    b.add_argument("--seed-start", type=int, default=1)
    b.add_argument("--workers", type=int)
    b.add_argument("--budget-ms", type=float)
    b.add_argument("--out", default="results.json")
    b.set_defaults(func=cmd_bench)

    st = sub.add_parser("stats", help="aggregate a results file")
    st.add_argument("--in", dest="input", required=True)
    st.add_argument("--out")
    st.set_defaults(func=cmd_stats)

    f = sub.add_parser("figures", help="write figure data files")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_figures)

    for sp in (s, g, b, st, f):
        sp.add_argument("--config", help="JSON or .toml flat key/value file")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (NoFeasiblePath, NoPathExists) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RoutingError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
