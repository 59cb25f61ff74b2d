"""Flat key/value run configuration read from JSON or TOML.

Every tunable lives under one key. Command-line flags override file values,
which override the defaults below.
"""

from __future__ import annotations

import json
import os
from typing import Any, Mapping

from .errors import InvalidConfig
from .hybrid import HybridConfig
from .instance import GAS_REGIMES
from .nsga2 import GAConfig
from .objectives import RiskParams, default_theta

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULTS: dict[str, Any] = {
    # GA
    "population": 64,
    "max_generations": 100,
    "crossover_rate": 0.8,
    "mutation_rate": 0.2,
    "elite_count": 5,
    "tournament_size": 3,
    "convergence_threshold": 0.001,
    "convergence_window": 10,
    "time_budget_ms": 2000.0,
    "max_hops": 4,
    "k_max": 3,
    "rng_seed": 0,
    "max_evaluations": None,
    # deployment weights
    "lambda_s": 1.0,
    "lambda_sigma": 0.3,
    "lambda_r": 0.2,
    # risk and scenarios
    "n_scenarios": 10,
    "cvar_alpha": 0.95,
    "sandwich_coef": 0.1,
    "utilization_penalty": 0.05,
    "reversion_penalty": 0.05,
    "utilization_limit": 0.5,
    # gas regimes, gwei
    "gas_low": GAS_REGIMES["low"],
    "gas_medium": GAS_REGIMES["medium"],
    "gas_high": GAS_REGIMES["high"],
    # controller
    "tau": 0.5,
    "det_budget_ms": 500.0,
    "breaker_limit": 3,
    # benchmark
    "seeds": 30,
    "workers": 8,
    "bench_budget_ms": 1000.0,
    "bench_max_evaluations": 640,
    "soft_target_ms": 530.0,
    "bootstrap_resamples": 10000,
    "confidence_level": 0.95,
}

_GA_KEYS = ("population", "max_generations", "crossover_rate", "mutation_rate", "elite_count", "tournament_size",
            "convergence_threshold", "convergence_window", "time_budget_ms", "max_hops", "k_max", "rng_seed",
            "max_evaluations")


def _coerce(key: str, value):
    default = DEFAULTS[key]
    if value is None:
        return None
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int) or key == "max_evaluations":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"bad value for {key}: {value!r}") from None
    return value


def parse_config(data: Mapping[str, Any]) -> dict[str, Any]:
    """Validate a flat mapping against the known keys; unknown keys are rejected."""
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
    return {k: _coerce(k, v) for k, v in data.items()}


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Defaults, then the file at ``path`` (``.toml`` or JSON), then ``overrides``."""
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            if os.fspath(path).endswith(".toml"):
                with open(path, "rb") as fh:
                    raw = tomllib.load(fh)
            else:
                with open(path) as fh:
                    raw = json.load(fh)
        except (OSError, ValueError) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidConfig("config must be a flat key/value map")
        cfg.update(parse_config(raw))
    if overrides:
        cfg.update(parse_config({k: v for k, v in overrides.items() if v is not None}))
    return cfg


def ga_config(cfg: Mapping[str, Any], bench: bool = False) -> GAConfig:
    kw = {k: cfg[k] for k in _GA_KEYS}
    if bench:
        kw["time_budget_ms"] = cfg["bench_budget_ms"]
        kw["max_evaluations"] = cfg["bench_max_evaluations"]
    try:
        return GAConfig(**kw)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc


def risk_params(cfg: Mapping[str, Any]) -> RiskParams:
    return RiskParams(cfg["sandwich_coef"], cfg["utilization_penalty"], cfg["reversion_penalty"],
                      cfg["utilization_limit"])


def hybrid_config(cfg: Mapping[str, Any]) -> HybridConfig:
    ga = ga_config(cfg)
    try:
        return HybridConfig(tau=cfg["tau"], det_budget_ms=cfg["det_budget_ms"], breaker_limit=cfg["breaker_limit"],
                            total_budget_ms=cfg["time_budget_ms"], ga=ga)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc


def gas_regimes(cfg: Mapping[str, Any]) -> dict[str, float]:
    return {"low": float(cfg["gas_low"]), "medium": float(cfg["gas_medium"]), "high": float(cfg["gas_high"])}


def theta(cfg: Mapping[str, Any], regime: str = "medium") -> tuple[float, ...]:
    """Deployment weights for scalarising an objective vector."""
    return default_theta(regime, cfg["lambda_s"], cfg["lambda_sigma"], cfg["lambda_r"])


def bench_config(cfg: Mapping[str, Any]):
    from .bench.runner import BenchConfig

    return BenchConfig(ga=ga_config(cfg, bench=True), det_budget_ms=cfg["det_budget_ms"],
                       soft_target_ms=cfg["soft_target_ms"], tau=cfg["tau"], n_scenarios=cfg["n_scenarios"],
                       cvar_alpha=cfg["cvar_alpha"], risk=risk_params(cfg), gas_gwei=gas_regimes(cfg))
