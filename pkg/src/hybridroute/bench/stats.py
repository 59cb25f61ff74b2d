"""Paired statistics over benchmark records."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import EmptyInput, TooFewSamples
from .generate import STRATA

EXACT_MAX_N = 50
BASELINES = ("water_fill", "simplex_grid")


def delta_net_surplus(record: dict) -> float | None:
    """GA net minus the best baseline net; None when no baseline was found.

    A missing GA result gives None as well, but such records still count as
    losses in ``win_rate``.
    """
    m = record["methods"]
    base = [m[b]["net_surplus"] for b in BASELINES if m.get(b, {}).get("found")]
    if not base or not m.get("ga", {}).get("found"):
        return None
    return m["ga"]["net_surplus"] - max(base)


def _signed_rank_counts(n: int) -> list[int]:
    """Number of sign patterns for each value of W+ with ranks 1..n."""
    counts = [1]
    for r in range(1, n + 1):
        nxt = counts + [0] * r
        for w, c in enumerate(counts):
            nxt[w + r] += c
        counts = nxt
    return counts


def _ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def wilcoxon_signed_rank(deltas: Iterable[float], exact_max_n: int = EXACT_MAX_N) -> float:
    """Two-sided p-value of the signed-rank test; zeros are dropped.

    Exact null distribution when n <= ``exact_max_n`` and there are no tied
    magnitudes, otherwise the normal approximation with tie and continuity
    correction.
    """
    d = [float(x) for x in deltas if x != 0]
    n = len(d)
    if n < 5:
        raise TooFewSamples(f"need at least 5 non-zero deltas, got {n}")
    mags = [abs(x) for x in d]
    ranks = _ranks(mags)
    w_plus = math.fsum(r for r, x in zip(ranks, d) if x > 0)
    total = n * (n + 1) / 2.0
    w_minus = total - w_plus
    tied = len(set(mags)) < n
    if n <= exact_max_n and not tied:
        counts = _signed_rank_counts(n)
        w = int(round(min(w_plus, w_minus)))
        tail = sum(counts[: w + 1])
        return min(1.0, 2.0 * tail / 2.0 ** n)
    mean = total / 2.0
    groups: dict[float, int] = defaultdict(int)
    for m in mags:
        groups[m] += 1
    var = n * (n + 1) * (2 * n + 1) / 24.0 - sum(t ** 3 - t for t in groups.values()) / 48.0
    if var <= 0:
        return 1.0
    z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def bootstrap_ci(deltas: Sequence[float], level: float = 0.95, resamples: int = 10000,
                 seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(deltas, dtype=float)
    if len(x) < 2:
        raise TooFewSamples("bootstrap needs n >= 2")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(x), size=(resamples, len(x)))
    means = x[idx].mean(axis=1)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [a, 1.0 - a])
    m = float(x.mean())
    # guard the percentile property against rounding in the mean
    return min(float(lo), m), max(float(hi), m)


def cohens_d(deltas: Sequence[float]) -> float:
    """Paired effect size mean/sd; a zero spread returns a signed infinity."""
    x = np.asarray(deltas, dtype=float)
    if len(x) < 2:
        raise TooFewSamples("cohens_d needs n >= 2")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd < 1e-12:
        if mean == 0:
            return 0.0
        return math.inf if mean > 0 else -math.inf
    return mean / sd


def win_rate(records: Sequence[dict], where: Callable[[dict], bool] | None = None) -> float:
    """Share of records whose GA net strictly beats the best baseline."""
    sel = [r for r in records if where is None or where(r)]
    if not sel:
        raise EmptyInput("no records match the filter")
    wins = 0
    for r in sel:
        d = delta_net_surplus(r)
        if d is not None and d > 0:
            wins += 1
    return wins / len(sel)


def ecdf(values: Iterable[float]) -> list[tuple[float, float]]:
    x = sorted(float(v) for v in values)
    if not x:
        raise EmptyInput("ecdf of no values")
    n = len(x)
    out = []
    for i, v in enumerate(x):
        if i + 1 < n and x[i + 1] == v:
            continue
        out.append((v, (i + 1) / n))
    return out


@dataclass
class StratumStats:
    stratum: str
    n: int
    n_paired: int
    mean: float
    ci_lo: float
    ci_hi: float
    wilcoxon_p: float | None
    cohens_d: float | None
    win_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


def stratum_stats(stratum: str, records: Sequence[dict], resamples: int = 10000, seed: int = 0) -> StratumStats:
    if not records:
        raise EmptyInput(f"no records for {stratum}")
    deltas = [d for d in map(delta_net_surplus, records) if d is not None]
    n = len(deltas)
    if n == 0:
        mean = lo = hi = math.nan
    elif n == 1:
        mean = lo = hi = deltas[0]
    else:
        mean = float(np.mean(deltas))
        lo, hi = bootstrap_ci(deltas, resamples=resamples, seed=seed)
    try:
        p = wilcoxon_signed_rank(deltas)
    except TooFewSamples:
        p = None
    d = cohens_d(deltas) if n >= 2 else None
    return StratumStats(stratum, len(records), n, mean, lo, hi, p, d, win_rate(records))


LEVELS = ("low", "medium", "high")


def win_rate_grid(records: Sequence[dict]) -> dict:
    """Win rate per gas regime and fragmentation level (only populated cells)."""
    cells: dict = defaultdict(list)
    for r in records:
        cells[(r["gas_regime"], r["fragmentation"])].append(r)
    out: dict = {}
    for gas in LEVELS:
        row = {f: win_rate(cells[(gas, f)]) for f in LEVELS if cells.get((gas, f))}
        if row:
            out[gas] = row
    return out


def _quantiles(xs: Sequence[float]) -> dict:
    q = np.quantile(np.asarray(xs, dtype=float), [0.5, 0.9, 0.95, 0.99])
    return {"p50": float(q[0]), "p90": float(q[1]), "p95": float(q[2]), "p99": float(q[3])}


def _stratum_order(sid: str) -> int:
    for i, s in enumerate(STRATA):
        if s.id == sid:
            return i
    return len(STRATA)


def aggregate(records: Sequence[dict], resamples: int = 10000, seed: int = 0) -> dict:
    """Per-stratum statistics, GA latency quantiles by gas regime, phase shares."""
    if not records:
        raise EmptyInput("no records to aggregate")
    by_stratum: dict[str, list] = defaultdict(list)
    for r in records:
        by_stratum[r["stratum"]].append(r)
    strata = [stratum_stats(s, by_stratum[s], resamples, seed).to_dict()
              for s in sorted(by_stratum, key=lambda s: (_stratum_order(s), s))]

    lat: dict[str, list] = defaultdict(list)
    for r in records:
        g = r["methods"].get("ga", {})
        if g.get("found"):
            lat[r["gas_regime"]].append(g["elapsed_ms"])
    latency = {reg: _quantiles(v) for reg, v in sorted(lat.items())}

    phases: dict[str, float] = defaultdict(float)
    for r in records:
        for k, v in r.get("ga", {}).get("phase_ms", {}).items():
            phases[k] += v
    total = sum(phases.values())
    shares = {k: (v / total if total > 0 else 0.0) for k, v in sorted(phases.items())}

    def rates(key):
        out = {}
        for val in sorted({r[key] for r in records}):
            out[val] = win_rate(records, lambda r, v=val: r[key] == v)
        return out

    return {
        "n_records": len(records),
        "strata": strata,
        "win_rate_by_fragmentation": rates("fragmentation"),
        "win_rate_by_gas": rates("gas_regime"),
        "win_rate_by_gas_fragmentation": win_rate_grid(records),
        "latency": {"ga_ms": latency, "phase_shares": shares},
    }
