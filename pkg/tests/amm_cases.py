"""Randomised swap cases checked against the mpmath oracles."""

from __future__ import annotations

import math
import random

import oracles
from hybridroute.amm import BalancerPool, CurvePool, DodoPool, KyberPool, UniV2Pool, UniV3Pool

KINDS = ("UniV2", "UniV3", "BalancerWeighted", "CurveStable", "DodoPMM", "KyberDMM")
TOL = {"CurveStable": 1e-6}
DEFAULT_TOL = 1e-9


def _loguniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _case(kind, rng):
    """(pool, token_in, amount, oracle_value)."""
    fee = rng.choice((0.0, 0.0005, 0.003, 0.01))
    if kind == "UniV2":
        x, y = _loguniform(rng, 1e-2, 1e7), _loguniform(rng, 1e-2, 1e7)
        pool = UniV2Pool("p", "A", "B", x, y, fee)
        zero = rng.random() < 0.5
        rin, rout = (x, y) if zero else (y, x)
        amt = rin * _loguniform(rng, 1e-8, 10.0)
        return pool, "A" if zero else "B", amt, oracles.v2_out(rin, rout, fee, amt)
    if kind == "UniV3":
        n = rng.randint(1, 5)
        s0 = _loguniform(rng, 0.05, 20.0)
        w = math.exp(rng.uniform(0.05, 0.5))
        off = rng.random() * min(1.0, n / 2)
        edges = [s0 * w ** (j - n / 2 - off) for j in range(n + 1)]
        bands = tuple((edges[j], edges[j + 1], _loguniform(rng, 1.0, 1e6)) for j in range(n))
        pool = UniV3Pool("p", "A", "B", s0, bands, fee)
        zero = rng.random() < 0.5
        scale = pool.reserve("A" if zero else "B")
        amt = scale * _loguniform(rng, 1e-8, 2.0)
        return pool, "A" if zero else "B", amt, oracles.v3_out(s0, bands, fee, amt, zero)
    if kind == "BalancerWeighted":
        wa = rng.uniform(0.05, 0.95)
        ba, bb = _loguniform(rng, 1.0, 1e6), _loguniform(rng, 1.0, 1e6)
        pool = BalancerPool("p", ("A", "B"), (ba, bb), (wa, 1.0 - wa), fee)
        zero = rng.random() < 0.5
        bi, bo, wi, wo = (ba, bb, wa, 1 - wa) if zero else (bb, ba, 1 - wa, wa)
        amt = bi * _loguniform(rng, 1e-6, 2.0)
        return pool, "A" if zero else "B", amt, oracles.balancer_out(bi, bo, wi, wo, fee, amt)
    if kind == "CurveStable":
        amp = _loguniform(rng, 1.0, 2000.0)
        base = _loguniform(rng, 1e2, 1e6)
        bal = (base * rng.uniform(0.3, 1.7), base * rng.uniform(0.3, 1.7))
        rates = (1.0, _loguniform(rng, 0.5, 2.0))
        pool = CurvePool("p", ("A", "B"), bal, amp, fee, rates)
        i = rng.randrange(2)
        amt = bal[i] * _loguniform(rng, 1e-6, 0.5)
        return pool, ("A", "B")[i], amt, oracles.curve_out(bal, rates, amp, fee, i, 1 - i, amt)
    if kind == "DodoPMM":
        b0 = _loguniform(rng, 1.0, 1e5)
        k = rng.uniform(0.05, 0.9)
        p0 = _loguniform(rng, 0.01, 100.0)
        base_res = b0 * rng.uniform(0.5, 1.5)
        quote_res = b0 * p0 * rng.uniform(0.5, 3.0)
        pool = DodoPool("p", "A", "B", p0, k, b0, base_res, quote_res, fee)
        sell = rng.random() < 0.5
        if sell:
            amt = b0 * _loguniform(rng, 1e-6, 0.3)
        else:
            amt = b0 * p0 * _loguniform(rng, 1e-6, 0.3)
        return pool, "A" if sell else "B", amt, oracles.dodo_out(p0, k, b0, base_res, fee, amt, sell)
    if kind == "KyberDMM":
        amp = rng.uniform(1.0, 5.0)
        x, y = _loguniform(rng, 1.0, 1e6), _loguniform(rng, 1.0, 1e6)
        pool = KyberPool.amplified("p", "A", "B", x, y, amp, fee)
        zero = rng.random() < 0.5
        vin, vout, rout = (x * amp, y * amp, y) if zero else (y * amp, x * amp, x)
        amt = (x if zero else y) * _loguniform(rng, 1e-6, 0.5)
        ref = oracles.kyber_out(vin, vout, fee, amt)
        return pool, "A" if zero else "B", amt, ref
    raise ValueError(kind)


def check_kind(kind: str, n: int = 1000, seed: int = 0) -> dict:
    """Worst relative error of ``n`` swaps that use their full input."""
    rng = random.Random(f"{kind}-{seed}")
    worst = 0.0
    checked = clamped = 0
    while checked < n:
        pool, tin, amt, ref = _case(kind, rng)
        res = pool.swap(tin, pool.other(tin), amt)
        if res.amount_in_used < amt:
            clamped += 1
            continue
        worst = max(worst, _rel(res.amount_out, ref))
        checked += 1
    return {"kind": kind, "checked": checked, "clamped": clamped, "max_rel_err": worst,
            "tol": TOL.get(kind, DEFAULT_TOL)}


def v2_conservation(n: int = 1000, seed: int = 0) -> float:
    """Worst relative drift of x*y after a swap, on the fee-adjusted input."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(n):
        x, y = _loguniform(rng, 1e-2, 1e7), _loguniform(rng, 1e-2, 1e7)
        fee = rng.choice((0.0, 0.003))
        pool = UniV2Pool("p", "A", "B", x, y, fee)
        res = pool.swap("A", "B", x * _loguniform(rng, 1e-8, 10.0))
        k1 = res.new_pool.reserve0 * res.new_pool.reserve1
        worst = max(worst, abs(k1 - x * y) / (x * y))
    return worst
