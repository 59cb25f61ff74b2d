"""Small hand-built instances shared by several test modules."""

from hybridroute.amm import Token, UniV2Pool
from hybridroute.instance import Instance, Order


def univ2_instance(specs, q, gas=30.0, src="A", dst="B", iid="fixture"):
    """``specs``: (pool_id, token0, token1, reserve0, reserve1, fee)."""
    toks = sorted({s[1] for s in specs} | {s[2] for s in specs} | {src, dst})
    pools = tuple(UniV2Pool(*s) for s in specs)
    return Instance(iid, tuple(Token(t) for t in toks), pools, Order(src, dst, q), gas)


def two_identical_pools(q=100.0, gas=30.0):
    return univ2_instance([("p1", "A", "B", 1000.0, 1000.0, 0.003),
                           ("p2", "A", "B", 1000.0, 1000.0, 0.003)], q, gas, iid="two-identical")


def single_pool(q=10.0):
    return univ2_instance([("p1", "A", "B", 1000.0, 1000.0, 0.003)], q, iid="single")


def deep_and_shallow(q=50.0, deep=1000.0, shallow=100.0):
    return univ2_instance([("deep", "A", "B", deep, deep, 0.003),
                           ("shallow", "A", "B", shallow, shallow, 0.003)], q, gas=0.0, iid="deep-shallow")


def disconnected(q=10.0):
    return univ2_instance([("p1", "A", "C", 1000.0, 1000.0, 0.003),
                           ("p2", "D", "B", 1000.0, 1000.0, 0.003)], q, iid="disconnected")


def triangle(q=20.0):
    return univ2_instance([("ab1", "A", "B", 1000.0, 1000.0, 0.003), ("ab2", "A", "B", 600.0, 600.0, 0.0005),
                           ("ac", "A", "C", 800.0, 1600.0, 0.003), ("cb", "C", "B", 1600.0, 800.0, 0.003),
                           ("ac2", "A", "C", 400.0, 800.0, 0.003)], q, iid="triangle")
